"""Centralized numerical tolerances and experiment sizes."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Config:
    symplectic_tol: float = 1e-9
    symmetric_tol: float = 1e-12
    eig_eps: float = 1e-10
    nondegeneracy_tol: float = 1e-8
    kernel_rel_tol: float = 1e-8
    crossing_separation: float = 1e-6
    crossing_bisect_tol: float = 1e-10
    path_samples: int = 400
    wind_residual: float = 0.05
    loop_closure_tol: float = 1e-8
    karcher_step_tol: float = 1e-10
    karcher_max_iter: int = 10_000
    ode_step: float = 1e-3
    orbit_residual: float = 1e-8
    newton_max_iter: int = 30
    tikhonov: float = 1e-8
    dedup_tol: float = 1e-6
    critical_tol: float = 1e-10
    seed: int = 0

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


PROFILES = {
    "default": Config(),
    "strict": Config(
        symplectic_tol=1e-11,
        nondegeneracy_tol=1e-10,
        crossing_bisect_tol=1e-12,
        path_samples=800,
        ode_step=5e-4,
        orbit_residual=1e-10,
    ),
}

DEFAULT = PROFILES["default"]


def load_config(path: str | Path | None = None, profile: str = "default") -> Config:
    """Build a config from a named profile, overridden by a JSON file if given."""
    if profile not in PROFILES:
        raise ValueError(f"unknown tolerance profile {profile!r}")
    cfg = PROFILES[profile]
    if path is None:
        return cfg
    data = json.loads(Path(path).read_text())
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return cfg.replace(**data)
