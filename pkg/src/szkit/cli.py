"""Command-line front end: ``szkit <command> [options]``.

Every command prints a JSON document (sorted keys) to stdout and, with
``--out``, writes the same document to a file.  Exit codes: 0 on success
or a passing verification, 1 on a failing verification or a numerical
error, 2 on usage errors and malformed input.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from .config import PROFILES, load_config
from .errors import SzkitError

_NEGATIVE_VALUE = re.compile(r"^-[\d.\[(]")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--k -2:2`` into ``--k=-2:2`` so argparse accepts leading minus signs."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


class UsageError(Exception):
    pass


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON argument: {exc}") from None


def _json_file(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None


def _interval(text: str, cast=float) -> tuple:
    parts = text.split(":")
    if len(parts) == 1:
        parts = [parts[0], parts[0]]
    if len(parts) != 2:
        raise UsageError(f"expected an interval a:b, got {text!r}")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError:
        raise UsageError(f"expected an interval a:b, got {text!r}") from None


def _load_ham(path: str):
    from .hamiltonian import Hamiltonian

    data = _json_file(path)
    try:
        return Hamiltonian.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid Hamiltonian in {path}: {exc}") from None


# ------------------------------------------------------------ commands


def cmd_cz(args, cfg):
    from .cz import cz_index
    from .linalg import SymplecticPath, hamiltonian_exp_path

    if args.path:
        data = _json_file(args.path)
        try:
            path = SymplecticPath.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"invalid path file: {exc}") from None
    elif args.matrix:
        path = hamiltonian_exp_path(np.asarray(_json_arg(args.matrix), dtype=float), cfg.path_samples)
    else:
        raise UsageError("cz needs --path or --matrix")
    return cz_index(path, cfg).to_json(), True


def cmd_cz_exp(args, cfg):
    from .cz import cz_exp_formula

    S = np.asarray(_json_arg(args.matrix), dtype=float)
    return {"index": cz_exp_formula(S, cfg).index}, True


def cmd_wind(args, cfg):
    from .chern import sphere_transition_loop, wind, wind_sp
    from .linalg import SymplecticPath, UnitaryLoop

    if args.sphere_transition:
        loop = sphere_transition_loop(args.samples, reverse=args.reverse).loop
        return {"winding": wind_sp(loop, cfg)}, True
    if not args.loop:
        raise UsageError("wind needs --loop or --sphere-transition")
    data = _json_file(args.loop)
    try:
        if "unitary" in data:
            re_ = np.asarray(data["unitary"]["real"], dtype=float)
            im_ = np.asarray(data["unitary"]["imag"], dtype=float)
            times = data.get("times", np.linspace(0.0, 1.0, len(re_)))
            return {"winding": wind(UnitaryLoop(times, re_ + 1j * im_), cfg)}, True
        return {"winding": wind_sp(SymplecticPath.from_json(data), cfg)}, True
    except (KeyError, TypeError) as exc:
        raise UsageError(f"invalid loop file: {exc}") from None


def cmd_flow(args, cfg):
    from .dynamics import flow

    H = _load_ham(args.ham)
    p = np.asarray(_json_arg(args.point), dtype=float)
    step = args.step or cfg.ode_step
    res = flow(H, p, args.t0, args.t1, step)
    drift = None
    if H.is_autonomous:
        vals = H.value(0.0, res.path)
        drift = float(np.max(np.abs(vals - vals[0])))
    return {"point": res.point.tolist(), "t0": args.t0, "t1": args.t1, "step": step, "energy_drift": drift}, True


def cmd_orbits(args, cfg):
    from .dynamics import find_periodic_orbits

    H = _load_ham(args.ham)
    orbits = find_periodic_orbits(
        H, _interval(args.period), grid=args.grid, T_samples=args.t_samples, step=args.step or cfg.ode_step, box=args.box, cfg=cfg
    )
    return {
        "orbits": [o.to_json() for o in orbits],
        "count": len(orbits),
        "dropped_seeds": orbits.dropped,
        "seeds": orbits.seeds,
    }, True


def cmd_twist(args, cfg):
    from .dynamics import classify_twist

    H = _load_ham(args.ham)
    p = np.asarray(_json_arg(args.point), dtype=float)
    return classify_twist(H, p, args.period, cfg=cfg).to_json(), True


def cmd_hofer(args, cfg):
    from .hofer import hofer_norms

    return hofer_norms(_load_ham(args.ham), grid=args.grid, cfg=cfg).to_json(), True


def cmd_spectrum(args, cfg):
    from .dynamics import find_periodic_orbits
    from .hofer import action_spectrum

    H = _load_ham(args.ham)
    orbits = find_periodic_orbits(H, (1.0, 1.0), grid=args.grid, step=args.step or cfg.ode_step, box=args.box, cfg=cfg)
    rep = action_spectrum(H, orbits, _interval(args.k, int), cfg=cfg)
    out = rep.to_json()
    out["orbits"] = [o.to_json() for o in orbits]
    return out, rep.coset_ok


def cmd_disc(args, cfg):
    from .geometry import Loop, canonical_disc, disc_areas

    data = _json_file(args.loop)
    try:
        loop = Loop.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid loop file: {exc}") from None
    disc = canonical_disc(loop, args.radial, cfg)
    areas = disc_areas(disc)
    ok = abs(areas.symplectic) <= areas.riemannian + 10 * areas.error
    return {
        "symplectic_area": areas.symplectic,
        "riemannian_area": areas.riemannian,
        "quadrature_error": areas.error,
        "center": disc.center.point.tolist(),
        "max_radius": disc.center.max_radius,
        "area_inequality_holds": ok,
    }, ok


def cmd_verify(args, cfg):
    from . import verify as V

    exp = args.experiment
    if exp == "theorem-c":
        rep = V.verify_theorem_c(args.samples, cfg=cfg)
    elif exp == "transition-s2":
        rep = V.verify_transition_s2(args.samples, cfg)
    elif exp == "cz-oracle":
        rep = V.verify_cz_oracle(args.cases, cfg.seed, cfg)
    elif exp == "energy-gap":
        if not args.ham:
            raise UsageError("energy-gap needs --ham")
        gap = V.energy_gap_ode(_load_ham(args.ham), cfg=cfg)
        rep = V.VerificationReport("energy-gap", {"ham": args.ham})
        rep.values["e_H"] = gap
        rep.check("minimum positive critical-value gap is positive", gap, 0.0, passed=gap > 0)
    elif exp == "energy-identity":
        if args.ham and args.ham2:
            H, K = _load_ham(args.ham), _load_ham(args.ham2)
        elif args.ham or args.ham2:
            raise UsageError("energy-identity needs both --ham and --ham2, or neither")
        else:
            rng = np.random.default_rng(cfg.seed)
            H, K = V.random_torus_morse(rng), V.random_torus_morse(rng)
        rep = V.verify_energy_identity(H, K, rho_margin=args.margin, step=args.step or 1e-3, L=args.L)
    elif exp == "prop64":
        deltas = [float(d) for d in args.deltas.split(",")]
        rep = V.verify_prop64(deltas=deltas, delta2=args.delta2, eps=args.eps, grid=args.grid, step=args.step or 5e-3, cfg=cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown experiment {exp}")
    return rep.to_json(include_runtime=args.runtime), rep.passed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="szkit", description="Symplectic index, action and Hofer-norm toolkit")
    parser.add_argument("--config", help="JSON file overriding tolerances, grid sizes, ODE steps and seed")
    parser.add_argument("--seed", type=int, help="random seed (overrides the config)")
    parser.add_argument("--out", help="also write the JSON report to this path")
    parser.add_argument("--tol-profile", choices=sorted(PROFILES), default="default")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cz", help="Conley-Zehnder index by crossing forms")
    p.add_argument("--path", help="JSON file with times and matrices of a symplectic path")
    p.add_argument("--matrix", help="symmetric S as JSON; uses the path exp(J0 S t)")
    p.set_defaults(func=cmd_cz)

    p = sub.add_parser("cz-exp", help="closed formula mu^-(S) - n")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_cz_exp)

    p = sub.add_parser("wind", help="winding number of a loop")
    p.add_argument("--loop")
    p.add_argument("--sphere-transition", action="store_true")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--reverse", action="store_true")
    p.set_defaults(func=cmd_wind)

    p = sub.add_parser("flow", help="integrate a Hamiltonian flow")
    p.add_argument("--ham", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--step", type=float)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("orbits", help="periodic-orbit search")
    p.add_argument("--ham", required=True)
    p.add_argument("--period", default="1:1")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--t-samples", type=int, default=3)
    p.add_argument("--step", type=float)
    p.add_argument("--box", type=float, default=1.0)
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("twist", help="twist classification of a fixed critical point")
    p.add_argument("--ham", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--period", type=float, default=1.0)
    p.set_defaults(func=cmd_twist)

    p = sub.add_parser("hofer", help="Hofer semi-norms and norm")
    p.add_argument("--ham", required=True)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_hofer)

    p = sub.add_parser("spectrum", help="action spectrum of the 1-periodic orbits")
    p.add_argument("--ham", required=True)
    p.add_argument("--k", default="0:0")
    p.add_argument("--grid", type=int, default=12)
    p.add_argument("--step", type=float)
    p.add_argument("--box", type=float, default=1.0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("disc", help="canonical small disc and its areas")
    p.add_argument("--loop", required=True)
    p.add_argument("--radial", type=int, default=64)
    p.set_defaults(func=cmd_disc)

    p = sub.add_parser("verify", help="run a verification experiment")
    p.add_argument(
        "experiment",
        choices=["theorem-c", "energy-identity", "energy-gap", "prop64", "transition-s2", "cz-oracle"],
    )
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--ham")
    p.add_argument("--ham2")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--L", type=float, default=40.0)
    p.add_argument("--step", type=float)
    p.add_argument("--deltas", default="1e-2,1e-3,1e-4")
    p.add_argument("--delta2", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=12)
    p.add_argument("--runtime", action="store_true", help="include wall-clock runtime in the report")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.tol_profile)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        doc, ok = args.func(args, cfg)
    except UsageError as exc:
        print(f"szkit: error: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, OSError) as exc:
        print(f"szkit: error: {exc}", file=sys.stderr)
        return 2
    except SzkitError as exc:
        print(f"szkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"szkit: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
