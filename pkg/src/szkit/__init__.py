"""Conley-Zehnder indices, action spectra and Hofer norms for low-dimensional models."""

from .config import DEFAULT, Config, load_config
from .errors import SzkitError
from .linalg import J0, SymplecticPath, UnitaryLoop, exp_path, hamiltonian_exp_path, omega0
from .cz import cz_exp_formula, cz_index, loop_power, loop_shift
from .chern import CappingClass, recapping_index, sphere_transition_loop, wind, wind_sp
from .geometry import EuclideanR2n, FlatTorus, Loop, RoundSphere, canonical_disc, center_of_mass, disc_areas
from .hamiltonian import Hamiltonian, harmonic_oscillator, height_function, trig_hamiltonian
from .dynamics import classify_twist, find_periodic_orbits, flow, flow_map, linearized_flow
from .hofer import action_spectrum, action_value, hofer_distance, hofer_norms

__version__ = "0.1.0"

__all__ = [
    "DEFAULT", "Config", "load_config", "SzkitError",
    "J0", "SymplecticPath", "UnitaryLoop", "exp_path", "hamiltonian_exp_path", "omega0",
    "cz_exp_formula", "cz_index", "loop_power", "loop_shift",
    "CappingClass", "recapping_index", "sphere_transition_loop", "wind", "wind_sp",
    "EuclideanR2n", "FlatTorus", "Loop", "RoundSphere", "canonical_disc", "center_of_mass", "disc_areas",
    "Hamiltonian", "harmonic_oscillator", "height_function", "trig_hamiltonian",
    "classify_twist", "find_periodic_orbits", "flow", "flow_map", "linearized_flow",
    "action_spectrum", "action_value", "hofer_distance", "hofer_norms",
]
