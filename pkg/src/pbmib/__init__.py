"""Poisson solvation energies with a matched-interface finite-difference scheme."""
from .errors import PBError
from .model import Atom, DielectricModel, RunConfig, SoluteModel, UnitSystem, load_pqr
from .oracle import KirkwoodConfig, born_energy, kirkwood_case, kirkwood_energy
from .pipeline import SweepSpec, run_pipeline, run_single, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Atom", "DielectricModel", "KirkwoodConfig", "PBError", "RunConfig", "SoluteModel",
    "SweepSpec", "UnitSystem", "born_energy", "kirkwood_case", "kirkwood_energy", "load_pqr",
    "run_pipeline", "run_single", "run_sweep",
]
