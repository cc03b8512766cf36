"""Solute description: atoms, dielectric parameters, units, and the atom file format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelError, ParseError

COULOMB_KCAL = 332.0716  # kcal*A/(mol*e^2)


@dataclass(frozen=True)
class Atom:
    center: tuple[float, float, float]
    charge: float
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3 or not all(math.isfinite(v) for v in c):
            raise ModelError(f"atom center must be 3 finite numbers, got {self.center!r}")
        if not self.radius > 0:
            raise ModelError(f"atom radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "charge", float(self.charge))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class DielectricModel:
    eps_solute: float = 1.0
    eps_solvent: float = 80.0
    kappa_bar: float = 0.0

    def __post_init__(self):
        if not (self.eps_solute > 0 and self.eps_solvent > 0):
            raise ModelError("dielectric constants must be positive")
        if self.kappa_bar < 0:
            raise ModelError("kappa_bar must be non-negative")


@dataclass(frozen=True)
class UnitSystem:
    coulomb_constant: float = COULOMB_KCAL


@dataclass(frozen=True)
class SoluteModel:
    atoms: tuple[Atom, ...]
    dielectric: DielectricModel = field(default_factory=DielectricModel)
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise ModelError("model has no atoms")

    @property
    def centers(self) -> np.ndarray:
        return np.array([a.center for a in self.atoms], dtype=float)

    @property
    def charges(self) -> np.ndarray:
        return np.array([a.charge for a in self.atoms], dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.radius for a in self.atoms], dtype=float)

    @property
    def total_charge(self) -> float:
        return float(math.fsum(a.charge for a in self.atoms))

    def with_dielectric(self, **changes) -> "SoluteModel":
        d = self.dielectric
        params = dict(eps_solute=d.eps_solute, eps_solvent=d.eps_solvent, kappa_bar=d.kappa_bar)
        params.update(changes)
        return SoluteModel(self.atoms, DielectricModel(**params), self.units)

    def scaled_charges(self, s: float) -> "SoluteModel":
        atoms = [Atom(a.center, a.charge * s, a.radius) for a in self.atoms]
        return SoluteModel(atoms, self.dielectric, self.units)


def parse_pqr(text: str, source: str = "<string>") -> list[Atom]:
    """Parse whitespace separated ``x y z q r`` lines; ``#`` starts a comment."""
    atoms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(f"{source}:{lineno}: expected 5 fields (x y z q r), got {len(parts)}")
        try:
            x, y, z, q, r = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"{source}:{lineno}: non-numeric field in {raw.strip()!r}") from None
        try:
            atoms.append(Atom((x, y, z), q, r))
        except ModelError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
    return atoms


def load_pqr(path, dielectric: DielectricModel | None = None) -> SoluteModel:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"no such atom file: {path}")
    atoms = parse_pqr(path.read_text(), str(path))
    if not atoms:
        raise ModelError(f"{path}: model has no atoms")
    return SoluteModel(atoms, dielectric or DielectricModel())


def dumps_pqr(model: SoluteModel) -> str:
    # repr keeps floats bit-exact through a round trip
    lines = [" ".join(repr(v) for v in (*a.center, a.charge, a.radius)) for a in model.atoms]
    return "\n".join(lines) + "\n"


def save_pqr(model: SoluteModel, path) -> None:
    Path(path).write_text(dumps_pqr(model))


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int | None = None
    method: str = "bicgstab"
    precond: str = "jacobi"


@dataclass
class RunConfig:
    """JSON run configuration. ``surface`` is a dict ``{"type": ..., **params}``."""

    grid_spacing: float = 0.5
    padding: float = 4.0
    eps_solute: float = 1.0
    eps_solvent: float = 80.0
    kappa_bar: float = 0.0
    surface: dict = field(default_factory=lambda: {"type": "union_of_spheres"})
    solver: SolverSettings = field(default_factory=SolverSettings)
    explicit_vacuum: bool = False

    @property
    def dielectric(self) -> DielectricModel:
        return DielectricModel(self.eps_solute, self.eps_solvent, self.kappa_bar)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {"grid_spacing", "padding", "eps_solute", "eps_solvent", "kappa_bar",
                 "surface", "solver", "explicit_vacuum"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        solver = data.pop("solver", {}) or {}
        try:
            settings = SolverSettings(**solver)
        except TypeError as exc:
            raise ConfigError(f"bad solver section: {exc}") from None
        surface = data.get("surface")
        if surface is not None and (not isinstance(surface, dict) or "type" not in surface):
            raise ConfigError("surface must be an object with a 'type' key")
        cfg = cls(**data, solver=settings)
        if not cfg.grid_spacing > 0:
            raise ConfigError("grid_spacing must be positive")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)
