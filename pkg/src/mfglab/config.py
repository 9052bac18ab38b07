"""Experiment configuration: INI text <-> validated description.

One experiment is one config file with sections [model], [solver],
[sweep], [output].  Parsing applies documented defaults, records which
fields were defaulted, and validates everything up front with errors
naming the exact field path (e.g. "solver.lambda").
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .hamiltonians import DriftField, QuadraticDriftHamiltonian
from .kernels import (
    CuckerSmaleKernel,
    ExponentialKernel,
    MorseKernel,
    RepulsiveAttractiveKernel,
    ZeroKernel,
)
from .measures import GridDensity, ParticleEnsemble
from .mfg_pde import PdeConfig

KERNEL_NAMES = ("zero", "exponential", "repulsive-attractive", "morse", "cucker-smale")

#: (field path, type, default); None means required-when-used
_MODEL_DEFAULTS = {
    "kernel": ("zero", str),
    "alpha": (1.0, float),
    "a": (1.0, float),
    "G": (0.5, float),
    "L": (2.0, float),
    "beta": (0.0, float),
    "drift": ("zero", str),
    "drift_amplitude": (0.0, float),
    "drift_frequency": (1.0, float),
}

_SOLVER_DEFAULTS = {
    "lambda": (10.0, float),
    "T": (1.0, float),
    "half_width": (6.0, float),
    "n_x": (256, int),
    "dt": (1e-3, float),
    "nu": ("auto", str),  # "auto" -> lambda**-0.5 schedule; else a float
    "mode": ("damped-picard", str),
    "theta": (0.5, float),
    "max_iterations": (200, int),
    "tolerance": (1e-6, float),
    "m0_center": (0.0, float),
    "m0_sigma": (0.5, float),
    "n_intervals": (128, int),
    "n_atoms": (2, int),
    "atoms_x": ("", str),  # comma list; overrides gaussian sampling
    "atoms_v": ("", str),
    "atoms_sigma_x": (1.0, float),
    "atoms_sigma_v": (1.0, float),
}

_SWEEP_DEFAULTS = {
    "lambdas": ("5, 20, 80", str),
    "threads": (1, int),
    "cross_particles": (400, int),
}

_OUTPUT_DEFAULTS = {
    "prefix": ("report", str),
    "seed": (0, int),
}

_SECTIONS = {
    "model": _MODEL_DEFAULTS,
    "solver": _SOLVER_DEFAULTS,
    "sweep": _SWEEP_DEFAULTS,
    "output": _OUTPUT_DEFAULTS,
}


@dataclass(frozen=True)
class ExperimentDescription:
    """Fully defaulted, validated experiment setup."""

    model: dict
    solver: dict
    sweep: dict
    output: dict
    # bookkeeping only: a written config is explicit about every field,
    # so the round-trip identity is on the four value sections
    defaults_applied: tuple = field(default=(), compare=False)

    # -- builders -----------------------------------------------------
    def build_kernel(self):
        m = self.model
        name = m["kernel"]
        if name == "zero":
            return ZeroKernel()
        if name == "exponential":
            return ExponentialKernel(alpha=m["alpha"], a=m["a"])
        if name == "repulsive-attractive":
            return RepulsiveAttractiveKernel(a=m["a"])
        if name == "morse":
            return MorseKernel(G=m["G"], L=m["L"])
        return CuckerSmaleKernel(alpha=m["alpha"], beta=m["beta"])

    def build_hamiltonian(self) -> QuadraticDriftHamiltonian:
        m = self.model
        drift = DriftField(m["drift"], amplitude=m["drift_amplitude"], frequency=m["drift_frequency"])
        return QuadraticDriftHamiltonian(drift)

    def build_pde_config(self, lam: float | None = None) -> PdeConfig:
        s = self.solver
        nu = None if s["nu"] == "auto" else float(s["nu"])
        return PdeConfig(
            lam=s["lambda"] if lam is None else lam,
            T=s["T"],
            half_width=s["half_width"],
            n_x=s["n_x"],
            dt=s["dt"],
            nu=nu,
            mode=s["mode"],
            theta=s["theta"],
            max_iterations=s["max_iterations"],
            tolerance=s["tolerance"],
        )

    def build_m0_grid(self) -> GridDensity:
        s = self.solver
        dx = 2.0 * s["half_width"] / s["n_x"]
        return GridDensity.gaussian(s["m0_center"], s["m0_sigma"], -s["half_width"], dx, s["n_x"])

    def build_m0_atoms(self, seed: int | None = None) -> ParticleEnsemble:
        s = self.solver
        if s["atoms_x"]:
            x = np.array([float(c) for c in s["atoms_x"].split(",")])
            v = np.array([float(c) for c in s["atoms_v"].split(",")])
            if x.size != v.size:
                raise ConfigError("solver.atoms_v: length must match solver.atoms_x")
            return ParticleEnsemble.equal_weights(np.column_stack([x, v]), 1)
        rng = np.random.default_rng(self.output["seed"] if seed is None else seed)
        x = s["atoms_sigma_x"] * rng.standard_normal(s["n_atoms"])
        v = s["atoms_sigma_v"] * rng.standard_normal(s["n_atoms"])
        v -= v.mean()  # center the momentum so the flock settles at rest
        return ParticleEnsemble.equal_weights(np.column_stack([x, v]), 1)

    @property
    def lambdas(self) -> tuple:
        return tuple(float(c) for c in self.sweep["lambdas"].split(","))


def parse_config(text: str) -> ExperimentDescription:
    """Parse INI text to a validated, fully defaulted description."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive (G vs g)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{section}: unknown section")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown option")

    values = {}
    defaulted = []
    for section, spec in _SECTIONS.items():
        out = {}
        for key, (default, typ) in spec.items():
            if cp.has_option(section, key):
                raw = cp.get(section, key)
                try:
                    out[key] = typ(raw)
                except ValueError as exc:
                    raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}") from exc
            else:
                out[key] = default
                defaulted.append(f"{section}.{key}")
        values[section] = out

    _validate(values)
    return ExperimentDescription(
        model=values["model"],
        solver=values["solver"],
        sweep=values["sweep"],
        output=values["output"],
        defaults_applied=tuple(defaulted),
    )


def _validate(values: dict) -> None:
    m, s, sw = values["model"], values["solver"], values["sweep"]
    if m["kernel"] not in KERNEL_NAMES:
        raise ConfigError(f"model.kernel: unknown kernel {m['kernel']!r}; choose from {KERNEL_NAMES}")
    if m["kernel"] == "morse":
        if not 0 < m["G"] < 1:
            raise ConfigError(f"model.G: Morse kernel requires 0 < G < 1, got {m['G']}")
        if m["L"] <= 1:
            raise ConfigError(f"model.L: Morse kernel requires L > 1, got {m['L']}")
    if m["kernel"] == "cucker-smale" and m["alpha"] <= 0:
        raise ConfigError(f"model.alpha: must be positive, got {m['alpha']}")
    if m["kernel"] in ("exponential", "repulsive-attractive") and m["a"] <= 0:
        raise ConfigError(f"model.a: must be positive, got {m['a']}")
    if m["drift"] not in ("zero", "constant", "sinusoidal"):
        raise ConfigError(f"model.drift: unknown drift {m['drift']!r}")
    if s["lambda"] <= 0:
        raise ConfigError(f"solver.lambda: must be positive, got {s['lambda']}")
    if s["T"] <= 0:
        raise ConfigError(f"solver.T: must be positive, got {s['T']}")
    if s["dt"] <= 0:
        raise ConfigError(f"solver.dt: must be positive, got {s['dt']}")
    if s["nu"] != "auto":
        try:
            nu = float(s["nu"])
        except ValueError as exc:
            raise ConfigError(f"solver.nu: expected 'auto' or a number, got {s['nu']!r}") from exc
        if nu < 0:
            raise ConfigError(f"solver.nu: must be nonnegative, got {nu}")
    if s["n_x"] < 8:
        raise ConfigError(f"solver.n_x: need at least 8 cells, got {s['n_x']}")
    if s["m0_sigma"] <= 0:
        raise ConfigError(f"solver.m0_sigma: must be positive, got {s['m0_sigma']}")
    if s["n_intervals"] < 1:
        raise ConfigError(f"solver.n_intervals: must be positive, got {s['n_intervals']}")
    if s["n_atoms"] < 1:
        raise ConfigError(f"solver.n_atoms: must be positive, got {s['n_atoms']}")
    try:
        lams = [float(c) for c in sw["lambdas"].split(",")]
    except ValueError as exc:
        raise ConfigError(f"sweep.lambdas: cannot parse {sw['lambdas']!r}") from exc
    if any(l <= 0 for l in lams):
        raise ConfigError(f"sweep.lambdas: every lambda must be positive, got {lams}")
    if sorted(lams) != lams or len(set(lams)) != len(lams):
        raise ConfigError(f"sweep.lambdas: must be strictly increasing, got {lams}")
    if sw["threads"] < 1:
        raise ConfigError(f"sweep.threads: must be positive, got {sw['threads']}")


def write_config(desc: ExperimentDescription) -> str:
    """Serialize a description back to INI text (parse . write = identity)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for section in _SECTIONS:
        data = getattr(desc, section)
        cp[section] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in data.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
