"""Dealiased pseudo-spectral RK4 integration of the (optionally forced) gSQG equation.

The state is the half spectrum of a dealiased field.  Products are formed in
physical space and projected back onto the 2/3 band; no other filtering is
applied.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .spectral import (
    GridSpec,
    SobolevSpec,
    SpectralField,
    hamiltonian,
    l2_norm,
    sobolev_norm,
    spectral_tail_fraction,
    velocity_multipliers,
    write_checkpoint,
)

__all__ = [
    "SolverConfig",
    "Diagnostics",
    "BlowUpError",
    "ResolutionWarning",
    "rhs",
    "step",
    "integrate",
    "support_radius",
    "TransportOperator",
]

log = logging.getLogger(__name__)

Forcing = Callable[[float], Optional[SpectralField]]

SUPPORT_THRESHOLD = 1e-8
TAIL_TOLERANCE = 1e-4


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""


class ResolutionWarning(RuntimeWarning):
    """Spectral tail energy exceeded the configured tolerance."""


class TransportOperator:
    """Cached multipliers for ``-(u . grad) theta`` on one grid and one gamma."""

    def __init__(self, grid: GridSpec, gamma: float):
        self.grid = grid
        self.gamma = gamma
        self.m1, self.m2 = velocity_multipliers(grid, gamma)
        k1, k2 = grid.wavenumbers
        self.g1 = np.where(grid.nyquist, 0, 1j * k1 * np.ones(grid.spectral_shape))
        self.g2 = np.where(grid.nyquist, 0, 1j * k2 * np.ones(grid.spectral_shape))
        self.mask = grid.dealias_mask

    def _phys(self, spec):
        return sfft.irfft2(spec, s=self.grid.shape, workers=-1)

    def velocity(self, theta_hat):
        """Physical velocity components of ``theta_hat``."""
        return self._phys(self.m1 * theta_hat), self._phys(self.m2 * theta_hat)

    def advect(self, u, theta_hat):
        """Dealiased spectrum of ``-(u . grad theta)`` for physical ``u``."""
        prod = u[0] * self._phys(self.g1 * theta_hat) + u[1] * self._phys(self.g2 * theta_hat)
        return -np.where(self.mask, sfft.rfft2(prod, workers=-1), 0)

    def max_speed(self, u) -> float:
        return float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2)))


@lru_cache(maxsize=16)
def _operator(grid: GridSpec, gamma: float) -> TransportOperator:
    return TransportOperator(grid, gamma)


def _forcing_spectrum(forcing: Optional[Forcing], t: float, grid: GridSpec):
    if forcing is None:
        return None
    f = forcing(t)
    if f is None:
        return None
    if isinstance(f, SpectralField):
        if f.grid != grid:
            raise ValueError("forcing lives on a different grid")
        return np.where(grid.dealias_mask, f.spectrum, 0)
    return np.where(grid.dealias_mask, np.asarray(f), 0)


def _rhs_hat(op: TransportOperator, theta_hat, t, forcing, sign=1.0):
    u = op.velocity(theta_hat)
    if sign != 1.0:
        u = (sign * u[0], sign * u[1])
    out = op.advect(u, theta_hat)
    fh = _forcing_spectrum(forcing, t, op.grid)
    if fh is not None:
        out = out + fh
    return out, u


def rhs(theta: SpectralField, gamma: float, t: float = 0.0, forcing: Optional[Forcing] = None) -> SpectralField:
    """``-v(theta) . grad theta`` (+ ``forcing(t)``), dealiased."""
    out, _ = _rhs_hat(_operator(theta.grid, gamma), theta.spectrum, t, forcing)
    return SpectralField.from_spectrum(theta.grid, out)


def _rk4(op, y, t, dt, forcing, sign=1.0, k1=None):
    if k1 is None:
        k1, _ = _rhs_hat(op, y, t, forcing, sign)
    k2, _ = _rhs_hat(op, y + 0.5 * dt * k1, t + 0.5 * dt, forcing, sign)
    k3, _ = _rhs_hat(op, y + 0.5 * dt * k2, t + 0.5 * dt, forcing, sign)
    k4, _ = _rhs_hat(op, y + dt * k3, t + dt, forcing, sign)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_finite(y, t):
    if not np.all(np.isfinite(y)):
        raise BlowUpError(f"non-finite values in the state at t = {t:.6g}")


def step(
    theta: SpectralField,
    dt: float,
    gamma: float,
    t: float = 0.0,
    forcing: Optional[Forcing] = None,
) -> SpectralField:
    """One classical RK4 step; input is dealiased first."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    op = _operator(theta.grid, gamma)
    y = np.where(op.mask, theta.spectrum, 0)
    y = _rk4(op, y, t, dt, forcing)
    _check_finite(y, t + dt)
    return SpectralField.from_spectrum(theta.grid, y)


@dataclass
class SolverConfig:
    """Time-stepping settings.

    ``checkpoint_every`` sets the cadence (in steps) of diagnostics records and,
    when ``checkpoint_dir`` is given, of checkpoint files.  ``velocity_sign=-1``
    integrates with negated velocity, which runs the unforced flow backwards.
    ``stop_on_guard`` ends the run at the first record that trips the
    resolution guard, since nothing after it is trustworthy.
    """

    t_end: float
    cfl: float = 0.5
    integrator: str = "RK4"
    checkpoint_every: int = 10
    forcing: Optional[Forcing] = None
    checkpoint_dir: Optional[str] = None
    csv_path: Optional[str] = None
    dt_max: Optional[float] = None
    max_steps: int = 1_000_000
    velocity_sign: float = 1.0
    tail_tolerance: float = TAIL_TOLERANCE
    stop_on_guard: bool = False

    def __post_init__(self):
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.integrator.upper() != "RK4":
            raise ValueError(f"unsupported integrator {self.integrator!r}; only RK4 is available")
        if int(self.checkpoint_every) < 1:
            raise ValueError("checkpoint_every must be a positive number of steps")
        if self.velocity_sign not in (1.0, -1.0):
            raise ValueError("velocity_sign must be +1 or -1")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be positive")


def support_radius(theta: SpectralField, threshold: float = SUPPORT_THRESHOLD) -> float:
    """Largest ``|x|`` at which ``|theta| > threshold * max|theta|`` (0 for the zero field)."""
    a = np.abs(theta.values)
    m = a.max()
    if m == 0:
        return 0.0
    r = theta.grid.polar[0]
    return float(r[a > threshold * m].max())


@dataclass
class Diagnostics:
    gamma: float
    specs: tuple = ()
    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    hamiltonian: list = field(default_factory=list)
    sobolev: dict = field(default_factory=dict)
    support_radius: list = field(default_factory=list)
    max_velocity: list = field(default_factory=list)
    tail_fraction: list = field(default_factory=list)
    events: list = field(default_factory=list)
    steps: int = 0

    def __post_init__(self):
        self.specs = tuple(s if isinstance(s, SobolevSpec) else SobolevSpec(float(s)) for s in self.specs)
        for s in self.specs:
            self.sobolev.setdefault(s.label, [])

    @property
    def columns(self) -> list[str]:
        return ["t", "l2", "hamiltonian", *[s.label for s in self.specs], "support_radius", "max_velocity"]

    def record(self, t: float, theta: SpectralField, vmax: float) -> list:
        if self.times and t <= self.times[-1]:
            raise ValueError("diagnostic times must increase")
        self.times.append(float(t))
        self.l2.append(l2_norm(theta))
        self.hamiltonian.append(hamiltonian(theta, self.gamma))
        for s in self.specs:
            self.sobolev[s.label].append(sobolev_norm(theta, s))
        self.support_radius.append(support_radius(theta))
        self.max_velocity.append(float(vmax))
        self.tail_fraction.append(spectral_tail_fraction(theta))
        return self.row(-1)

    def row(self, i: int) -> list:
        return [
            self.times[i],
            self.l2[i],
            self.hamiltonian[i],
            *[self.sobolev[s.label][i] for s in self.specs],
            self.support_radius[i],
            self.max_velocity[i],
        ]

    def __len__(self):
        return len(self.times)

    def array(self, name: str) -> np.ndarray:
        if name in self.sobolev:
            return np.asarray(self.sobolev[name])
        return np.asarray(getattr(self, name))

    def relative_drift(self, name: str) -> float:
        a = self.array(name)
        return float(np.max(np.abs(a - a[0])) / abs(a[0])) if a[0] else float(np.max(np.abs(a)))

    @property
    def under_resolved(self) -> bool:
        return any(e.startswith("resolution guard") for e in self.events)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for i in range(len(self)):
                w.writerow([f"{v:.17g}" for v in self.row(i)])
        return path


def integrate(
    theta0: SpectralField,
    config: SolverConfig,
    gamma: float,
    norm_specs: Sequence = (),
    observer: Optional[Callable[[float, SpectralField], None]] = None,
) -> tuple[SpectralField, Diagnostics]:
    """Integrate to ``config.t_end`` with CFL-adaptive RK4 steps.

    ``observer(t, theta)`` is called at every diagnostics record.
    """
    grid = theta0.grid
    op = _operator(grid, gamma)
    sign = config.velocity_sign
    forcing = config.forcing
    y = np.where(op.mask, theta0.spectrum, 0)
    diag = Diagnostics(gamma, tuple(norm_specs))
    ckdir = Path(config.checkpoint_dir) if config.checkpoint_dir else None
    if ckdir is not None:
        ckdir.mkdir(parents=True, exist_ok=True)
    stream = open(config.csv_path, "w", newline="") if config.csv_path else None
    writer = csv.writer(stream) if stream else None
    if writer:
        writer.writerow(diag.columns)
    warned = False

    def emit(t, k1_u, nstep):
        nonlocal warned
        theta = SpectralField.from_spectrum(grid, y)
        row = diag.record(t, theta, op.max_speed(k1_u))
        if writer:
            writer.writerow([f"{v:.17g}" for v in row])
            stream.flush()
        tail = diag.tail_fraction[-1]
        if tail > config.tail_tolerance:
            msg = f"resolution guard: tail energy fraction {tail:.3g} > {config.tail_tolerance:g} at t = {t:.6g}"
            diag.events.append(msg)
            if not warned:
                warnings.warn(msg, ResolutionWarning, stacklevel=3)
                warned = True
        if ckdir is not None:
            write_checkpoint(ckdir / f"ckpt_{nstep:07d}.bin", theta, gamma, t)
        if observer is not None:
            observer(t, theta)

    try:
        t = 0.0
        nstep = 0
        k1, u = _rhs_hat(op, y, t, forcing, sign)
        emit(t, u, nstep)
        while t < config.t_end * (1 - 1e-14):
            if nstep >= config.max_steps:
                raise RuntimeError(f"max_steps = {config.max_steps} reached at t = {t:.6g}")
            vmax = op.max_speed(u)
            dt = config.t_end - t
            if vmax > 0:
                dt = min(dt, config.cfl * grid.dx / vmax)
            if config.dt_max is not None:
                dt = min(dt, config.dt_max)
            y = _rk4(op, y, t, dt, forcing, sign, k1=k1)
            nstep += 1
            t = config.t_end if config.t_end - (t + dt) < 1e-14 * config.t_end else t + dt
            _check_finite(y, t)
            k1, u = _rhs_hat(op, y, t, forcing, sign)
            last = t >= config.t_end * (1 - 1e-14)
            if nstep % config.checkpoint_every == 0 or last:
                emit(t, u, nstep)
                if config.stop_on_guard and diag.under_resolved:
                    break
    finally:
        if stream:
            stream.close()
    diag.steps = nstep
    log.debug("integrated to t=%g in %d steps", t, nstep)
    return SpectralField.from_spectrum(grid, y), diag
