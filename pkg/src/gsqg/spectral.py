"""Periodic spectral representation of scalar fields and Fourier multipliers.

Fields live on an ``n x n`` grid covering the box ``[-L/2, L/2)^2`` with the
origin on a grid node.  The spectrum is stored in ``rfft2`` layout: axis 0
holds the full set of ``xi_1`` wavenumbers, axis 1 the non-negative ``xi_2``
half.  Values are indexed ``[i1, i2]`` with ``x1 = -L/2 + i1*dx``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "SpectralField",
    "SobolevSpec",
    "apply_fractional_laplacian",
    "velocity",
    "gradient",
    "apply_Dsj",
    "sobolev_norm",
    "dealias",
    "multiply",
    "inner",
    "l2_norm",
    "hamiltonian",
    "write_checkpoint",
    "read_checkpoint",
]

_WORKERS = -1
CHECKPOINT_MAGIC = b"GSQG1"
_HEADER = struct.Struct("<5sqddd")


@dataclass(frozen=True)
class GridSpec:
    """Periodic square grid with ``n`` points per axis and side ``L``."""

    n: int
    L: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 16, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        if not (0 < self.dealias_fraction <= 1):
            raise ValueError("dealias_fraction must lie in (0, 1]")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.L

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.n, self.n // 2 + 1)

    @cached_property
    def x(self) -> np.ndarray:
        """1-D node coordinates, origin included."""
        return -self.L / 2 + self.dx * np.arange(self.n)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = self.mesh
        return np.hypot(x1, x2), np.arctan2(x2, x1)

    @cached_property
    def mode_indices(self) -> tuple[np.ndarray, np.ndarray]:
        m1 = np.fft.fftfreq(self.n, 1.0 / self.n)[:, None]
        m2 = np.fft.rfftfreq(self.n, 1.0 / self.n)[None, :]
        return m1, m2

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        m1, m2 = self.mode_indices
        return m1 * self.dk, m2 * self.dk

    @cached_property
    def kmag(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return np.hypot(k1, k2)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Mask of modes on the Nyquist row or column."""
        m1, m2 = self.mode_indices
        half = self.n // 2
        return (np.abs(m1) == half) | (m2 == half)

    @cached_property
    def dealias_cutoff(self) -> float:
        """Retained integer modes satisfy ``|m_i| < cutoff`` on each axis."""
        return self.dealias_fraction * self.n / 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m1, m2 = self.mode_indices
        c = self.dealias_cutoff
        return (np.abs(m1) < c) & (np.abs(m2) < c)

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each stored half-spectrum mode in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    @property
    def k_dealias(self) -> float:
        """Largest retained wavenumber magnitude along an axis."""
        return self.dealias_cutoff * self.dk


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held in physical and spectral form at once."""

    grid: GridSpec
    values: np.ndarray
    spectrum: np.ndarray

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "SpectralField":
        v = np.array(values, dtype=float)
        if v.shape != grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {grid.shape}")
        spec = sfft.rfft2(v, workers=_WORKERS)
        return cls(grid, _readonly(v), _readonly(spec))

    @classmethod
    def from_spectrum(cls, grid: GridSpec, spectrum) -> "SpectralField":
        s = np.array(spectrum, dtype=complex)
        if s.shape != grid.spectral_shape:
            raise ValueError("spectrum shape does not match grid")
        v = sfft.irfft2(s, s=grid.shape, workers=_WORKERS)
        return cls(grid, _readonly(v), _readonly(s))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls.from_values(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "SpectralField":
        x1, x2 = grid.mesh
        return cls.from_values(grid, fn(x1, x2))

    def _check(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField.from_values(self.grid, self.values + other.values)
        return SpectralField.from_values(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField.from_values(self.grid, self.values - other.values)
        return SpectralField.from_values(self.grid, self.values - other)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return multiply(self, scalar)
        return SpectralField(self.grid, _readonly(self.values * scalar), _readonly(self.spectrum * scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def with_multiplier(self, mult: np.ndarray) -> "SpectralField":
        """Apply a real-field-preserving Fourier multiplier."""
        return SpectralField.from_spectrum(self.grid, self.spectrum * mult)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SobolevSpec:
    s: float
    homogeneous: bool = False

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError("Sobolev exponent must be finite")
        if self.s < 0:
            raise ValueError(f"Sobolev exponent must be >= 0, got {self.s}")

    @property
    def label(self) -> str:
        return f"{'hdot' if self.homogeneous else 'h'}_{self.s:g}"


def _power_multiplier(grid: GridSpec, alpha: float) -> np.ndarray:
    k = grid.kmag
    if alpha == 0:
        return np.ones_like(k)
    with np.errstate(divide="ignore"):
        mult = np.where(k > 0, k, 1.0) ** alpha
    mult[0, 0] = 0.0
    return mult


def apply_fractional_laplacian(f: SpectralField, alpha: float) -> SpectralField:
    """Return ``Lambda^alpha f`` (multiplier ``|xi|^alpha``; zero mode dropped unless alpha == 0)."""
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if not (-2 <= alpha <= 4):
        raise ValueError(f"alpha must lie in [-2, 4], got {alpha}")
    return f.with_multiplier(_power_multiplier(f.grid, alpha))


def _check_gamma(gamma: float):
    if not (np.isfinite(gamma) and -1 < gamma < 1):
        raise ValueError(f"gamma must lie strictly inside (-1, 1), got {gamma}")


def velocity_multipliers(grid: GridSpec, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Multipliers taking ``theta_hat`` to ``(v1_hat, v2_hat)``."""
    _check_gamma(gamma)
    k1, k2 = grid.wavenumbers
    psi = -_power_multiplier(grid, -1.0 + gamma)
    m1 = 1j * k2 * psi
    m2 = -1j * k1 * psi
    m1[grid.nyquist] = 0
    m2[grid.nyquist] = 0
    return m1, m2


def velocity(theta: SpectralField, gamma: float) -> tuple[SpectralField, SpectralField]:
    """Velocity ``v = grad^perp psi`` with ``psi = -Lambda^{-1+gamma} theta``."""
    m1, m2 = velocity_multipliers(theta.grid, gamma)
    return theta.with_multiplier(m1), theta.with_multiplier(m2)


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    k1, k2 = f.grid.wavenumbers
    g1 = 1j * k1 * np.ones(f.grid.spectral_shape)
    g2 = 1j * k2 * np.ones(f.grid.spectral_shape)
    g1[f.grid.nyquist] = 0
    g2[f.grid.nyquist] = 0
    return f.with_multiplier(g1), f.with_multiplier(g2)


def dsj_multiplier(grid: GridSpec, s: float, j: tuple[int, int]) -> np.ndarray:
    """``i^{-|j|} d_xi^j |xi|^s`` on the half spectrum, zero mode set to 0."""
    j1, j2 = (int(j[0]), int(j[1]))
    order = j1 + j2
    if j1 < 0 or j2 < 0:
        raise ValueError("multi-index entries must be non-negative")
    if order > 2:
        raise ValueError(f"|j| must be <= 2, got {order}")
    k1, k2 = grid.wavenumbers
    k1 = k1 * np.ones(grid.spectral_shape)
    k2 = k2 * np.ones(grid.spectral_shape)
    rho = np.where(grid.kmag > 0, grid.kmag, 1.0)
    if order == 0:
        d = rho**s
    elif order == 1:
        kj = k1 if j1 == 1 else k2
        d = s * kj * rho ** (s - 2)
    elif j1 == 2 or j2 == 2:
        kj = k1 if j1 == 2 else k2
        d = s * rho ** (s - 2) + s * (s - 2) * kj**2 * rho ** (s - 4)
    else:
        d = s * (s - 2) * k1 * k2 * rho ** (s - 4)
    mult = d * (1j) ** (-order)
    mult[0, 0] = 0
    if order % 2:
        mult[grid.nyquist] = 0
    return mult


def apply_Dsj(f: SpectralField, s: float, j=(0, 0)) -> SpectralField:
    """Apply the operator with symbol ``i^{-|j|} d_xi^j |xi|^s``."""
    if sum(j) > 2:
        raise ValueError(f"|j| must be <= 2, got {sum(j)}")
    if tuple(j) == (0, 0):
        return apply_fractional_laplacian(f, s)
    return f.with_multiplier(dsj_multiplier(f.grid, s, j))


def _spectral_sq_sum(grid: GridSpec, spec: np.ndarray) -> float:
    """``||f||_{L^2}^2`` from (a weighted) half spectrum via Parseval."""
    return float(np.sum(grid.half_weights * np.abs(spec) ** 2)) * (grid.dx / grid.n) ** 2


def l2_norm(f: SpectralField) -> float:
    """Physical-space L2 norm with quadrature weight ``dx^2``."""
    return float(np.sqrt(np.sum(f.values**2)) * f.grid.dx)


def inner(f: SpectralField, g: SpectralField) -> float:
    f._check(g)
    return float(np.sum(f.values * g.values) * f.grid.dx**2)


def sobolev_norm(f: SpectralField, spec: SobolevSpec | float, homogeneous: bool | None = None) -> float:
    """``||f||_{Hdot^s}`` or ``||f||_{L^2} + ||f||_{Hdot^s}`` by Parseval."""
    if not isinstance(spec, SobolevSpec):
        spec = SobolevSpec(float(spec), bool(homogeneous))
    grid = f.grid
    hom = np.sqrt(_spectral_sq_sum(grid, f.spectrum * _power_multiplier(grid, spec.s)))
    if spec.homogeneous:
        return hom
    return np.sqrt(_spectral_sq_sum(grid, f.spectrum)) + hom


def hamiltonian(f: SpectralField, gamma: float) -> float:
    """``int theta Lambda^{-1+gamma} theta``."""
    _check_gamma(gamma)
    return _spectral_sq_sum(f.grid, f.spectrum * np.sqrt(_power_multiplier(f.grid, -1.0 + gamma)))


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode outside the 2/3-type band; idempotent."""
    return SpectralField.from_spectrum(f.grid, np.where(f.grid.dealias_mask, f.spectrum, 0))


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product projected onto the dealiasing band."""
    f._check(g)
    return dealias(SpectralField.from_values(f.grid, f.values * g.values))


def spectral_tail_fraction(f: SpectralField, fraction: float = 0.8) -> float:
    """Energy fraction in retained modes above ``fraction`` of the band edge."""
    grid = f.grid
    m1, m2 = grid.mode_indices
    c = grid.dealias_cutoff
    band = np.maximum(np.abs(m1), np.abs(m2))
    weighted = grid.half_weights * np.abs(f.spectrum) ** 2
    total = weighted.sum()
    if total == 0:
        return 0.0
    return float(weighted[(band >= fraction * c) & grid.dealias_mask].sum() / total)


def write_checkpoint(path, field: SpectralField, gamma: float = 0.0, t: float = 0.0) -> Path:
    """Write the flat little-endian checkpoint format."""
    path = Path(path)
    grid = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, grid.n, grid.L, float(gamma), float(t)))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C"))
    return path


def read_checkpoint(path, dealias_fraction: float = 2.0 / 3.0) -> tuple[SpectralField, float, float]:
    """Read a checkpoint; returns ``(field, gamma, t)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, n, L, gamma, t = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError(f"{path}: expected {n * n} samples, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float)
    return SpectralField.from_values(GridSpec(n, L, dealias_fraction), values), gamma, t
