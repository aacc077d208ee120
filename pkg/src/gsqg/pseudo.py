"""Pseudosolutions of gSQG built from a steep radial vortex and a small
oscillating annulus, and the source term they leave in the equation.

With ``p = f2(r) r_cK^beta N^{-beta} sin(N alpha - N t omega(r))`` and
``omega = v_alpha(f1)/r`` the pseudosolution is ``theta_bar = f1 + p``.  The
radial part is steady and transports ``p`` by pure rotation, so

    F = d_t theta_bar + v(theta_bar) . grad theta_bar = v(p) . grad theta_bar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .radial import (
    F1Construction,
    QuadratureSpec,
    RadialProfile,
    angular_velocity,
    construct_f1,
    construct_f2,
    differential_rotation,
    estimate_ck_bounds,
    make_seed_bump,
)
from .spectral import GridSpec, SpectralField, dealias, gradient, multiply, velocity

__all__ = [
    "PseudoParams",
    "UnderResolvedError",
    "make_pseudo_params",
    "evaluate_pseudosolution",
    "perturbation_field",
    "source_term",
    "predicted_inflation_lower_bound",
    "points_per_wavelength",
]


class UnderResolvedError(ValueError):
    """The grid cannot represent the azimuthal oscillation."""


MIN_POINTS_PER_WAVELENGTH = 8.0


def admissible_beta(beta: float, gamma: float):
    """Raise unless ``beta`` lies in ``[1, 2+gamma) ∩ (3/2+gamma, 2+gamma)``."""
    if beta >= 2 + gamma:
        raise ValueError(f"beta = {beta} violates beta < 2+gamma (need β < {2 + gamma:g}; β ≥ 2+γ is inadmissible)")
    if beta <= 1.5 + gamma:
        raise ValueError(f"beta = {beta} violates beta > 3/2+gamma (β ≤ 3/2+γ is inadmissible)")
    if beta < 1:
        raise ValueError(f"beta = {beta} must be >= 1")


@dataclass(frozen=True, eq=False)
class PseudoParams:
    """Everything needed to evaluate one pseudosolution.

    ``omega`` and ``domega_dr`` are tabulated over (a neighbourhood of) the
    support of ``f2``; they are only ever evaluated where ``f2`` is nonzero.
    """

    gamma: float
    beta: float
    N: int
    c: float
    K: float
    f1: RadialProfile
    f2: RadialProfile
    r_cK: float
    omega: RadialProfile
    domega_dr: RadialProfile
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (-1 < self.gamma < 1):
            raise ValueError("gamma must lie in (-1, 1)")
        admissible_beta(self.beta, self.gamma)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not (0 < self.c < 1):
            raise ValueError("c must lie in (0, 1)")
        if not self.K > 1:
            raise ValueError("K must exceed 1")
        if self.f1.support[1] >= self.f2.support[0]:
            raise ValueError("supports of f1 and f2 must be disjoint with f1 inside")
        lo, hi = self.omega.radii[0], self.omega.radii[-1]
        if lo > self.f2.support[0] or hi < self.f2.support[1]:
            raise ValueError("omega must be tabulated over the support of f2")

    def with_N(self, N: int) -> "PseudoParams":
        return replace(self, N=int(N))

    @property
    def amplitude(self) -> float:
        """Factor ``r_cK^beta N^{-beta}`` multiplying ``f2``."""
        return (self.r_cK / self.N) ** self.beta

    @property
    def support_radius(self) -> float:
        return self.f2.support[1]


def make_pseudo_params(
    gamma: float,
    beta: float,
    N: int,
    c: float,
    K: float,
    quad: QuadratureSpec = QuadratureSpec(),
    seed: Optional[RadialProfile] = None,
    delta_target: float = 1e-2,
    omega_samples: int = 257,
    f1c: Optional[F1Construction] = None,
) -> PseudoParams:
    """Run the f1/f2 constructions and tabulate the rotation of f1."""
    admissible_beta(beta, gamma)
    if f1c is None:
        f1c = construct_f1(beta, gamma, c, K, quad=quad, delta_target=delta_target, seed=seed)
    f2 = construct_f2(f1c, c, quad)
    lo, hi = f2.support
    radii = np.linspace(lo, hi, omega_samples)
    va = angular_velocity(f1c.f1, gamma, quad, radii=radii).values
    omega = RadialProfile(radii, va / radii, meta={"kind": "omega"})
    dr = differential_rotation(f1c.f1, gamma, quad, radii=radii).values
    domega = RadialProfile(radii, dr, meta={"kind": "domega_dr"})
    meta = {"lambda1": f1c.lambda1, "lambda2": f1c.lambda2, "hbeta_f1": f1c.hbeta_norm, "a1": f1c.a1}
    return PseudoParams(gamma, beta, int(N), c, K, f1c.f1, f2, f1c.r_cK, omega, domega, meta)


def points_per_wavelength(p: PseudoParams, grid: GridSpec, radius: Optional[float] = None) -> float:
    r = p.r_cK if radius is None else radius
    return 2 * math.pi * r / p.N / grid.dx


def _check_resolution(p: PseudoParams, grid: GridSpec):
    ppw = points_per_wavelength(p, grid)
    if ppw < MIN_POINTS_PER_WAVELENGTH:
        raise UnderResolvedError(
            f"resolution guard: {ppw:.2f} points per azimuthal wavelength at r_cK "
            f"(N={p.N}, n={grid.n}, L={grid.L:g}); need >= {MIN_POINTS_PER_WAVELENGTH:g}"
        )
    if p.support_radius >= grid.L / 2:
        raise UnderResolvedError(f"support radius {p.support_radius:g} does not fit in the box (L={grid.L:g})")


def _spline(profile: RadialProfile):
    return make_interp_spline(profile.radii, profile.values, k=3)


class _Pieces:
    """Analytic ingredients of ``theta_bar`` sampled on a grid."""

    def __init__(self, p: PseudoParams, t: float, grid: GridSpec):
        r, a = grid.polar
        self.r, self.alpha = r, a
        lo, hi = p.f2.support
        inside = (r > lo) & (r < hi)
        rin = r[inside]
        om = np.zeros_like(r)
        dom = np.zeros_like(r)
        om[inside] = _spline(p.omega)(rin)
        dom[inside] = _spline(p.domega_dr)(rin)
        A = p.amplitude * p.f2(r)
        dA = p.amplitude * p.f2(r, 1)
        phase = p.N * (a - t * om)
        s, c = np.sin(phase), np.cos(phase)
        self.omega = om
        self.p = A * s
        self.dp_dalpha = A * p.N * c
        self.dp_dr = dA * s - A * p.N * t * dom * c
        self.dp_dt = -A * p.N * om * c
        self.f1 = p.f1(r)
        self.df1_dr = p.f1(r, 1)

    def grad(self):
        """Cartesian gradient of ``theta_bar``."""
        r, a = self.r, self.alpha
        dr = self.df1_dr + self.dp_dr
        inv_r = np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)
        da = self.dp_dalpha * inv_r
        return np.cos(a) * dr - np.sin(a) * da, np.sin(a) * dr + np.cos(a) * da


def evaluate_pseudosolution(p: PseudoParams, t: float, grid: GridSpec) -> SpectralField:
    """Dealiased samples of ``theta_bar(x, t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    _check_resolution(p, grid)
    pc = _Pieces(p, t, grid)
    return dealias(SpectralField.from_values(grid, pc.f1 + pc.p))


def perturbation_field(p: PseudoParams, t: float, grid: GridSpec) -> SpectralField:
    """Dealiased samples of ``theta_bar - f1``."""
    _check_resolution(p, grid)
    return dealias(SpectralField.from_values(grid, _Pieces(p, t, grid).p))


def source_term(p: PseudoParams, t: float, grid: GridSpec, route: str = "structured") -> SpectralField:
    """Source term ``F = d_t theta_bar + v(theta_bar) . grad theta_bar``.

    route:
      ``"structured"``   ``v_alpha(p)/r d_alpha theta_bar + v_r(p) d_r theta_bar`` with
                         the spectral velocity of ``p`` and analytic derivatives;
      ``"direct"``       ``d_t theta_bar + (omega r e_alpha + v(p)) . grad theta_bar``
                         evaluated in Cartesian form, so the rotation by ``f1``
                         cancels ``d_t theta_bar`` only through the arithmetic;
      ``"manufactured"`` fully discrete ``d_t theta_bar + dealias(v(theta_bar) . grad theta_bar)``
                         with spectral velocity and gradients on the periodic grid.
                         This is the forcing for which the dealiased solver keeps
                         the sampled pseudosolution on track.
    """
    _check_resolution(p, grid)
    pc = _Pieces(p, t, grid)
    if route == "manufactured":
        theta = dealias(SpectralField.from_values(grid, pc.f1 + pc.p))
        v1, v2 = velocity(theta, p.gamma)
        g1, g2 = gradient(theta)
        adv = multiply(v1, g1) + multiply(v2, g2)
        return dealias(SpectralField.from_values(grid, pc.dp_dt)) + adv
    pert = dealias(SpectralField.from_values(grid, pc.p))
    v1, v2 = velocity(pert, p.gamma)
    a = pc.alpha
    if route == "structured":
        vr = np.cos(a) * v1.values + np.sin(a) * v2.values
        va = -np.sin(a) * v1.values + np.cos(a) * v2.values
        inv_r = np.divide(1.0, pc.r, out=np.zeros_like(pc.r), where=pc.r > 0)
        vals = va * inv_r * pc.dp_dalpha + vr * (pc.df1_dr + pc.dp_dr)
    elif route == "direct":
        g1, g2 = pc.grad()
        w1 = -pc.omega * pc.r * np.sin(a) + v1.values
        w2 = pc.omega * pc.r * np.cos(a) + v2.values
        vals = pc.dp_dt + w1 * g1 + w2 * g2
    else:
        raise ValueError(f"unknown route {route!r}")
    return dealias(SpectralField.from_values(grid, vals))


def _f2_c1_norm(p: PseudoParams) -> float:
    """``||f2||_{C^1}`` in units where ``r_cK = 1``.

    The rescaling ``r_cK f2(r_cK s)`` keeps the L2 norm equal to ``c``, so the
    predictor below is invariant under dilations of the whole construction.
    """
    key = "_f2_c1"
    if key not in p.meta:
        b = estimate_ck_bounds(p.f2, kmax=1)
        p.meta[key] = p.r_cK * b[0] + p.r_cK**2 * b[1]
    return p.meta[key]


def predicted_inflation_lower_bound(p: PseudoParams, t: float) -> float:
    """``c (K t - 1 - ||f2||_{C^1} / (c N))^beta`` clamped at zero.

    Lengths are measured in units of ``r_cK``. This is the growth predictor up
    to an unknown constant, for trends only.
    """
    bracket = p.K * t - 1.0 - _f2_c1_norm(p) / (p.c * p.N)
    if bracket <= 0:
        return 0.0
    return p.c * bracket**p.beta


def default_grid(p: PseudoParams, n: Optional[int] = None, box_factor: float = 4.0) -> GridSpec:
    """Box of side ``box_factor * r_cK`` with ``n = 8 N`` unless given."""
    n = 8 * p.N if n is None else n
    n = max(16, int(n))
    n += n % 2
    return GridSpec(n, box_factor * p.r_cK)


def grid_seed() -> RadialProfile:
    """Broad seed bump used for grid experiments.

    A wide seed keeps f1 representable on grids sized for the oscillation of f2.
    """
    return make_seed_bump(0.1, 0.45)
