"""Radial profiles and polar quadrature for the gSQG velocity.

The velocity kernel used throughout is

    v(x) = kappa(gamma) * PV int (x - y)^perp / |x - y|^{3+gamma} theta(y) dy,

with ``(a, b)^perp = (-b, a)`` and ``kappa = -(1+gamma) C(gamma)``, where
``C(gamma)`` is the Riesz-potential constant of ``Lambda^{-1+gamma}``.  This is
the real-space form of the multiplier used in :mod:`gsqg.spectral`.

Every polar integral is written in the shifted radial variable ``h = r' - r``
after integrating out the angle.  The angular integrals are sharply peaked
at ``alpha' = 0`` when ``|h|`` is small, so they use composite Gauss-Legendre
panels that grow geometrically from the peak width ``|h| / sqrt(r (r+h))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import gamma as gamma_fn

__all__ = [
    "riesz_constant",
    "kernel_constant",
    "BumpShape",
    "RadialProfile",
    "QuadratureSpec",
    "QuadratureError",
    "angular_velocity",
    "angular_velocity_derivative",
    "differential_rotation",
    "make_seed_bump",
    "construct_g",
    "construct_f1",
    "construct_f2",
    "F1Construction",
    "perturbation_velocity_polar",
    "periodic_angular_velocity",
    "profile_sobolev_norm",
    "embed_profile",
    "profile_l2_norm",
    "estimate_ck_bounds",
    "write_profile",
    "read_profile",
]


class QuadratureError(RuntimeError):
    """Raised when refinement fails to reduce the quadrature error estimate."""


def riesz_constant(gamma: float) -> float:
    """Constant of ``Lambda^{-1+gamma} f = C * int f(y) |x-y|^{-1-gamma} dy``."""
    _check_gamma(gamma)
    return gamma_fn((1 + gamma) / 2) / (2 ** (1 - gamma) * math.pi * gamma_fn((1 - gamma) / 2))


def kernel_constant(gamma: float) -> float:
    """Prefactor ``kappa`` of the velocity kernel ``(x-y)^perp / |x-y|^{3+gamma}``."""
    return -(1 + gamma) * riesz_constant(gamma)


def _check_gamma(gamma):
    if not (np.isfinite(gamma) and -1 < gamma < 1):
        raise ValueError(f"gamma must lie strictly inside (-1, 1), got {gamma}")


# ---------------------------------------------------------------------------
# profiles


def _bump(u: np.ndarray, derivative: int = 0) -> np.ndarray:
    """Standard bump ``exp(-1/(1-u^2))`` on ``|u| < 1`` and its derivatives."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    um = u[m]
    w = 1.0 - um * um
    e = np.exp(-1.0 / w)
    if derivative == 0:
        out[m] = e
    elif derivative == 1:
        out[m] = -2 * um / w**2 * e
    elif derivative == 2:
        out[m] = (6 * um**4 - 2) / w**4 * e
    else:
        raise ValueError("analytic bump derivatives are available up to order 2")
    return out


@dataclass(frozen=True)
class BumpShape:
    """``amplitude * bump`` mapped affinely onto ``[a0, a1]``."""

    a0: float
    a1: float
    amplitude: float = 1.0

    def __call__(self, r, derivative: int = 0):
        half = 0.5 * (self.a1 - self.a0)
        u = (np.asarray(r, dtype=float) - 0.5 * (self.a0 + self.a1)) / half
        return self.amplitude * _bump(u, derivative) / half**derivative

    def dilate(self, lam: float, scale: float = 1.0) -> "BumpShape":
        """Shape of ``scale * f(lam * r)``."""
        return BumpShape(self.a0 / lam, self.a1 / lam, self.amplitude * scale)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial function sampled on ``radii``.

    ``support`` is ``(R0, R1)`` for compactly supported profiles and ``None``
    for derived profiles such as velocities.  When ``shape`` is given it is
    used for off-grid evaluation; otherwise a quintic spline of the samples is.
    """

    radii: np.ndarray
    values: np.ndarray
    support: Optional[tuple[float, float]] = None
    ck_bounds: tuple = ()
    shape: Optional[Callable] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("radii and values must be 1-D arrays of equal length")
        if r.size > 1 and np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)
        if self.support is not None:
            r0, r1 = self.support
            if not (0 < r0 < r1):
                raise ValueError(f"support must satisfy 0 < R0 < R1, got {self.support}")

    @classmethod
    def from_shape(cls, shape: BumpShape, n: int = 401, meta: Optional[dict] = None, r_max=None):
        r_max = shape.a1 * 1.25 if r_max is None else r_max
        radii = np.linspace(0.0, r_max, n)
        return cls(radii, shape(radii), (shape.a0, shape.a1), shape=shape, meta=dict(meta or {}))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values) and (self.shape is None or self.shape.amplitude == 0)

    def evaluate(self, r, derivative: int = 0) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.shape is not None:
            return self.shape(r, derivative)
        spl = _profile_spline(self)
        out = spl(r, nu=derivative)
        if self.support is not None:
            out = np.where((r > self.support[0]) & (r < self.support[1]), out, 0.0)
        return out

    __call__ = evaluate

    def scaled(self, factor: float) -> "RadialProfile":
        shape = None if self.shape is None else replace(self.shape, amplitude=self.shape.amplitude * factor)
        return RadialProfile(self.radii, self.values * factor, self.support, (), shape, dict(self.meta))


_SPLINES: dict[int, object] = {}


def _profile_spline(p: RadialProfile):
    key = id(p)
    cached = _SPLINES.get(key)
    if cached is None or cached[0] is not p:
        k = 5 if p.radii.size > 5 else max(1, p.radii.size - 1)
        cached = (p, make_interp_spline(p.radii, p.values, k=k))
        _SPLINES[key] = cached
    return cached[1]


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the polar principal-value quadrature.

    ``radial_nodes`` is the Gauss-Legendre count on each side of the singular
    window and sets the panel density elsewhere.  ``angular_nodes`` is the
    order of each angular panel.  ``split_radius`` is the window half-width as
    a fraction of the profile support width, and ``pv_epsilon`` the excision
    radius as a fraction of the window half-width.
    """

    radial_nodes: int = 48
    angular_nodes: int = 16
    split_radius: float = 0.05
    pv_epsilon: float = 1e-7
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.radial_nodes < 16 or self.angular_nodes < 16:
            raise ValueError("node counts must be >= 16")
        if not self.pv_epsilon > 0:
            raise ValueError("pv_epsilon must be positive")
        if not (0 < self.tolerance <= 1e-3):
            raise ValueError("tolerance must lie in (0, 1e-3]")
        if not (0 < self.split_radius < 1):
            raise ValueError("split_radius must lie in (0, 1)")


@lru_cache(maxsize=64)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


# ---------------------------------------------------------------------------
# angular integrals


def _angular_rule(scale: np.ndarray, n_osc: int, quad: QuadratureSpec, level: int):
    """Nodes/weights on ``[0, pi]`` per row, graded from ``scale`` outward."""
    scale = np.atleast_1d(np.asarray(scale, dtype=float))
    if n_osc > 0:
        a_sw = min(math.pi, 2.0 * math.pi / n_osc)
        n_uni = int(math.ceil((math.pi - a_sw) / (math.pi / n_osc))) * level
    else:
        a_sw, n_uni = math.pi, 0
    n_geo = 14 * level
    s = np.clip(scale, 1e-300, a_sw / 2)
    q = (a_sw / s) ** (1.0 / n_geo)
    geo = s[:, None] * q[:, None] ** np.arange(n_geo + 1)[None, :]
    geo[:, -1] = a_sw
    bps = [np.zeros((s.size, 1)), geo]
    if n_uni:
        uni = np.linspace(a_sw, math.pi, n_uni + 1)[1:]
        bps.append(np.broadcast_to(uni, (s.size, n_uni)))
    bp = np.concatenate(bps, axis=1)
    x, w = _gl(quad.angular_nodes)
    left, right = bp[:, :-1], bp[:, 1:]
    half = 0.5 * (right - left)
    nodes = (left + half)[:, :, None] + half[:, :, None] * x[None, None, :]
    weights = half[:, :, None] * w[None, None, :]
    return nodes.reshape(s.size, -1), weights.reshape(s.size, -1)


def _peak_scale(r: float, h: np.ndarray) -> np.ndarray:
    return np.abs(h) / np.sqrt(r * np.maximum(r + h, 1e-300))


def _kernel_rows(kind: str, r: float, h: np.ndarray, gamma: float, n_osc: int, quad, level):
    """Angular integrals over ``(-pi, pi)`` for each shift ``h``.

    kind: 'A' -> int [(r+h)(1-cos a) - h] cos(N a) / D^p
          'B' -> int sin a sin(N a) / D^p
          'E' -> int cos a / D^{(1+gamma)/2}
          'R' -> differentiated-kernel bracket of the differential rotation
    with ``D = h^2 + 2 r (r+h)(1 - cos a)`` and ``p = (3+gamma)/2``.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    a, w = _angular_rule(_peak_scale(r, h), n_osc, quad, level)
    hh = h[:, None]
    c1 = 2.0 * np.sin(0.5 * a) ** 2
    rp = r + hh
    D = hh * hh + 2.0 * r * rp * c1
    p = 0.5 * (3.0 + gamma)
    if kind == "A":
        integrand = (rp * c1 - hh) * D ** (-p)
        if n_osc:
            integrand = integrand * np.cos(n_osc * a)
    elif kind == "B":
        integrand = np.sin(a) * np.sin(n_osc * a) * D ** (-p)
    elif kind == "E":
        integrand = np.cos(a) * D ** (-0.5 * (1.0 + gamma))
    elif kind == "R":
        num = rp * c1 - hh
        Dp = D ** (-p)
        integrand = (Dp - (3.0 + gamma) * num * num * Dp / D - num * Dp / r) / r
    else:
        raise ValueError(kind)
    return 2.0 * np.sum(integrand * w, axis=1)


# ---------------------------------------------------------------------------
# radial rules


def _radial_panels(lo: float, hi: float, anchor: float, width: float, quad: QuadratureSpec, level: int):
    """Composite GL on ``[lo, hi]`` graded geometrically away from ``anchor``.

    ``anchor`` is an endpoint next to which the integrand varies on the scale
    of ``width`` (the singular window edge); further away panels are uniform.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    span = hi - lo
    pts = [lo, hi]
    n_uni = max(2, int(math.ceil(quad.radial_nodes / 16))) * level
    pts.extend(np.linspace(lo, hi, n_uni + 1)[1:-1])
    if anchor is not None and width > 0:
        d = width
        while d < span:
            pts.append(anchor + d if anchor == lo else anchor - d)
            d *= 2.0
    bp = np.unique(np.clip(pts, lo, hi))
    x, w = _gl(16)
    left, right = bp[:-1, None], bp[1:, None]
    half = 0.5 * (right - left)
    return (left + half + half * x).ravel(), (half * w).ravel()


def _window_nodes(eps: float, delta: float, quad: QuadratureSpec, level: int):
    """Log-graded GL nodes for ``h`` in ``[eps, delta]``."""
    n = quad.radial_nodes * level
    x, w = _gl(n)
    s = 0.5 * (x + 1.0)
    span = math.log(delta / eps)
    h = eps * np.exp(span * s)
    return h, 0.5 * w * h * span


def _extrapolate(i_coarse: float, i_fine: float, gamma: float) -> tuple[float, float]:
    """Extrapolate excised integrals with remainder ``~ eps^{1-gamma}``."""
    rho = 2.0 ** (gamma - 1.0)
    remainder = (i_fine - i_coarse) * rho / (1.0 - rho)
    return i_fine + remainder, abs(remainder)


def _refine(fn: Callable[[int], np.ndarray], quad: QuadratureSpec, what: str, floor: float = 0.0):
    """Evaluate at increasing levels until the change drops below tolerance."""
    prev = np.asarray(fn(1), dtype=float)
    cur = np.asarray(fn(2), dtype=float)
    err = np.abs(cur - prev)
    scale = max(float(np.max(np.abs(cur))), floor)
    if np.all(err <= quad.tolerance * scale + 1e-300):
        return cur, err
    nxt = np.asarray(fn(3), dtype=float)
    err3 = np.abs(nxt - cur)
    if np.max(err3) > 0.5 * np.max(err) and np.max(err3) > quad.tolerance * scale:
        raise QuadratureError(
            f"{what}: refinement did not halve the error estimate "
            f"({np.max(err):.3e} -> {np.max(err3):.3e})"
        )
    return nxt, err3


def _support_of(f: RadialProfile) -> tuple[float, float]:
    if f.support is None:
        return (float(f.radii[0]) or 1e-300, float(f.radii[-1]))
    return f.support


class _Rescaled:
    """View of ``f(s rho)``: the kernels are homogeneous, so all quadrature
    runs on unit-scale supports and the result is rescaled afterwards."""

    def __init__(self, f: RadialProfile, s: float):
        self.f, self.s = f, s
        r0, r1 = _support_of(f)
        self.support = (r0 / s, r1 / s)
        self.values = f.values

    def __call__(self, rho, derivative: int = 0):
        return self.f(np.asarray(rho) * self.s, derivative) * self.s**derivative


def _default_radii(f: RadialProfile, n: int = 64) -> np.ndarray:
    r0, r1 = _support_of(f)
    return np.linspace(r1 * 2.0 / n, 2.0 * r1, n)


# ---------------------------------------------------------------------------
# velocity of radial profiles


def _angular_velocity_at(f: RadialProfile, r: float, gamma: float, quad: QuadratureSpec, level: int) -> float:
    r0, r1 = _support_of(f)
    width = r1 - r0
    delta = min(quad.split_radius * width, 0.5 * r)
    fr = float(f(r))
    near = (r + delta > r0) and (r - delta < r1)
    total = 0.0
    if near or fr != 0.0:
        eps = quad.pv_epsilon * delta
        h, w = _window_nodes(eps, delta, quad, level)
        # extra slice [eps/2, eps] for the excision extrapolation
        hx, wx = _window_nodes(eps / 2, eps, replace(quad, radial_nodes=16), 1)

        def pair(hv):
            ap = _kernel_rows("A", r, hv, gamma, 0, quad, level)
            am = _kernel_rows("A", r, -hv, gamma, 0, quad, level)
            return (f(r + hv) - fr) * (r + hv) * ap + (f(r - hv) - fr) * (r - hv) * am

        i_coarse = float(np.dot(pair(h), w))
        i_fine = i_coarse + float(np.dot(pair(hx), wx))
        win, _ = _extrapolate(i_coarse, i_fine, gamma)
        total += win
        if fr != 0.0:
            a, b = r - delta, r + delta
            e = _kernel_rows("E", r, np.array([-delta, delta]), gamma, 0, quad, level)
            tail = (a * e[0] - b * e[1]) / (1.0 + gamma)
            total -= fr * tail
    # outer region over the support
    for lo, hi, anchor in ((r0, min(r1, r - delta), r - delta), (max(r0, r + delta), r1, r + delta)):
        if hi <= lo:
            continue
        anc = anchor if anchor in (lo, hi) else None
        rp, wr = _radial_panels(lo, hi, anc, delta, quad, level)
        total += float(np.dot(f(rp) * rp * _kernel_rows("A", r, rp - r, gamma, 0, quad, level), wr))
    return kernel_constant(gamma) * total


def angular_velocity(f: RadialProfile, gamma: float, quad: QuadratureSpec = QuadratureSpec(), radii=None) -> RadialProfile:
    """Azimuthal velocity ``v_alpha(f)(r)`` of a radial profile.

    The density is subtracted at the evaluation radius inside a small window
    around ``r' = r``; the constant it removes is restored through the exact
    flux of the kernel across the window edges.
    """
    _check_gamma(gamma)
    radii = _default_radii(f) if radii is None else np.unique(np.asarray(radii, dtype=float))
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    if f.is_zero:
        return RadialProfile(radii, np.zeros_like(radii), meta={"gamma": gamma, "kind": "v_alpha"})

    sc = _support_of(f)[1]
    fu = _Rescaled(f, sc)

    def evaluate(level):
        return np.array([0.0 if r == 0 else _angular_velocity_at(fu, r / sc, gamma, quad, level) for r in radii])

    vals, err = _refine(evaluate, quad, "angular_velocity")
    fac = sc ** (-gamma)
    return RadialProfile(radii, vals * fac, meta={"gamma": gamma, "kind": "v_alpha", "error": float(np.max(err)) * fac})


def angular_velocity_derivative(f: RadialProfile, gamma: float, quad: QuadratureSpec = QuadratureSpec(),
                                radii=None, step: float = 2e-3) -> RadialProfile:
    """``d v_alpha / dr`` by fourth-order central differences of the quadrature.

    ``step`` is relative to the support width.  Outside the support the
    differentiated kernel is preferable; see :func:`differential_rotation`.
    """
    radii = _default_radii(f) if radii is None else np.unique(np.asarray(radii, dtype=float))
    r0, r1 = _support_of(f)
    h = step * (r1 - r0)
    if np.any(radii <= 2 * h):
        raise ValueError("radii must exceed twice the differencing step")
    offs = np.array([-2.0, -1.0, 1.0, 2.0])
    pts = (radii[:, None] + h * offs[None, :]).ravel()
    uniq, inv = np.unique(pts, return_inverse=True)
    va = angular_velocity(f, gamma, quad, radii=uniq).values[inv].reshape(radii.size, 4)
    d = (va[:, 0] - 8 * va[:, 1] + 8 * va[:, 2] - va[:, 3]) / (12 * h)
    return RadialProfile(radii, d, meta={"gamma": gamma, "kind": "dv_alpha_dr"})


def _diffrot_at(f: RadialProfile, r: float, gamma: float, quad: QuadratureSpec, level: int) -> float:
    r0, r1 = _support_of(f)
    width = r1 - r0
    gap = min(abs(r - r0), abs(r - r1))
    if r0 < r < r1 or gap == 0:
        raise ValueError(f"evaluation radius {r} lies inside the support [{r0}, {r1}]")
    anchor = r1 if r > r1 else r0
    rp, wr = _radial_panels(r0, r1, anchor, min(gap, width), quad, level)
    kern = _kernel_rows("R", r, rp - r, gamma, 0, quad, level)
    return kernel_constant(gamma) * float(np.dot(f(rp) * rp * kern, wr))


def differential_rotation(f: RadialProfile, gamma: float, quad: QuadratureSpec = QuadratureSpec(), radii=None) -> RadialProfile:
    """``d/dr (v_alpha(f)(r) / r)`` at radii outside the support of ``f``."""
    _check_gamma(gamma)
    radii = _default_radii(f) if radii is None else np.unique(np.asarray(radii, dtype=float))
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    if f.is_zero:
        return RadialProfile(radii, np.zeros_like(radii), meta={"gamma": gamma, "kind": "diffrot"})
    r0, r1 = _support_of(f)
    bad = radii[(radii >= r0) & (radii <= r1)]
    if bad.size:
        raise ValueError(f"evaluation radius {bad[0]} lies inside the support [{r0}, {r1}]")

    sc = r1
    fu = _Rescaled(f, sc)

    def evaluate(level):
        return np.array([_diffrot_at(fu, r / sc, gamma, quad, level) for r in radii])

    vals, err = _refine(evaluate, quad, "differential_rotation")
    fac = sc ** (-gamma - 2.0)
    return RadialProfile(radii, vals * fac, meta={"gamma": gamma, "kind": "diffrot", "error": float(np.max(err)) * fac})


# ---------------------------------------------------------------------------
# oscillatory data


def perturbation_velocity_polar(
    g: RadialProfile,
    alpha0,
    N: int,
    gamma: float,
    component: str,
    point: tuple[float, float],
    quad: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Velocity component of ``g(r) sin(N alpha - N alpha0(r))`` at ``point = (r, alpha)``.

    ``alpha0`` is a radial profile, a callable of ``r``, or ``None`` for 0.
    """
    _check_gamma(gamma)
    N = int(N)
    if N < 1:
        raise ValueError("N must be a positive integer")
    if component not in ("radial", "angular"):
        raise ValueError("component must be 'radial' or 'angular'")
    r, alpha = float(point[0]), float(point[1])
    if r <= 0:
        raise ValueError("evaluation radius must be positive")
    if g.is_zero:
        return 0.0
    phase = (lambda rr: np.zeros_like(np.asarray(rr, dtype=float))) if alpha0 is None else alpha0
    if component == "angular":
        kind, power, trig = "A", 1, np.sin
    else:
        kind, power, trig = "B", 2, np.cos

    sc = _support_of(g)[1]
    gu = _Rescaled(g, sc)
    r = r / sc

    def G(rr):
        rr = np.asarray(rr, dtype=float)
        return gu(rr) * rr**power * trig(N * alpha - N * np.asarray(phase(rr * sc), dtype=float))

    r0, r1 = gu.support
    delta = min(quad.split_radius * (r1 - r0), 0.5 * r)

    def total(level):
        acc = 0.0
        if (r + delta > r0) and (r - delta < r1):
            eps = quad.pv_epsilon * delta

            def pair(hv):
                kp = _kernel_rows(kind, r, hv, gamma, N, quad, level)
                km = _kernel_rows(kind, r, -hv, gamma, N, quad, level)
                return G(r + hv) * kp + G(r - hv) * km

            h, w = _window_nodes(eps, delta, quad, level)
            hx, wx = _window_nodes(eps / 2, eps, replace(quad, radial_nodes=16), 1)
            i_coarse = float(np.dot(pair(h), w))
            acc += _extrapolate(i_coarse, i_coarse + float(np.dot(pair(hx), wx)), gamma)[0]
        for lo, hi, anchor in ((r0, min(r1, r - delta), r - delta), (max(r0, r + delta), r1, r + delta)):
            if hi <= lo:
                continue
            anc = anchor if anchor in (lo, hi) else None
            rp, wr = _radial_panels(lo, hi, anc, delta, quad, level)
            acc += float(np.dot(G(rp) * _kernel_rows(kind, r, rp - r, gamma, N, quad, level), wr))
        return kernel_constant(gamma) * acc

    val, _ = _refine(total, quad, "perturbation_velocity_polar", floor=_osc_scale(g, N, gamma))
    return float(val) * sc ** (-gamma)


def _osc_scale(g: RadialProfile, N: int, gamma: float) -> float:
    """Unit-scale velocity magnitude used as the absolute floor for convergence checks."""
    amp = float(np.max(np.abs(g.values))) if g.values.size else 0.0
    return 1e-3 * amp * N**gamma


# ---------------------------------------------------------------------------
# periodic-image oracle


def periodic_angular_velocity(f: RadialProfile, gamma: float, L: float, points: np.ndarray,
                              quad: QuadratureSpec = QuadratureSpec(), images: int = 64) -> np.ndarray:
    """Velocity at ``points`` (shape (m, 2)) of ``f`` periodised with period ``L``.

    The central copy is integrated directly; image copies use a tabulated
    far-field profile.  Lattice sums over squares of half-width ``M/4``,
    ``M/2`` and ``M`` are Richardson-extrapolated in ``M``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r0, r1 = _support_of(f)
    if r1 > L / 4:
        raise ValueError("support must lie within L/4 for the image expansion")
    rad = np.hypot(pts[:, 0], pts[:, 1])
    uniq, inv = np.unique(rad, return_inverse=True)
    central = angular_velocity(f, gamma, quad, radii=uniq).values[inv]
    out = np.zeros_like(pts)
    safe = np.where(rad > 0, rad, 1.0)
    out[:, 0] = -pts[:, 1] / safe * central
    out[:, 1] = pts[:, 0] / safe * central

    rho_lo, rho_hi = L / 4, L * (2 * images + 2)
    tab_r = np.geomspace(rho_lo, rho_hi, 48)
    tab_v = angular_velocity(f, gamma, quad, radii=tab_r).values * tab_r ** (2 + gamma)
    spl = make_interp_spline(np.log(tab_r), tab_v, k=5)

    def lattice_sum(M):
        m = np.arange(-M, M + 1)
        m1, m2 = np.meshgrid(m, m, indexing="ij")
        keep = (m1 != 0) | (m2 != 0)
        c1, c2 = (L * m1[keep])[None, :], (L * m2[keep])[None, :]
        z1 = pts[:, 0:1] - c1
        z2 = pts[:, 1:2] - c2
        rho = np.hypot(z1, z2)
        va = spl(np.log(rho)) * rho ** (-(2 + gamma))
        return np.stack([np.sum(-z2 / rho * va, axis=1), np.sum(z1 / rho * va, axis=1)], axis=1)

    # shell remainders behave like a M^{-(1+gamma)} + b M^{-(2+gamma)}
    sums = [lattice_sum(images // 4), lattice_sum(images // 2), lattice_sum(images)]
    for p in (1.0 + gamma, 2.0 + gamma):
        q = 2.0 ** (-p)
        sums = [b + (b - a) * q / (1.0 - q) for a, b in zip(sums[:-1], sums[1:])]
    return out + sums[0]


# ---------------------------------------------------------------------------
# constructions


def make_seed_bump(a0: float, a1: float, n: int = 401) -> RadialProfile:
    """Bump on ``[a0, a1]`` normalised so that ``int_0^inf s h(s) ds = 1``."""
    if not (0 < a0 < a1) or not np.isfinite(a1):
        raise ValueError(f"need 0 < a0 < a1, got ({a0}, {a1})")
    unit = BumpShape(a0, a1, 1.0)
    x, w = _gl(200)
    half = 0.5 * (a1 - a0)
    s = 0.5 * (a0 + a1) + half * x
    moment = float(np.dot(s * unit(s), w) * half)
    shape = BumpShape(a0, a1, 1.0 / moment)
    return RadialProfile.from_shape(shape, n, meta={"kind": "seed", "a0": a0, "a1": a1})


def _dilated(p: RadialProfile, lam: float, scale: float, meta: dict, n: int = 401) -> RadialProfile:
    """Profile of ``scale * p(lam * r)``."""
    return RadialProfile.from_shape(p.shape.dilate(lam, scale), n, meta=meta)


def _diffrot_value(f: RadialProfile, r: float, gamma: float, quad) -> float:
    return float(differential_rotation(f, gamma, quad, radii=[r]).values[0])


def construct_g(gamma: float, eps: float = 0.5, delta_target: float = 1e-2,
                quad: QuadratureSpec = QuadratureSpec(), seed: Optional[RadialProfile] = None,
                lam_cap: float = 1e6) -> tuple[RadialProfile, float]:
    """Concentrate a seed bump, ``g = lam^2 h(lam r)``, until its differential
    rotation at ``r = 1`` is close to the point-vortex limit.

    ``delta_target`` is relative to the magnitude of the value at ``r = 1``.
    Returns ``(g, lam)``.
    """
    _check_gamma(gamma)
    if not eps > 0:
        raise ValueError("eps must be positive")
    seed = make_seed_bump(0.25, 0.5) if seed is None else seed
    a1 = seed.support[1]
    threshold = math.pi * (3 + gamma) * abs(kernel_constant(gamma))
    lam = max(1.0, a1 / eps * (1 + 1e-9))
    while a1 / lam >= eps:
        lam *= 2
    cur_g = _dilated(seed, lam, lam**2, {"kind": "g", "lambda": lam, "gamma": gamma})
    cur = _diffrot_value(cur_g, 1.0, gamma, quad)
    while lam <= lam_cap:
        nxt_g = _dilated(seed, 2 * lam, (2 * lam) ** 2, {"kind": "g", "lambda": 2 * lam, "gamma": gamma})
        nxt = _diffrot_value(nxt_g, 1.0, gamma, quad)
        limit = nxt + (nxt - cur) / 3.0  # corrections decay like lam^{-2}
        if abs(cur) >= threshold and abs(cur - limit) <= delta_target * abs(cur):
            meta = dict(cur_g.meta, diffrot_at_1=cur, limit_estimate=limit, threshold=threshold)
            return RadialProfile.from_shape(cur_g.shape, meta=meta), lam
        lam, cur_g, cur = 2 * lam, nxt_g, nxt
    raise QuadratureError(f"construct_g: lambda exceeded {lam_cap:g} without convergence")


def embed_profile(f: RadialProfile, n: int = 512, L: Optional[float] = None, grid=None):
    """Sample a radial profile on a periodic grid (support within L/4)."""
    from .spectral import GridSpec, SpectralField

    if grid is None:
        r1 = _support_of(f)[1]
        grid = GridSpec(n, 4.0 * r1 if L is None else L)
    r, _ = grid.polar
    return SpectralField.from_values(grid, f(r))


def profile_sobolev_norm(f: RadialProfile, s: float, n: int = 512, homogeneous: bool = False) -> float:
    from .spectral import SobolevSpec, sobolev_norm

    return sobolev_norm(embed_profile(f, n), SobolevSpec(s, homogeneous))


def profile_l2_norm(f: RadialProfile) -> float:
    """2-D L2 norm of a compactly supported radial profile (weight 2 pi r)."""
    r0, r1 = _support_of(f)
    x, w = _gl(200)
    half = 0.5 * (r1 - r0)
    rr = 0.5 * (r0 + r1) + half * x
    return math.sqrt(2 * math.pi * float(np.dot(rr * f(rr) ** 2, w)) * half)


def _embedding_n(f: RadialProfile, pts_per_width: int = 96) -> int:
    r0, r1 = _support_of(f)
    need = 4.0 * r1 / (r1 - r0) * pts_per_width
    return int(2 ** math.ceil(math.log2(max(need, 64))))


@dataclass(frozen=True, eq=False)
class F1Construction:
    """Result of :func:`construct_f1`; unpacks as ``(f1, r_cK, a1)``."""

    f1: RadialProfile
    r_cK: float
    a1: float
    gamma: float
    beta: float
    c: float
    K: float
    lambda1: float
    lambda2: float
    g: RadialProfile
    delta: float
    steepness: float
    hbeta_norm: float

    def __iter__(self):
        return iter((self.f1, self.r_cK, self.a1))


def construct_f1(beta: float, gamma: float, c: float, K: float, eps: float = 0.5,
                 quad: QuadratureSpec = QuadratureSpec(), delta_target: float = 1e-2,
                 seed: Optional[RadialProfile] = None, norm_n: Optional[int] = None) -> F1Construction:
    """Radial datum with small ``H^beta`` norm and steep differential rotation.

    ``f1 = g(lam1 r) / (lam2 lam1^{beta-1})``; ``lam2`` enforces the norm budget
    ``c`` and ``lam1`` the steepness ``K / (2 a1)`` at ``r = 2 a1 = 1/lam1``.
    """
    _check_gamma(gamma)
    if not (1 <= beta < 2 + gamma):
        if beta >= 2 + gamma:
            raise ValueError("beta >= 2+gamma: the steepness exponent 2-beta+gamma must be positive")
        raise ValueError("beta must be >= 1")
    if not (c > 0 and K > 0):
        raise ValueError("c and K must be positive")
    g, lam_g = construct_g(gamma, min(eps, 0.5), delta_target, quad, seed)
    if g.support[1] >= 0.5:
        raise ValueError("seed support must lie inside (0, 1/2)")
    delta = abs(float(g.meta["diffrot_at_1"]))
    n_emb = norm_n or _embedding_n(g)
    g_norm = profile_sobolev_norm(g, beta, n_emb)
    lam2 = g_norm / c * (1 + 1e-6)
    expo = 2.0 - beta + gamma
    for _ in range(50):
        lam1 = max(1.0, (K * lam2 / delta) ** (1.0 / expo) * (1 + 1e-9))
        while g.support[1] / lam1 >= eps:
            lam1 *= 2
        for _ in range(200):
            f1 = _dilated(g, lam1, 1.0 / (lam2 * lam1 ** (beta - 1)),
                          {"kind": "f1", "gamma": gamma, "beta": beta, "c": c, "K": K,
                           "lambda1": lam1, "lambda2": lam2})
            a1 = 0.5 / lam1
            steep = abs(_diffrot_value(f1, 2 * a1, gamma, quad))
            if steep >= K / (2 * a1):
                break
            lam1 *= 1.01
        else:
            raise QuadratureError("construct_f1: steepness target not reached")
        measured = profile_sobolev_norm(f1, beta, n_emb)
        if measured <= c:
            meta = dict(f1.meta, hbeta_norm=measured, steepness=steep, r_cK=2 * a1, a1=a1)
            f1 = RadialProfile.from_shape(f1.shape, meta=meta)
            return F1Construction(f1, 2 * a1, a1, gamma, beta, c, K, lam1, lam2, g, delta, steep, measured)
        lam2 *= measured / c * (1 + 1e-6)
    raise QuadratureError("construct_f1: norm budget could not be met")


def steepness_interval(f1c: F1Construction, quad: QuadratureSpec = QuadratureSpec(), samples: int = 241):
    """Connected interval around ``r_cK`` inside ``[2 r_cK/3, 3 r_cK/2]`` where
    ``|d/dr(v_alpha/r)| >= K/(2r)``; returns ``(lo, hi, radii, values)``."""
    rc, K = f1c.r_cK, f1c.K
    lo_cap = max(2 * rc / 3, f1c.f1.support[1] * (1 + 1e-9))
    radii = np.linspace(lo_cap, 1.5 * rc, samples)
    dr = differential_rotation(f1c.f1, f1c.gamma, quad, radii=radii).values
    ok = np.abs(dr) >= K / (2 * radii)
    i = int(np.argmin(np.abs(radii - rc)))
    if not ok[i]:
        raise ValueError("steepness condition fails at r_cK: empty admissible interval")
    lo_i = i
    while lo_i > 0 and ok[lo_i - 1]:
        lo_i -= 1
    hi_i = i
    while hi_i < samples - 1 and ok[hi_i + 1]:
        hi_i += 1
    if hi_i == lo_i:
        raise ValueError("empty admissible interval for f2")
    return radii[lo_i], radii[hi_i], radii, dr


def construct_f2(f1c: F1Construction, c: Optional[float] = None, quad: QuadratureSpec = QuadratureSpec()) -> RadialProfile:
    """Bump on the steep annulus around ``r_cK`` with 2-D L2 norm ``c``."""
    c = f1c.c if c is None else c
    if not c > 0:
        raise ValueError("c must be positive")
    lo, hi, radii, dr = steepness_interval(f1c, quad)
    unit = BumpShape(lo, hi, 1.0)
    probe = RadialProfile.from_shape(unit)
    amp = c / profile_l2_norm(probe)
    meta = {"kind": "f2", "c": c, "K": f1c.K, "r_cK": f1c.r_cK, "lo": lo, "hi": hi}
    return RadialProfile.from_shape(BumpShape(lo, hi, amp), meta=meta, r_max=1.6 * f1c.r_cK)


# ---------------------------------------------------------------------------
# diagnostics and IO


def estimate_ck_bounds(f: RadialProfile, kmax: int = 6, n: int = 1024) -> tuple[float, ...]:
    """Sup norms of ``f^{(k)}``, ``k <= kmax``, by spectral differentiation of
    the spline-interpolated profile on a periodic extension of its support."""
    r0, r1 = _support_of(f)
    pad = 0.5 * (r1 - r0)
    a, b = max(0.0, r0 - pad), r1 + pad
    x = a + (b - a) * np.arange(n) / n
    samples = f.values if f.support is None else None
    spl = make_interp_spline(f.radii, f.values, k=5) if samples is not None or f.shape is None else None
    y = spl(x) if spl is not None else f(x)
    if f.support is not None and spl is not None:
        y = np.where((x > r0) & (x < r1), y, 0.0)
    k = 2 * np.pi * np.fft.rfftfreq(n, (b - a) / n)
    yh = np.fft.rfft(y)
    cut = k > (2.0 / 3.0) * k.max()
    bounds = []
    for order in range(kmax + 1):
        d = np.fft.irfft(np.where(cut, 0, yh * (1j * k) ** order), n)
        bounds.append(float(np.max(np.abs(d))))
    return tuple(bounds)


def write_profile(path, f: RadialProfile, params: Optional[dict] = None) -> Path:
    """Two-column text ``r f(r)`` with a commented header."""
    path = Path(path)
    lines = ["# gsqg radial profile"]
    if f.support is not None:
        lines.append(f"# support: {float(f.support[0])!r} {float(f.support[1])!r}")
    for key, val in {**f.meta, **(params or {})}.items():
        if isinstance(val, (int, float, str)):
            if isinstance(val, float):
                val = float(val)  # plain repr for numpy scalars
            lines.append(f"# {key}: {val!r}" if not isinstance(val, str) else f"# {key}: {val}")
    body = "\n".join(f"{r:.17e} {v:.17e}" for r, v in zip(f.radii, f.values))
    path.write_text("\n".join(lines) + "\n" + body + "\n")
    return path


def read_profile(path) -> RadialProfile:
    support = None
    meta: dict = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if ":" in body:
                key, val = (t.strip() for t in body.split(":", 1))
                if key == "support":
                    a, b = val.split()
                    support = (float(a), float(b))
                else:
                    try:
                        meta[key] = float(val)
                    except ValueError:
                        meta[key] = val
            continue
        rows.append([float(t) for t in s.split()])
    arr = np.asarray(rows, dtype=float)
    return RadialProfile(arr[:, 0], arr[:, 1], support, meta=meta)
