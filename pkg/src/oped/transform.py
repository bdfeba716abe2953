"""Chebyshev polynomials, the eta filter, sine coefficients and OPED evaluation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft

from oped.phantom import FULL_CIRCLE, ODD_FULL_CIRCLE, Sinogram, SinogramGeometry

_DOMAIN_TOL = 1e-12
_SINE_FLOOR = 1e-8

PLATEAU = "plateau"
BUMP = "bump"


def _clamp_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + _DOMAIN_TOL):
        worst = float(np.max(np.abs(t)))
        raise ValueError(f"Chebyshev argument outside [-1, 1]: |t| = {worst!r}")
    return np.clip(t, -1.0, 1.0)


def chebyshev_u(k: int, t):
    """Chebyshev polynomial of the second kind ``U_k(t)``.

    Uses ``sin((k+1)theta)/sin(theta)`` away from the endpoints and the
    three-term recurrence where ``|sin(theta)| <= 1e-8``.
    """
    k = int(k)
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    t = _clamp_unit(t)
    theta = np.arccos(t)
    sin_theta = np.sin(theta)
    safe = np.abs(sin_theta) > _SINE_FLOOR
    out = np.empty_like(t)
    out[safe] = np.sin((k + 1) * theta[safe]) / sin_theta[safe]
    if not np.all(safe):
        tt = t[~safe]
        prev, cur = np.zeros_like(tt), np.ones_like(tt)
        for _ in range(k):
            prev, cur = cur, 2.0 * tt * cur - prev
        out[~safe] = cur
    return out[()] if out.ndim == 0 else out


def chebyshev_u_series(coeffs, t):
    """Clenshaw sum ``sum_k coeffs[k] * U_k(t)``."""
    t = np.asarray(t, dtype=float)
    two_t = 2.0 * t
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    tmp = np.empty_like(t)
    for c in np.asarray(coeffs, dtype=float)[::-1]:
        np.multiply(two_t, b1, out=tmp)
        tmp -= b2
        tmp += c
        b1, b2, tmp = tmp, b1, b2
    return b1


def bump_h(k: int, t):
    """``h_k(t) = (1-t)^(k+1) * sum_{j<=k} C(k+j, j) t^j`` on [0, 1]."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("bump_h is defined on [0, 1]")
    total = np.zeros_like(t)
    for j in range(k + 1):
        total = total + math.comb(k + j, j) * t**j
    out = (1.0 - t) ** (k + 1) * total
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class FilterSpec:
    """Frequency filter eta: 1 on [0, tau], then a smooth decrease to ``beta`` at 1.

    ``profile="plateau"`` uses the cubic ``(beta-1)(3u^2 - 2u^3) + 1``;
    ``profile="bump"`` uses ``beta + (1-beta) h_order(u)``, which is the pure
    ``h_order`` bump when beta is 0.
    """

    tau: float = 0.0
    beta: float = 0.9
    order: int = 3
    profile: str = PLATEAU

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.profile not in (PLATEAU, BUMP):
            raise ValueError(f"unknown filter profile {self.profile!r}")
        if self.order < 0:
            raise ValueError("order must be non-negative")

    def __call__(self, t):
        return eta_eval(self, t)

    def describe(self) -> str:
        if self.profile == PLATEAU:
            return f"plateau cubic, tau={self.tau:g}, beta={self.beta:g}"
        return f"bump h_{self.order}, tau={self.tau:g}, beta={self.beta:g}"


def eta_eval(f: FilterSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("eta is defined for t >= 0")
    if f.tau >= 1:
        raise ValueError("tau must be < 1")
    u = np.clip((t - f.tau) / (1.0 - f.tau), 0.0, 1.0)
    if f.profile == PLATEAU:
        ramp = (f.beta - 1.0) * (3 * u**2 - 2 * u**3) + 1.0
    else:
        ramp = f.beta + (1.0 - f.beta) * bump_h(f.order, u)
    out = np.where(t <= f.tau, 1.0, np.where(t > 1.0, f.beta, ramp))
    return out[()] if out.ndim == 0 else out


@dataclass
class SineCoefficientSet:
    """``lam[k, nu]`` for frequency k and view nu; missing views hold zeros."""

    geometry: SinogramGeometry
    lam: np.ndarray
    available: np.ndarray
    ill_conditioned: Optional[np.ndarray] = None

    @property
    def n_d(self) -> int:
        return self.geometry.n_d

    @property
    def view_count(self) -> int:
        return self.geometry.view_count

    @property
    def r(self) -> int:
        return int(np.argmax(self.available)) if not self.available.all() else 0

    @property
    def is_complete(self) -> bool:
        return bool(self.available.all())

    def copy(self) -> "SineCoefficientSet":
        flags = None if self.ill_conditioned is None else self.ill_conditioned.copy()
        return SineCoefficientSet(self.geometry, self.lam.copy(), self.available.copy(), flags)


def sine_matrix(n_d: int) -> np.ndarray:
    psi = (2 * np.arange(n_d) + 1) * np.pi / (2 * n_d)
    return np.sin(np.outer(np.arange(1, n_d + 1), psi))


def sine_coefficients(s: Sinogram, method: str = "fast") -> SineCoefficientSet:
    """Per-view discrete sine transform ``(1/N_d) sum_j sin((k+1) psi_j) g[nu, j]``."""
    g = s.geometry
    if method == "fast":
        # DST-II carries a factor 2 relative to the plain sine sum
        partial = scipy.fft.dst(s.values, type=2, axis=1) / (2.0 * g.n_d)
    elif method == "direct":
        partial = s.values @ sine_matrix(g.n_d).T / g.n_d
    else:
        raise ValueError(f"unknown method {method!r}")
    lam = np.zeros((g.n_d, g.view_count))
    lam[:, g.r :] = partial.T
    available = np.zeros(g.view_count, dtype=bool)
    available[g.r :] = True
    return SineCoefficientSet(g, lam, available)


def half_circle_symmetry_residual(coeffs: SineCoefficientSet) -> float:
    g = coeffs.geometry
    if g.N % 2:
        raise ValueError("the half-circle symmetry needs even N")
    if g.parity != FULL_CIRCLE or not coeffs.is_complete:
        raise ValueError("need complete coefficients over the full circle")
    half = g.N // 2
    signs = (-1.0) ** np.arange(g.n_d)
    diff = coeffs.lam[:, half:] - signs[:, None] * coeffs.lam[:, :half]
    return float(np.max(np.abs(diff)))


def half_circle_symmetry_check(coeffs: SineCoefficientSet, tol: float = 1e-10) -> bool:
    """True iff ``lam[k, nu + N/2] == (-1)^k lam[k, nu]`` for all entries, within ``tol``."""
    return half_circle_symmetry_residual(coeffs) <= tol


@dataclass
class ReconImage:
    values: np.ndarray
    mask: np.ndarray

    @property
    def M(self) -> int:
        return self.values.shape[0]


def pixel_centers(M: int):
    """Pixel-center coordinates (row 0 at the top) and the inside-disk mask."""
    idx = (2 * np.arange(M) + 1) / M
    x = np.broadcast_to(idx - 1.0, (M, M))
    y = np.broadcast_to((1.0 - idx)[:, None], (M, M))
    mask = x * x + y * y <= 1.0
    return np.array(x), np.array(y), mask


def evaluate_points(coeffs: SineCoefficientSet, f: FilterSpec, x, y) -> np.ndarray:
    """OPED approximation at arbitrary points of the closed unit disk."""
    if not coeffs.is_complete:
        missing = np.flatnonzero(~coeffs.available)
        raise ValueError(f"coefficients missing for views {missing.tolist()}; complete them first")
    g = coeffs.geometry
    k = np.arange(g.n_d)
    weights = eta_eval(f, k / g.n_d) * (k + 1)
    series = weights[:, None] * coeffs.lam
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    acc = np.zeros(np.broadcast(x, y).shape)
    for nu, phi in enumerate(g.angles):
        s = _clamp_unit(x * math.cos(phi) + y * math.sin(phi))
        acc += chebyshev_u_series(series[:, nu], s)
    return g.weight * acc


def oped_evaluate(
    coeffs: SineCoefficientSet,
    f: FilterSpec,
    M: int,
    workers: Optional[int] = None,
    chunk: int = 1 << 16,
) -> ReconImage:
    """Evaluate the reconstruction on an ``M x M`` pixel grid over [-1, 1]^2."""
    x, y, mask = pixel_centers(M)
    px, py = x[mask], y[mask]
    bounds = [(i, min(i + chunk, px.size)) for i in range(0, px.size, chunk)]

    def work(b):
        lo, hi = b
        return evaluate_points(coeffs, f, px[lo:hi], py[lo:hi])

    if workers and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    values = np.zeros((M, M))
    values[mask] = np.concatenate(parts) if parts else []
    return ReconImage(values, mask)


def parity_equivalence(
    full: SineCoefficientSet, half: SineCoefficientSet, f: FilterSpec, M: int
) -> float:
    """Max pixel difference between full-circle and half-circle evaluation for odd N."""
    if full.geometry.N % 2 == 0:
        raise ValueError("parity equivalence applies to odd N only")
    if full.geometry.parity != FULL_CIRCLE or half.geometry.parity != ODD_FULL_CIRCLE:
        raise ValueError("expected a full_circle set and an odd_full_circle set")
    if full.geometry.N != half.geometry.N or full.n_d != half.n_d:
        raise ValueError("both sets must share N and N_d")
    a = oped_evaluate(full, f, M)
    b = oped_evaluate(half, f, M)
    return float(np.max(np.abs(a.values - b.values)))
