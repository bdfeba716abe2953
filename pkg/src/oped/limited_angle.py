"""Completion of missing sine coefficients for the limited-angle problem.

For every frequency k the coefficients of the r missing views solve an
r x r symmetric system whose matrix is ``I - w * eta(k/N_d) * B_k`` with
``B_k[mu, nu] = U_k(cos(phi_mu - phi_nu))`` and ``w = 1/N_sys``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from oped.errors import PreconditionError
from oped.phantom import ODD_FULL_CIRCLE, SinogramGeometry
from oped.transform import FilterSpec, SineCoefficientSet, eta_eval

KINDS = ("B", "M", "A")

PIVOT_FLOOR = 1e-13
SPECTRAL_CUTOFF = 1e-12
RESIDUAL_TOL = 1e-8
# documented safety margin below the tau bound; not enforced
RECOMMENDED_MARGIN = 0.05


def kernel_matrix(k: int, rows, cols, spacing: float) -> np.ndarray:
    """``U_k(cos((mu - nu) * spacing))`` for integer view indices ``rows x cols``."""
    lag = np.subtract.outer(np.asarray(rows), np.asarray(cols))
    d = lag * spacing
    sin_d = np.sin(d)
    safe = np.abs(sin_d) > 1e-8
    out = np.empty(d.shape)
    out[safe] = np.sin((k + 1) * d[safe]) / sin_d[safe]
    # d is a multiple of pi here: U_k(+-1) = (+-1)^k (k+1)
    sign = np.where(np.cos(d[~safe]) > 0, 1.0, (-1.0) ** k)
    out[~safe] = sign * (k + 1)
    return out


def geometry_spacing(geometry: SinogramGeometry) -> float:
    if geometry.parity == ODD_FULL_CIRCLE:
        return math.pi / geometry.N
    return 2 * math.pi / geometry.N


@dataclass
class CompletionMatrix:
    kind: str
    k: int
    r: int
    n_sys: int
    entries: np.ndarray
    filter: Optional[FilterSpec] = None


def build_matrix(
    kind: str,
    k: int,
    r: int,
    n_sys: int,
    filter: Optional[FilterSpec] = None,
    *,
    spacing: Optional[float] = None,
    n_d: Optional[int] = None,
) -> CompletionMatrix:
    """B, M or A for frequency ``k`` over the first ``r`` views.

    ``spacing`` is the angle between consecutive views. The default
    ``pi/n_sys`` matches both reconstruction pipelines (views over a half
    circle); pass ``2*pi/n_sys`` for views spread over the full circle.
    Note that with full-circle spacing and ``r > n_sys/2`` the index set
    contains antipodal views and M is no longer confined to [0, 1].
    The filter argument is ``k/n_d`` with ``n_d`` defaulting to ``n_sys``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown matrix kind {kind!r}")
    if r <= 0:
        raise ValueError(f"matrix size r must be positive, got {r}")
    n_d = n_sys if n_d is None else n_d
    if not 0 <= k < max(n_sys, n_d):
        raise ValueError(f"frequency k={k} out of range [0, {max(n_sys, n_d)})")
    if spacing is None:
        spacing = math.pi / n_sys
    idx = np.arange(r)
    b = kernel_matrix(k, idx, idx, spacing)
    if kind == "B":
        entries = b
    elif kind == "M":
        entries = np.eye(r) - b / n_sys
    else:
        if filter is None:
            raise ValueError("kind A needs a filter")
        entries = np.eye(r) - float(eta_eval(filter, k / n_d)) * b / n_sys
    return CompletionMatrix(kind, k, r, n_sys, entries, filter)


@dataclass
class CompletionSystem:
    k: int
    matrix: CompletionMatrix
    rhs: np.ndarray
    solution: Optional[np.ndarray] = None
    ill_conditioned: bool = False
    residual: Optional[float] = None


def missing_prefix(coeffs: SineCoefficientSet) -> int:
    avail = coeffs.available
    r = int(np.count_nonzero(~avail))
    if r and (avail[:r].any() or not avail[r:].all()):
        raise ValueError("missing views must form a prefix 0..r-1")
    return r


def assemble_system(coeffs: SineCoefficientSet, k: int, filter: FilterSpec) -> CompletionSystem:
    g = coeffs.geometry
    r = missing_prefix(coeffs)
    if r == 0:
        raise ValueError("no missing views; nothing to solve")
    if not 0 <= k < g.n_d:
        raise ValueError(f"frequency k={k} out of range [0, {g.n_d})")
    spacing = geometry_spacing(g)
    scale = float(eta_eval(filter, k / g.n_d)) / g.n_sys
    missing = np.arange(r)
    present = np.arange(r, g.view_count)
    rhs = scale * kernel_matrix(k, missing, present, spacing) @ coeffs.lam[k, r:]
    entries = np.eye(r) - scale * kernel_matrix(k, missing, missing, spacing)
    matrix = CompletionMatrix("A", k, r, g.n_sys, entries, filter)
    return CompletionSystem(k, matrix, rhs)


def cholesky(a: np.ndarray, floor: float) -> np.ndarray:
    """Lower Cholesky factor without pivoting; raises if a pivot drops to ``floor``."""
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if d <= floor:
            raise np.linalg.LinAlgError(f"pivot {d:.3e} at column {j} is not positive")
        low[j, j] = math.sqrt(d)
        low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return low


def solve_system(system: CompletionSystem) -> np.ndarray:
    """Cholesky solve, with a truncated spectral solve if the factorization breaks down."""
    a = system.matrix.entries
    b = np.asarray(system.rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {a.shape}, rhs {b.shape}")
    norm = float(np.max(np.abs(a))) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * max(norm, 1.0):
        raise ValueError("completion matrix is not symmetric")
    ill = False
    try:
        low = cholesky(a, PIVOT_FLOOR * np.linalg.norm(a, np.inf))
        x = solve_triangular(low.T, solve_triangular(low, b, lower=True), lower=False)
    except np.linalg.LinAlgError:
        ill = True
        w, v = np.linalg.eigh(a)
        keep = w > SPECTRAL_CUTOFF * np.max(np.abs(w))
        x = v[:, keep] @ ((v[:, keep].T @ b) / w[keep])
    residual = float(np.max(np.abs(a @ x - b), initial=0.0))
    if residual > RESIDUAL_TOL * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        ill = True
    system.solution = x
    system.ill_conditioned = ill
    system.residual = residual
    return x


def tau_bound(r: int, n_sys: int) -> float:
    return 1.0 - r / n_sys


def complete_coefficients(
    coeffs: SineCoefficientSet, filter: FilterSpec, workers: Optional[int] = None
) -> SineCoefficientSet:
    """Recover the coefficients of the missing leading views, one system per frequency."""
    r = missing_prefix(coeffs)
    out = coeffs.copy()
    g = coeffs.geometry
    if r == 0:
        out.ill_conditioned = np.zeros(g.n_d, dtype=bool)
        return out
    bound = tau_bound(r, g.n_sys)
    if not filter.tau < bound:
        raise PreconditionError(
            f"tau={filter.tau:g} violates tau < 1 - r/N_sys = 1 - {r}/{g.n_sys} = {bound:.6g}; "
            "the completion matrices are singular in this regime"
        )

    def solve_one(k):
        system = assemble_system(coeffs, k, filter)
        return solve_system(system), system.ill_conditioned

    ks = range(g.n_d)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(solve_one, ks))
    else:
        results = [solve_one(k) for k in ks]
    flags = np.zeros(g.n_d, dtype=bool)
    for k, (x, ill) in enumerate(results):
        out.lam[k, :r] = x
        flags[k] = ill
    out.available[:] = True
    out.ill_conditioned = flags
    return out
