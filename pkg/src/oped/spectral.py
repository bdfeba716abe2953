"""Eigenvalues and condition numbers of the completion matrices."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from oped.errors import ConvergenceError
from oped.limited_angle import build_matrix
from oped.transform import FilterSpec

JACOBI_TOL = 1e-13
MAX_SWEEPS = 60
INF_RATIO = 1e-13
# matrix entries per batched Jacobi call; larger stacks become memory-bound
STACK_BUDGET = 50_000

HALF = "half"
FULL = "full"

# default (tau, beta) grid for condition-number sweeps
STANDARD_SWEEP = ((0.0, 0.5), (0.0, 0.9), (0.1, 0.5), (0.1, 0.9), (0.2, 0.5), (0.2, 0.9))


def _round_robin(m: int):
    """Pairings for m (even) players: every pair meets exactly once over m-1 rounds."""
    players = list(range(m))
    for _ in range(m - 1):
        yield [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        players = [players[0], players[-1]] + players[1:-1]


def _pair_rounds(n: int):
    rounds = []
    for pairs in _round_robin(n + (n % 2)):
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
    return rounds


def _off_norms(a: np.ndarray) -> np.ndarray:
    # summing the off-diagonal squares directly; ||A||^2 - ||diag||^2 cancels
    off = a * (1.0 - np.eye(a.shape[1]))
    return np.sqrt(np.sum(off * off, axis=(1, 2)))


def _sweep(a: np.ndarray, rounds, floor: np.ndarray) -> None:
    """One cyclic sweep over a stack of symmetric matrices, in place."""
    for p, q in rounds:
        apq = a[:, p, q]
        app = a[:, p, p]
        aqq = a[:, q, q]
        active = np.abs(apq) > floor[:, None]
        if not active.any():
            continue
        safe_apq = np.where(active, apq, 1.0)
        theta = (aqq - app) / (2.0 * safe_apq)
        t = np.where(theta == 0, 1.0, np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0)))
        t = np.where(active, t, 0.0)
        c = 1.0 / np.sqrt(t * t + 1.0)
        s = t * c
        cols_p, cols_q = a[:, :, p], a[:, :, q]
        a[:, :, p] = cols_p * c[:, None, :] - cols_q * s[:, None, :]
        a[:, :, q] = cols_p * s[:, None, :] + cols_q * c[:, None, :]
        rows_p, rows_q = a[:, p, :], a[:, q, :]
        a[:, p, :] = c[:, :, None] * rows_p - s[:, :, None] * rows_q
        a[:, q, :] = s[:, :, None] * rows_p + c[:, :, None] * rows_q
        a[:, p, q] = np.where(active, 0.0, a[:, p, q])
        a[:, q, p] = np.where(active, 0.0, a[:, q, p])


def symmetric_eigenvalues_stack(
    stack, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS
) -> np.ndarray:
    """Ascending eigenvalues of each matrix in a ``(K, n, n)`` stack of symmetric matrices.

    Cyclic Jacobi: each sweep visits every off-diagonal pair once, in
    round-robin order so that the rotations of one round touch disjoint
    index pairs and are applied together (and across the whole stack).
    Raises ``ConvergenceError`` if any matrix is still off-diagonal after
    ``max_sweeps``.
    """
    a = np.array(stack, dtype=float)
    if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[1] == 0:
        raise ValueError(f"expected a stack of non-empty square matrices, got shape {a.shape}")
    scale = np.linalg.norm(a, axis=(1, 2))
    asym = np.max(np.abs(a - a.transpose(0, 2, 1)), axis=(1, 2))
    if np.any(asym > 1e-12 * np.maximum(scale, np.finfo(float).tiny)):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.transpose(0, 2, 1))
    n = a.shape[1]
    rounds = _pair_rounds(n)
    floor = 1e-30 * scale
    pending = np.flatnonzero(_off_norms(a) > tol * scale)
    sweeps = 0
    while pending.size:
        if sweeps == max_sweeps:
            worst = float(np.max(_off_norms(a[pending]) / scale[pending]))
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (relative off-diagonal norm {worst:.3e})"
            )
        sub = a[pending]
        _sweep(sub, rounds, floor[pending])
        a[pending] = sub
        sweeps += 1
        pending = pending[_off_norms(sub) > tol * scale[pending]]
    return np.sort(np.einsum("kii->ki", a), axis=1)


def symmetric_eigenvalues(a, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Ascending eigenvalues of one symmetric matrix (cyclic Jacobi)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return symmetric_eigenvalues_stack(a[None], tol, max_sweeps)[0]


def condition_from_eigenvalues(eigs) -> float:
    lo, hi = float(eigs[0]), float(eigs[-1])
    if hi <= 0 or lo <= INF_RATIO * hi:
        return math.inf
    return hi / lo


def condition_number(a) -> float:
    """``max eigenvalue / min eigenvalue``; ``inf`` when the matrix is (numerically) singular."""
    return condition_from_eigenvalues(symmetric_eigenvalues(a))


@dataclass
class KCondition:
    k: int
    mu_min: float
    mu_max: float
    cond: float


@dataclass
class SpectralReport:
    N: int
    r: int
    tau: float
    beta: float
    per_k: list[KCondition]
    filter_description: str
    convention: str = HALF
    failures: list[int] = field(default_factory=list)

    @property
    def max_condition(self) -> float:
        values = [c.cond for c in self.per_k if not math.isnan(c.cond)]
        return max(values) if values else math.nan

    @property
    def argmax_k(self) -> int:
        best = max((c for c in self.per_k if not math.isnan(c.cond)), key=lambda c: c.cond)
        return best.k

    @property
    def missing_degrees(self) -> float:
        return 360.0 * self.r / self.N

    @property
    def coverage_degrees(self) -> float:
        return 180.0 - self.missing_degrees


def _table_setup(N: int, convention: str):
    if convention == HALF:
        if N % 2:
            raise ValueError("the half convention needs even N")
        n_sys = N // 2
    elif convention == FULL:
        n_sys = N
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return n_sys, 2 * math.pi / N


def condition_report(
    N: int,
    r: int,
    filter: FilterSpec,
    convention: str = HALF,
    workers: Optional[int] = None,
) -> SpectralReport:
    """Extreme eigenvalues and condition number of the A matrix for every k."""
    n_sys, spacing = _table_setup(N, convention)
    ks = np.arange(n_sys)
    stack = np.stack([build_matrix("A", int(k), r, n_sys, filter, spacing=spacing, n_d=n_sys).entries for k in ks])

    def solve_chunk(idx):
        try:
            return [(eigs, False) for eigs in symmetric_eigenvalues_stack(stack[idx])]
        except ConvergenceError:
            out = []
            for i in idx:
                try:
                    out.append((symmetric_eigenvalues(stack[i]), False))
                except ConvergenceError:
                    out.append((None, True))
            return out

    per_chunk = max(1, STACK_BUDGET // (r * r))
    chunks = [ks[i : i + per_chunk] for i in range(0, ks.size, per_chunk)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(solve_chunk, chunks))
    else:
        parts = [solve_chunk(c) for c in chunks]
    rows = []
    for k, (eigs, failed) in zip(ks, (item for part in parts for item in part)):
        if failed:
            rows.append((KCondition(int(k), math.nan, math.nan, math.nan), True))
        else:
            rows.append((KCondition(int(k), float(eigs[0]), float(eigs[-1]), condition_from_eigenvalues(eigs)), False))
    return SpectralReport(
        N=N,
        r=r,
        tau=filter.tau,
        beta=filter.beta,
        per_k=[row for row, _ in rows],
        filter_description=filter.describe(),
        convention=convention,
        failures=[row.k for row, failed in rows if failed],
    )


def condition_table(
    N: int,
    r: int,
    params: Iterable[tuple[float, float]],
    convention: str = HALF,
    profile: str = "plateau",
    order: int = 3,
    workers: Optional[int] = None,
) -> list[SpectralReport]:
    """One report per ``(tau, beta)`` covering every frequency k."""
    return [
        condition_report(N, r, FilterSpec(tau, beta, order, profile), convention, workers)
        for tau, beta in params
    ]


@dataclass
class SlepianMatrix:
    phi: float
    r: int
    entries: np.ndarray


def slepian_matrix(phi: float, r: int) -> SlepianMatrix:
    """Sinc-kernel Toeplitz matrix ``sin(2 l phi) / (l pi)`` with diagonal ``2 phi / pi``."""
    if not 0 < phi < math.pi / 2:
        raise ValueError(f"phi must lie in (0, pi/2), got {phi}")
    if r < 1:
        raise ValueError("r must be positive")
    lag = np.subtract.outer(np.arange(r), np.arange(r)).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        entries = np.sin(2 * lag * phi) / (lag * math.pi)
    np.fill_diagonal(entries, 2 * phi / math.pi)
    return SlepianMatrix(phi, r, entries)
