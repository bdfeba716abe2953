"""Self-checks of the structural identities, runnable from the command line."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from oped.limited_angle import build_matrix
from oped.phantom import FULL_CIRCLE, ODD_FULL_CIRCLE, PolynomialImage, SinogramGeometry, sample_sinogram, shepp_logan
from oped.spectral import symmetric_eigenvalues
from oped.transform import (
    FilterSpec,
    half_circle_symmetry_residual,
    oped_evaluate,
    parity_equivalence,
    pixel_centers,
    sine_coefficients,
)

EIG_TOL = 1e-9

PRESERVATION_CASES = {
    "1": {(0, 0): 1.0},
    "x": {(1, 0): 1.0},
    "y": {(0, 1): 1.0},
    "x^2+y^2": {(2, 0): 1.0, (0, 2): 1.0},
    "xy": {(1, 1): 1.0},
}


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def theorem_checks(N: int = 16) -> list[Check]:
    checks = []
    bad_range, bad_pd, bad_mult = [], [], []
    for k in range(N):
        for r in range(1, N):
            eigs = symmetric_eigenvalues(build_matrix("M", k, r, N).entries)
            if eigs[0] < -EIG_TOL or eigs[-1] > 1 + EIG_TOL:
                bad_range.append((k, r))
            if (eigs[0] > EIG_TOL) != (k + r < N):
                bad_pd.append((k, r))
            if k + r >= N and int(np.sum(np.abs(eigs) <= EIG_TOL)) != k + r + 1 - N:
                bad_mult.append((k, r))
    checks.append(Check("M eigenvalues in [0, 1]", not bad_range, f"{len(bad_range)} violations"))
    checks.append(Check("M positive definite iff k + r < N", not bad_pd, f"{len(bad_pd)} violations"))
    checks.append(Check("zero-eigenvalue multiplicity k + r + 1 - N", not bad_mult, f"{len(bad_mult)} violations"))

    # full-circle views: entrywise identity, valid while no two views are antipodal
    worst = 0.0
    full = 2 * math.pi / N
    for l in range(N - 1):
        for r in range(1, N // 2 + 1):
            m = build_matrix("M", N - l - 2, r, N, spacing=full).entries
            b = build_matrix("B", l, r, N, spacing=full).entries
            worst = max(worst, float(np.max(np.abs(m - b / N))))
    checks.append(Check("M_{N-l-2} = B_l / N (full circle, r <= N/2)", worst <= 1e-12, f"max deviation {worst:.2e}"))
    # half-circle views: the same identity up to the sign similarity diag((-1)^mu)
    worst = 0.0
    for l in range(N - 1):
        for r in range(1, N):
            signs = (-1.0) ** np.arange(r)
            m = build_matrix("M", N - l - 2, r, N).entries
            b = build_matrix("B", l, r, N).entries
            worst = max(worst, float(np.max(np.abs(m - np.outer(signs, signs) * b / N))))
    checks.append(Check("M_{N-l-2} = D B_l D / N (half circle)", worst <= 1e-12, f"max deviation {worst:.2e}"))

    filt = FilterSpec(tau=0.5, beta=0.0)
    pd_ok = all(
        symmetric_eigenvalues(build_matrix("A", k, r, N, filt).entries)[0] > EIG_TOL
        for r in range(1, N)
        if filt.tau < 1 - r / N
        for k in range(N)
    )
    r_edge = round((1 - filt.tau) * N)
    edge_min = min(symmetric_eigenvalues(build_matrix("A", k, r_edge, N, filt).entries)[0] for k in range(N))
    checks.append(Check("A positive definite when tau < 1 - r/N", pd_ok, f"tau={filt.tau}"))
    checks.append(
        Check("A singular at tau = 1 - r/N", edge_min <= EIG_TOL, f"r={r_edge}, min eigenvalue {edge_min:.2e}")
    )
    return checks


def parity_checks(N: int = 9, M: int = 32) -> list[Check]:
    phantom = shepp_logan()
    checks = []
    if N % 2:
        full = sine_coefficients(sample_sinogram(phantom, SinogramGeometry(N, N, 0, FULL_CIRCLE)))
        half = sine_coefficients(sample_sinogram(phantom, SinogramGeometry(N, N, 0, ODD_FULL_CIRCLE)))
        diff = parity_equivalence(full, half, FilterSpec(), M)
        checks.append(Check(f"odd N={N}: full circle == half circle", diff <= 1e-10, f"max difference {diff:.2e}"))
        N_even = N - 1
    else:
        N_even = N
    full = sine_coefficients(sample_sinogram(phantom, SinogramGeometry(N_even, N_even, 0, FULL_CIRCLE)))
    res = half_circle_symmetry_residual(full)
    checks.append(Check(f"even N={N_even}: lam[k, nu+N/2] = (-1)^k lam[k, nu]", res <= 1e-10, f"residual {res:.2e}"))
    return checks


def preservation_checks(N: int = 64, M: int = 64, tau: float = 0.25) -> list[Check]:
    geometry = SinogramGeometry(N)
    filt = FilterSpec(tau=tau, beta=0.9)
    x, y, mask = pixel_centers(M)
    checks = []
    for label, coeffs in PRESERVATION_CASES.items():
        poly = PolynomialImage(coeffs)
        img = oped_evaluate(sine_coefficients(sample_sinogram(poly, geometry)), filt, M)
        err = float(np.max(np.abs(img.values[mask] - poly.density(x, y)[mask])))
        checks.append(Check(f"preserves f={label} (N={N})", err <= 1e-8, f"max error {err:.2e}"))
    return checks


SUITES = {
    "theorems": theorem_checks,
    "parity": parity_checks,
    "preservation": preservation_checks,
}
