"""Test images on the unit disk, their exact Radon transforms, and OPED sinograms.

Lines are parametrised as ``x cos(theta) + y sin(theta) = t``. Images are
anything exposing ``radon(theta, t)`` and ``density(x, y)``; both broadcast
over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

EVEN_HALF_CIRCLE = "even_half_circle"
ODD_FULL_CIRCLE = "odd_full_circle"
FULL_CIRCLE = "full_circle"
PARITIES = (EVEN_HALF_CIRCLE, ODD_FULL_CIRCLE, FULL_CIRCLE)

_CONTAIN_TOL = 1e-12


class Image(Protocol):
    def radon(self, theta, t): ...

    def density(self, x, y): ...


@dataclass(frozen=True)
class Ellipse:
    """Constant-density ellipse; ``a`` is the semi-axis along the tilted x direction."""

    center_x: float
    center_y: float
    a: float
    b: float
    tilt: float = 0.0
    density_value: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")
        reach = self.max_radius()
        if reach > 1.0 + _CONTAIN_TOL:
            raise ValueError(f"ellipse reaches radius {reach:.15g} > 1; it must lie inside the unit disk")

    def _support(self, theta):
        # farthest extent of the ellipse in direction theta
        c, s = np.cos(theta), np.sin(theta)
        half = np.sqrt((self.a * np.cos(theta - self.tilt)) ** 2 + (self.b * np.sin(theta - self.tilt)) ** 2)
        return self.center_x * c + self.center_y * s + half

    def max_radius(self) -> float:
        grid = np.linspace(0.0, 2 * np.pi, 4097)
        values = self._support(grid)
        i = int(np.argmax(values))
        step = grid[1] - grid[0]
        res = minimize_scalar(
            lambda th: -self._support(th),
            bounds=(grid[i] - step, grid[i] + step),
            method="bounded",
            options={"xatol": 1e-14},
        )
        return float(max(values[i], -res.fun))

    def radon(self, theta, t):
        return ellipse_radon(self, theta, t)

    def density(self, x, y):
        x = np.asarray(x, dtype=float) - self.center_x
        y = np.asarray(y, dtype=float) - self.center_y
        c, s = math.cos(self.tilt), math.sin(self.tilt)
        u = x * c + y * s
        v = -x * s + y * c
        inside = (u / self.a) ** 2 + (v / self.b) ** 2 <= 1.0
        return np.where(inside, self.density_value, 0.0)


def ellipse_radon(e: Ellipse, theta, t):
    """Line integral of one ellipse: ``rho * chord length`` in closed form."""
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    s = t - (e.center_x * np.cos(theta) + e.center_y * np.sin(theta))
    d2 = (e.a * np.cos(theta - e.tilt)) ** 2 + (e.b * np.sin(theta - e.tilt)) ** 2
    gap = d2 - s * s
    out = np.where(gap > 0, 2.0 * e.density_value * e.a * e.b * np.sqrt(np.maximum(gap, 0.0)) / d2, 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class EllipsePhantom:
    ellipses: tuple[Ellipse, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "ellipses", tuple(self.ellipses))
        if not self.ellipses:
            raise ValueError("a phantom needs at least one ellipse")

    def radon(self, theta, t):
        return phantom_radon(self, theta, t)

    def density(self, x, y):
        total = 0.0
        for e in self.ellipses:
            total = total + e.density(x, y)
        return total

    @classmethod
    def from_records(cls, records: Sequence[Mapping], name: str = "custom") -> "EllipsePhantom":
        """Build from dicts with keys center_x, center_y, a, b, tilt, density."""
        ellipses = []
        for rec in records:
            ellipses.append(
                Ellipse(
                    float(rec["center_x"]),
                    float(rec["center_y"]),
                    float(rec["a"]),
                    float(rec["b"]),
                    float(rec.get("tilt", 0.0)),
                    float(rec.get("density", 1.0)),
                )
            )
        return cls(tuple(ellipses), name=name)


def phantom_radon(p: EllipsePhantom, theta, t):
    total = 0.0
    for e in p.ellipses:
        total = total + ellipse_radon(e, theta, t)
    return total


# (x0, y0, a, b, tilt in degrees, density); Kak & Slaney, Table 3.1
_SHEPP_LOGAN_TABLE = (
    (0.0, 0.0, 0.69, 0.92, 0.0, 2.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.02),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.02),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.01),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.01),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.01),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.01),
    (0.0, -0.605, 0.023, 0.023, 0.0, 0.01),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.01),
)


def shepp_logan() -> EllipsePhantom:
    """The standard 10-ellipse Shepp-Logan head phantom."""
    return EllipsePhantom(
        tuple(Ellipse(x0, y0, a, b, math.radians(deg), rho) for x0, y0, a, b, deg, rho in _SHEPP_LOGAN_TABLE),
        name="shepp-logan",
    )


def unit_disk(density: float = 1.0) -> EllipsePhantom:
    return EllipsePhantom((Ellipse(0.0, 0.0, 1.0, 1.0, 0.0, density),), name="disk")


@dataclass(frozen=True)
class PolynomialImage:
    """Bivariate polynomial ``sum c * x**i * y**j`` restricted to the unit disk.

    The Radon transform is computed with Gauss-Legendre quadrature along the
    chord, using enough nodes to be exact for the polynomial's degree.
    """

    coefficients: Mapping[tuple[int, int], float]
    name: str = "polynomial"

    @property
    def degree(self) -> int:
        return max((i + j for (i, j), c in self.coefficients.items() if c != 0), default=0)

    def density(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        for (i, j), c in self.coefficients.items():
            total = total + c * x**i * y**j
        return total

    def radon(self, theta, t):
        theta = np.asarray(theta, dtype=float)
        t = np.asarray(t, dtype=float)
        nodes, weights = np.polynomial.legendre.leggauss(self.degree // 2 + 1)
        half = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        c, s = np.cos(theta), np.sin(theta)
        total = 0.0
        for node, w in zip(nodes, weights):
            u = half * node
            total = total + w * self.density(t * c - u * s, t * s + u * c)
        out = np.asarray(half * total)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SinogramGeometry:
    """View angles and Chebyshev ray offsets of an OPED data set.

    ``even_half_circle``: N even, views 2*pi*nu/N for nu < N/2.
    ``odd_full_circle``: N odd, views pi*nu/N for nu < N.
    ``full_circle``: any N, views 2*pi*nu/N for nu < N.
    The first ``r`` views are treated as missing.
    """

    N: int
    n_d: Optional[int] = None
    r: int = 0
    parity: Optional[str] = None

    def __post_init__(self):
        N = self.N
        if int(N) != N or N < 2:
            raise ValueError(f"N must be an integer >= 2, got {N}")
        parity = self.parity
        if parity is None:
            parity = EVEN_HALF_CIRCLE if N % 2 == 0 else ODD_FULL_CIRCLE
            object.__setattr__(self, "parity", parity)
        if parity not in PARITIES:
            raise ValueError(f"unknown parity {parity!r}; expected one of {PARITIES}")
        if parity == EVEN_HALF_CIRCLE and N % 2:
            raise ValueError(f"{EVEN_HALF_CIRCLE} needs even N, got {N}")
        if parity == ODD_FULL_CIRCLE and N % 2 == 0:
            raise ValueError(f"{ODD_FULL_CIRCLE} needs odd N, got {N}")
        if self.n_d is None:
            object.__setattr__(self, "n_d", N // 2 if N % 2 == 0 else (N + 1) // 2)
        if self.n_d < 1:
            raise ValueError(f"N_d must be positive, got {self.n_d}")
        if self.r < 0 or (self.r > 0 and 2 * self.r >= N - 2):
            raise ValueError(f"missing-view count r={self.r} must satisfy 0 <= r < N/2 - 1 (N={N})")

    @property
    def view_count(self) -> int:
        return self.N // 2 if self.parity == EVEN_HALF_CIRCLE else self.N

    @property
    def angles(self) -> np.ndarray:
        nu = np.arange(self.view_count)
        if self.parity == ODD_FULL_CIRCLE:
            return np.pi * nu / self.N
        return 2 * np.pi * nu / self.N

    @property
    def weight(self) -> float:
        """Leading factor of the reconstruction sum over views."""
        return 2.0 / self.N if self.parity == EVEN_HALF_CIRCLE else 1.0 / self.N

    @property
    def n_sys(self) -> int:
        return self.view_count

    @property
    def psi(self) -> np.ndarray:
        return (2 * np.arange(self.n_d) + 1) * np.pi / (2 * self.n_d)

    @property
    def offsets(self) -> np.ndarray:
        return np.cos(self.psi)

    @property
    def available_views(self) -> np.ndarray:
        return np.arange(self.r, self.view_count)

    def with_r(self, r: int) -> "SinogramGeometry":
        return SinogramGeometry(self.N, self.n_d, r, self.parity)


@dataclass
class Sinogram:
    """Line integrals ``values[i, j]`` for view ``r + i`` and ray ``j``."""

    geometry: SinogramGeometry
    values: np.ndarray
    noise_sigma: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        g = self.geometry
        expected = (g.view_count - g.r, g.n_d)
        if self.values.shape != expected:
            raise ValueError(f"sinogram values have shape {self.values.shape}, expected {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sinogram contains non-finite values")

    def view(self, nu: int) -> np.ndarray:
        if nu < self.geometry.r or nu >= self.geometry.view_count:
            raise IndexError(f"view {nu} is not available")
        return self.values[nu - self.geometry.r]

    def drop_views(self, r: int) -> "Sinogram":
        """Same data with the first ``r`` views removed (r may only grow)."""
        if r < self.geometry.r:
            raise ValueError("cannot restore views that are already missing")
        geom = self.geometry.with_r(r)
        return Sinogram(geom, self.values[r - self.geometry.r :].copy(), self.noise_sigma, self.seed)


def sample_sinogram(image: Image, geometry: SinogramGeometry) -> Sinogram:
    theta = geometry.angles[geometry.r :, None]
    t = geometry.offsets[None, :]
    values = np.broadcast_to(np.asarray(image.radon(theta, t), dtype=float), (theta.shape[0], t.shape[1]))
    return Sinogram(geometry, np.array(values))


def add_noise(s: Sinogram, sigma: float, seed: int) -> Sinogram:
    """Add i.i.d. Gaussian noise drawn row-major (view outer, ray inner) from ``seed``."""
    if not sigma >= 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return Sinogram(s.geometry, s.values.copy(), s.noise_sigma, s.seed)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(s.values.shape) * sigma
    return Sinogram(s.geometry, s.values + noise, float(sigma), int(seed))
