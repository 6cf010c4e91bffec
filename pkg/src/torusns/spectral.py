"""Pseudo-spectral core on the periodic square [0, 2pi)^2.

Coefficient convention: a field is stored by its DFT coefficients c[xi] in
standard DFT order (numpy fftfreq layout, row-major), with

    f(x) = sum_xi c[xi] exp(i xi . x),        c = fft2(samples) / n^2 .

All derivative operators act diagonally on coefficients.  Quadratic
quantities are computed alias-free: either by 3/2 zero padding, or — when a
conservative band bound shows the product already fits below the Nyquist
frequency — by an unpadded transform (identical result, cheaper).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "MatrixField",
    "leray_project",
    "calderon_lift",
]


@lru_cache(maxsize=None)
def _grid_cache(n: int):
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    k1 = k[:, None] * np.ones((1, n), dtype=np.int64)
    k2 = np.ones((n, 1), dtype=np.int64) * k[None, :]
    ksq = (k1 * k1 + k2 * k2).astype(np.float64)
    return k, k1, k2, ksq


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on the torus, n a power of two >= 16."""

    n: int

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")

    @property
    def k(self):
        return _grid_cache(self.n)[0]

    @property
    def k1(self):
        return _grid_cache(self.n)[1]

    @property
    def k2(self):
        return _grid_cache(self.n)[2]

    @property
    def ksq(self):
        return _grid_cache(self.n)[3]

    @property
    def nyquist(self) -> int:
        return self.n // 2

    def points(self, oversample: int = 1):
        """Physical grid coordinates (x1, x2), optionally oversampled."""
        m = self.n * oversample
        x = np.arange(m) * (2.0 * np.pi / m)
        return x[:, None] * np.ones((1, m)), np.ones((m, 1)) * x[None, :]


def _band_of(coef: np.ndarray, rel_tol: float = 1e-14) -> int:
    """Conservative |xi|_inf band bound: largest |xi|_inf carrying relative
    coefficient mass above rel_tol."""
    n = coef.shape[0]
    k = _grid_cache(n)[0]
    mags = np.abs(coef)
    m = mags.max()
    if m == 0.0:
        return 0
    absk = np.abs(k)
    kinf = np.maximum(absk[:, None], absk[None, :])
    sig = mags > rel_tol * m
    if not sig.any():
        return 0
    return int(kinf[sig].max())


class SpectralField:
    """Scalar field on the torus held as DFT coefficients."""

    __slots__ = ("grid", "coef", "_band")

    def __init__(self, grid: Grid, coef: np.ndarray, band: int | None = None):
        if coef.shape != (grid.n, grid.n):
            raise ValueError("coefficient array shape mismatch")
        self.grid = grid
        self.coef = np.ascontiguousarray(coef, dtype=np.complex128)
        self._band = band

    # -- construction -----------------------------------------------------
    @classmethod
    def from_physical(cls, grid: Grid, samples: np.ndarray) -> "SpectralField":
        return cls(grid, np.fft.fft2(samples) / (grid.n * grid.n))

    @classmethod
    def zero(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128), band=0)

    @classmethod
    def from_modes(cls, grid: Grid, modes: dict) -> "SpectralField":
        """Build from {(xi1, xi2): amplitude}."""
        c = np.zeros((grid.n, grid.n), dtype=np.complex128)
        ny = grid.nyquist
        b = 0
        for (m1, m2), a in modes.items():
            if max(abs(m1), abs(m2)) >= ny:
                raise ValueError(f"mode {(m1, m2)} beyond grid band")
            c[m1 % grid.n, m2 % grid.n] += a
            b = max(b, abs(m1), abs(m2))
        return cls(grid, c, band=b)

    # -- basic queries ----------------------------------------------------
    @property
    def band(self) -> int:
        if self._band is None:
            self._band = _band_of(self.coef)
        return self._band

    def to_physical(self) -> np.ndarray:
        return np.fft.ifft2(self.coef) * (self.grid.n * self.grid.n)

    def to_physical_real(self) -> np.ndarray:
        return self.to_physical().real

    def mean(self) -> complex:
        return complex(self.coef[0, 0])

    def is_real(self, tol: float = 1e-12) -> bool:
        """Check Hermitian symmetry c[-xi] = conj(c[xi])."""
        c = self.coef
        scale = max(np.abs(c).max(), 1e-300)
        mirror = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        return bool(np.abs(c - np.conj(mirror)).max() <= tol * scale)

    def real_part(self) -> "SpectralField":
        """Hermitian-symmetrize: the field (f + conj f)/2."""
        c = self.coef
        mirror = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        return SpectralField(self.grid, 0.5 * (c + np.conj(mirror)), band=self._band)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        return SpectralField(self.grid, self.coef + other.coef,
                             band=_merge_band(self._band, other._band, max))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coef - other.coef,
                             band=_merge_band(self._band, other._band, max))

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coef * scalar, band=self._band)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coef, band=self._band)

    # -- calculus ---------------------------------------------------------
    def dx(self, axis: int) -> "SpectralField":
        kk = self.grid.k1 if axis == 0 else self.grid.k2
        return SpectralField(self.grid, 1j * kk * self.coef, band=self._band)

    def gradient(self) -> "VectorField":
        return VectorField(self.dx(0), self.dx(1))

    def perp_gradient(self) -> "VectorField":
        """grad^perp f = (d2 f, -d1 f)."""
        return VectorField(self.dx(1), -self.dx(0))

    def laplacian(self) -> "SpectralField":
        return SpectralField(self.grid, -self.grid.ksq * self.coef, band=self._band)

    def inv_laplacian(self, mean_tol: float = 1e-10) -> "SpectralField":
        """(-Delta)^{-1} with zero-mean precondition; output mean zero."""
        scale = max(np.abs(self.coef).max(), 1e-300)
        if abs(self.coef[0, 0]) > mean_tol * scale:
            raise ValueError("inv_laplacian requires a mean-zero field")
        ksq = self.grid.ksq.copy()
        ksq[0, 0] = 1.0
        out = self.coef / ksq
        out[0, 0] = 0.0
        return SpectralField(self.grid, out, band=self._band)

    def heat(self, t: float) -> "SpectralField":
        """Heat semigroup e^{t Delta}, t >= 0."""
        if t < 0:
            raise ValueError("heat semigroup needs t >= 0")
        return SpectralField(self.grid, np.exp(-self.grid.ksq * t) * self.coef,
                             band=self._band)

    # -- products ---------------------------------------------------------
    def product(self, other: "SpectralField") -> "SpectralField":
        """Alias-free product (3/2 zero-padding rule, or unpadded when the
        band bounds prove the result already fits)."""
        n = self.grid.n
        if self.band + other.band <= n // 2 - 1:
            phys = self.to_physical() * other.to_physical()
            return SpectralField(self.grid,
                                 np.fft.fft2(phys) / (n * n),
                                 band=self.band + other.band)
        m = (3 * n) // 2
        a = _pad(self.coef, m)
        b = _pad(other.coef, m)
        phys = (np.fft.ifft2(a) * (m * m)) * (np.fft.ifft2(b) * (m * m))
        big = np.fft.fft2(phys) / (m * m)
        return SpectralField(self.grid, _truncate(big, n))

    def shift(self, s1: int, s2: int, wrap_tol: float = 1e-13) -> "SpectralField":
        """Multiply by exp(i (s1, s2) . x): an exact spectral translation.

        Content pushed beyond the Nyquist band is dropped; raises if the
        dropped relative mass exceeds wrap_tol.
        """
        n = self.grid.n
        c = np.fft.fftshift(self.coef)
        out = np.zeros_like(c)
        lo1, hi1 = max(0, s1), min(n, n + s1)
        lo2, hi2 = max(0, s2), min(n, n + s2)
        out[lo1:hi1, lo2:hi2] = c[lo1 - s1:hi1 - s1, lo2 - s2:hi2 - s2]
        lost = np.abs(c).sum() - np.abs(out).sum()
        scale = max(np.abs(c).sum(), 1e-300)
        if lost > wrap_tol * scale:
            raise ValueError("shift pushed significant content beyond the grid band")
        b = None if self._band is None else min(self.band + max(abs(s1), abs(s2)),
                                                n // 2)
        return SpectralField(self.grid, np.fft.ifftshift(out), band=b)

    def regrid(self, grid: "Grid") -> "SpectralField":
        """Exact re-representation on another grid.

        Enlarging always preserves every mode; shrinking requires the band
        to fit strictly inside the target Nyquist square.
        """
        if grid.n == self.grid.n:
            return self
        if grid.n < self.grid.n and self.band > grid.n // 2 - 1:
            raise ValueError(
                f"band {self.band} does not fit on grid n={grid.n}"
            )
        fn = _pad if grid.n > self.grid.n else _truncate
        return SpectralField(grid, fn(self.coef, grid.n), band=self._band)

    # -- norms ------------------------------------------------------------
    def l2_norm(self) -> float:
        return float(2.0 * np.pi * np.sqrt(np.sum(np.abs(self.coef) ** 2)))

    def sup_norm(self, oversample: int = 2) -> float:
        """L^inf on an oversampled physical grid (>= 3/2 oversampling)."""
        m = (self.grid.n * 3) // 2 if oversample == 2 else self.grid.n * oversample
        big = _pad(self.coef, m)
        phys = np.fft.ifft2(big) * (m * m)
        return float(np.abs(phys).max())

    def lp_norm(self, p: float) -> float:
        """Grid L^p norm on the 3/2-oversampled physical grid."""
        if p == np.inf:
            return self.sup_norm()
        m = (self.grid.n * 3) // 2
        phys = np.fft.ifft2(_pad(self.coef, m)) * (m * m)
        h2 = (2.0 * np.pi / m) ** 2
        return float((np.sum(np.abs(phys) ** p) * h2) ** (1.0 / p))


def _merge_band(b1, b2, op):
    if b1 is None or b2 is None:
        return None
    return op(b1, b2)


def _pad(coef: np.ndarray, m: int) -> np.ndarray:
    """Embed an n-band coefficient array into an m x m array (m >= n)."""
    n = coef.shape[0]
    if m == n:
        return coef.copy()
    out = np.zeros((m, m), dtype=np.complex128)
    h = n // 2
    out[:h, :h] = coef[:h, :h]
    out[:h, m - h:] = coef[:h, n - h:]
    out[m - h:, :h] = coef[n - h:, :h]
    out[m - h:, m - h:] = coef[n - h:, n - h:]
    return out


def _truncate(coef: np.ndarray, n: int) -> np.ndarray:
    """Restrict an m x m coefficient array to the n x n band."""
    m = coef.shape[0]
    if m == n:
        return coef.copy()
    out = np.zeros((n, n), dtype=np.complex128)
    h = n // 2
    out[:h, :h] = coef[:h, :h]
    out[:h, n - h:] = coef[:h, m - h:]
    out[n - h:, :h] = coef[m - h:, :h]
    out[n - h:, n - h:] = coef[m - h:, m - h:]
    return out


class VectorField:
    """Velocity-type field (2 components)."""

    __slots__ = ("u1", "u2")

    def __init__(self, u1: SpectralField, u2: SpectralField):
        self.u1, self.u2 = u1, u2

    @property
    def grid(self):
        return self.u1.grid

    @classmethod
    def zero(cls, grid: Grid) -> "VectorField":
        return cls(SpectralField.zero(grid), SpectralField.zero(grid))

    def __add__(self, o):
        return VectorField(self.u1 + o.u1, self.u2 + o.u2)

    def __sub__(self, o):
        return VectorField(self.u1 - o.u1, self.u2 - o.u2)

    def __mul__(self, s):
        return VectorField(self.u1 * s, self.u2 * s)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-self.u1, -self.u2)

    def __iter__(self):
        return iter((self.u1, self.u2))

    def divergence(self) -> SpectralField:
        return self.u1.dx(0) + self.u2.dx(1)

    def curl(self) -> SpectralField:
        """curl f = d1 f2 - d2 f1 (scalar in 2D)."""
        return self.u2.dx(0) - self.u1.dx(1)

    def laplacian(self) -> "VectorField":
        return VectorField(self.u1.laplacian(), self.u2.laplacian())

    def heat(self, t: float) -> "VectorField":
        return VectorField(self.u1.heat(t), self.u2.heat(t))

    def outer(self, other: "VectorField") -> "MatrixField":
        """self tensor other, entries (i, j) = self_i * other_j."""
        return MatrixField(self.u1.product(other.u1), self.u1.product(other.u2),
                           self.u2.product(other.u1), self.u2.product(other.u2))

    def dot(self, other: "VectorField") -> SpectralField:
        return self.u1.product(other.u1) + self.u2.product(other.u2)

    def regrid(self, grid: Grid) -> "VectorField":
        return VectorField(self.u1.regrid(grid), self.u2.regrid(grid))

    def sup_norm(self) -> float:
        m = (self.grid.n * 3) // 2
        p1 = np.fft.ifft2(_pad(self.u1.coef, m)) * (m * m)
        p2 = np.fft.ifft2(_pad(self.u2.coef, m)) * (m * m)
        return float(np.sqrt(np.abs(p1) ** 2 + np.abs(p2) ** 2).max())

    def l2_norm(self) -> float:
        return float(np.hypot(self.u1.l2_norm(), self.u2.l2_norm()))


class MatrixField:
    """2x2 tensor field (stress / momentum-flux type)."""

    __slots__ = ("a11", "a12", "a21", "a22")

    def __init__(self, a11, a12, a21, a22):
        self.a11, self.a12, self.a21, self.a22 = a11, a12, a21, a22

    @property
    def grid(self):
        return self.a11.grid

    @classmethod
    def zero(cls, grid: Grid) -> "MatrixField":
        z = SpectralField.zero(grid)
        return cls(z, z, z, z)

    def __add__(self, o):
        return MatrixField(self.a11 + o.a11, self.a12 + o.a12,
                           self.a21 + o.a21, self.a22 + o.a22)

    def __sub__(self, o):
        return MatrixField(self.a11 - o.a11, self.a12 - o.a12,
                           self.a21 - o.a21, self.a22 - o.a22)

    def __mul__(self, s):
        return MatrixField(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)

    __rmul__ = __mul__

    def __neg__(self):
        return MatrixField(-self.a11, -self.a12, -self.a21, -self.a22)

    def row_divergence(self) -> VectorField:
        """(div M)_i = sum_j d_j M_ij."""
        return VectorField(self.a11.dx(0) + self.a12.dx(1),
                           self.a21.dx(0) + self.a22.dx(1))

    def transpose(self) -> "MatrixField":
        return MatrixField(self.a11, self.a21, self.a12, self.a22)

    def regrid(self, grid: Grid) -> "MatrixField":
        return MatrixField(self.a11.regrid(grid), self.a12.regrid(grid),
                           self.a21.regrid(grid), self.a22.regrid(grid))

    def sup_norm(self) -> float:
        m = (self.grid.n * 3) // 2
        tot = None
        for f in (self.a11, self.a12, self.a21, self.a22):
            p = np.fft.ifft2(_pad(f.coef, m)) * (m * m)
            tot = np.abs(p) ** 2 if tot is None else tot + np.abs(p) ** 2
        return float(np.sqrt(tot).max())


def fit_grid(field, min_n: int = 64):
    """Re-represent a field on the smallest power-of-two grid holding its band.

    Exact (no information is lost); used to keep long-lived band-limited
    fields compact while products are still evaluated on finer grids.
    """
    if isinstance(field, VectorField):
        band = max(field.u1.band, field.u2.band)
    elif isinstance(field, MatrixField):
        band = max(field.a11.band, field.a12.band, field.a21.band,
                   field.a22.band)
    else:
        band = field.band
    n = min_n
    while n // 2 - 1 < band:
        n *= 2
    if n >= field.grid.n:
        return field
    return field.regrid(Grid(n))


# ---------------------------------------------------------------------------
# Helmholtz/Leray projection and the divergence lift
# ---------------------------------------------------------------------------

def leray_project(v: VectorField) -> VectorField:
    """Projection onto divergence-free fields: v - grad Delta^{-1} div v.

    The mean (xi = 0) component is kept unchanged.
    """
    g = v.grid
    k1, k2, ksq = g.k1, g.k2, g.ksq
    ksafe = ksq.copy()
    ksafe[0, 0] = 1.0
    dotk = (k1 * v.u1.coef + k2 * v.u2.coef) / ksafe
    dotk[0, 0] = 0.0
    b = _merge_band(v.u1._band, v.u2._band, max)
    return VectorField(SpectralField(g, v.u1.coef - k1 * dotk, band=b),
                       SpectralField(g, v.u2.coef - k2 * dotk, band=b))


def calderon_lift(w: VectorField, div_tol: float = 1e-10) -> MatrixField:
    """Symmetric lift R w = -(grad + grad^T)(-Delta)^{-1} w with
    div(R w) = w for solenoidal, mean-zero w.

    Preconditions: div w = 0 and mean(w) = 0 (relative tolerance div_tol).
    """
    g = w.grid
    scale = max(np.abs(w.u1.coef).max(), np.abs(w.u2.coef).max(), 1e-300)
    d = w.divergence()
    if np.abs(d.coef).max() > div_tol * scale * max(1.0, g.nyquist):
        raise ValueError("calderon_lift requires a divergence-free field")
    if max(abs(w.u1.coef[0, 0]), abs(w.u2.coef[0, 0])) > div_tol * scale:
        raise ValueError("calderon_lift requires a mean-zero field")
    v1 = w.u1.inv_laplacian(mean_tol=1e-6)
    v2 = w.u2.inv_laplacian(mean_tol=1e-6)
    # -(grad + grad^T) v, v = (-Delta)^{-1} w
    a11 = -2.0 * v1.dx(0)
    a22 = -2.0 * v2.dx(1)
    a12 = -(v1.dx(1) + v2.dx(0))
    return MatrixField(a11, a12, a12, a22)
