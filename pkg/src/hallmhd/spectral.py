"""Periodic grids, spectral fields and the Fourier-multiplier toolkit.

Fields are stored spectrally.  Coefficients follow numpy's FFT ordering and
are normalised so that ``coeffs[0, ..., 0]`` is the spatial mean, i.e.
``coeffs = fftn(samples) / n**dim``.  The domain is the torus of period 2*pi
in every direction.

Axis indices are 0-based throughout (axis 0 is x1).  On a 2-D grid the
third axis exists only formally: fields do not depend on x3, so derivatives
along axis 2 vanish identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "Grid",
    "ScalarField",
    "Multiplier",
    "forward",
    "inverse",
    "pad_spectrum",
    "truncate_spectrum",
    "to_physical",
    "from_physical",
    "derivative",
    "fractional_laplacian",
    "integrate",
    "inner",
    "multiply",
    "lp_norm",
    "sobolev_seminorm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per direction on [0, 2*pi)^dim."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers in FFT order: 0..n/2-1, -n/2..-1."""
        return np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays, one per spatial axis."""
        return tuple(np.meshgrid(*([self.k1d] * self.dim), indexing="ij", sparse=True))

    def wavenumber(self, axis: int) -> np.ndarray | None:
        """Wavenumber array along ``axis``; None for axis 2 on a 2-D grid."""
        if axis < 0 or axis > 2:
            raise IndexError(f"axis must be 0, 1 or 2, got {axis}")
        if axis >= self.dim:
            return None
        return self.wavenumbers[axis]

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k.astype(float) ** 2 for k in self.wavenumbers)

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def k_max_abs(self) -> np.ndarray:
        """Per-mode max_i |k_i|, used for box band limits."""
        return np.maximum.reduce([np.abs(k) for k in np.broadcast_arrays(*self.wavenumbers)])

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on every mode having some component equal to -n/2."""
        ks = np.broadcast_arrays(*self.wavenumbers)
        return np.logical_or.reduce([k == -(self.n // 2) for k in ks])

    @cached_property
    def deriv_factors(self) -> tuple:
        """i*k_j per axis (Nyquist zeroed); the x3 entry is 0 on 2-D grids."""
        out = []
        for j in range(3):
            k = self.wavenumber(j)
            if k is None:
                out.append(0.0)
            else:
                f = np.broadcast_to(1j * k, self.shape).copy()
                f[self.nyquist_mask] = 0.0
                out.append(f)
        return tuple(out)

    def band_mask(self, K: int) -> np.ndarray:
        return self.k_max_abs <= K

    def mesh(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def abs_power(self, s: float) -> np.ndarray:
        """|k|**s with the zero mode set to 0."""
        if s == 0:
            out = np.ones(self.shape)
        else:
            out = self.k_abs**s
        out = np.array(out, dtype=float)
        out.flat[0] = 0.0
        return out


# ---------------------------------------------------------------------------
# raw transforms; arrays may carry leading batch axes


def forward(samples: np.ndarray, dim: int) -> np.ndarray:
    axes = tuple(range(-dim, 0))
    npts = math.prod(samples.shape[-dim:])
    return np.fft.fftn(samples, axes=axes) / npts


def inverse(coeffs: np.ndarray, dim: int) -> np.ndarray:
    axes = tuple(range(-dim, 0))
    npts = math.prod(coeffs.shape[-dim:])
    return np.fft.ifftn(coeffs, axes=axes).real * npts


def _pad_axis(c: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = c.shape[axis]
    if m == n:
        return c
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * c.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    out[sl(0, h)] = c[sl(0, h)]
    out[sl(m - h + 1, m)] = c[sl(h + 1, n)]
    nyq = 0.5 * c[sl(h, h + 1)]
    out[sl(h, h + 1)] = nyq
    out[sl(m - h, m - h + 1)] = nyq
    return out


def _truncate_axis(c: np.ndarray, axis: int, n: int) -> np.ndarray:
    m = c.shape[axis]
    if m == n:
        return c
    h = n // 2
    shape = list(c.shape)
    shape[axis] = n
    out = np.empty(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * c.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    out[sl(0, h)] = c[sl(0, h)]
    out[sl(h + 1, n)] = c[sl(m - h + 1, m)]
    out[sl(h, h + 1)] = c[sl(h, h + 1)] + c[sl(m - h, m - h + 1)]
    return out


def pad_spectrum(coeffs: np.ndarray, dim: int, m: int) -> np.ndarray:
    """Zero-pad the trailing ``dim`` axes to size ``m``, splitting Nyquist rows."""
    out = coeffs
    for ax in range(-dim, 0):
        out = _pad_axis(out, out.ndim + ax, m)
    return out


def truncate_spectrum(coeffs: np.ndarray, dim: int, n: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`: keep |k| < n/2 and fold the Nyquist rows."""
    out = coeffs
    for ax in range(-dim, 0):
        out = _truncate_axis(out, out.ndim + ax, n)
    return out


def padded_size(n: int, padding) -> int:
    frac = Fraction(padding).limit_denominator(64)
    if frac < 1:
        raise ValueError(f"padding must be >= 1, got {padding}")
    m = frac * n
    if m.denominator != 1 or m.numerator % 2:
        raise ValueError(f"padding {padding} does not give an even grid size for n={n}")
    return int(m)


def to_physical(coeffs: np.ndarray, dim: int, m: int | None = None) -> np.ndarray:
    if m is not None:
        coeffs = pad_spectrum(coeffs, dim, m)
    return inverse(coeffs, dim)


def from_physical(samples: np.ndarray, dim: int, n: int | None = None) -> np.ndarray:
    c = forward(samples, dim)
    if n is not None:
        c = truncate_spectrum(c, dim, n)
    return c


# ---------------------------------------------------------------------------
# field type


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar field held by its spectral coefficients."""

    grid: Grid
    coeffs: np.ndarray
    band_limit: int | None = None

    def __post_init__(self):
        c = _readonly(self.coeffs)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: Grid, samples, band_limit: int | None = None) -> "ScalarField":
        samples = np.asarray(samples, dtype=float)
        return cls(grid, forward(samples, grid.dim), band_limit)

    @classmethod
    def from_function(cls, grid: Grid, fn, band_limit: int | None = None) -> "ScalarField":
        return cls.from_physical(grid, np.broadcast_to(fn(*grid.mesh()), grid.shape), band_limit)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        c = np.zeros(grid.shape, dtype=complex)
        c.flat[0] = value
        return cls(grid, c, 0)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), 0)

    def physical(self, padding=1) -> np.ndarray:
        m = padded_size(self.grid.n, padding)
        return to_physical(self.coeffs, self.grid.dim, m if m != self.grid.n else None)

    def with_coeffs(self, coeffs, band_limit="keep") -> "ScalarField":
        bl = self.band_limit if band_limit == "keep" else band_limit
        return ScalarField(self.grid, coeffs, bl)

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.coeffs + other.coeffs, _max_bl(self.band_limit, other.band_limit))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.coeffs - other.coeffs, _max_bl(self.band_limit, other.band_limit))
        return NotImplemented

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.with_coeffs(self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def max_abs_diff(self, other: "ScalarField") -> float:
        self._check(other)
        return float(np.max(np.abs(self.coeffs - other.coeffs)))


def _max_bl(a, b):
    if a is None or b is None:
        return None
    return max(a, b)


def _sum_bl(a, b, n):
    if a is None or b is None:
        return None
    return min(a + b, n // 2)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Diagonal Fourier multiplier.

    ``kind="real"`` symbols are real and even (|k|**s, -|k|**2);
    ``kind="imag"`` holds the real factor k_j of a derivative symbol i*k_j.
    """

    grid: Grid
    symbol: np.ndarray
    kind: str = "real"

    def __post_init__(self):
        if self.kind not in ("real", "imag"):
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if not np.isfinite(np.asarray(self.symbol).flat[0]):
            raise ValueError("multiplier symbol must be finite at k = 0")

    @classmethod
    def fractional(cls, grid: Grid, s: float) -> "Multiplier":
        if s < 0:
            raise ValueError(f"fractional order must be >= 0, got {s}")
        return cls(grid, grid.abs_power(s))

    @classmethod
    def laplacian(cls, grid: Grid) -> "Multiplier":
        return cls(grid, -grid.k_squared)

    @classmethod
    def derivative(cls, grid: Grid, axis: int) -> "Multiplier":
        k = grid.wavenumber(axis)
        sym = np.zeros(grid.shape) if k is None else np.broadcast_to(k, grid.shape).astype(float)
        return cls(grid, sym, "imag")

    def factor(self) -> np.ndarray:
        f = 1j * self.symbol if self.kind == "imag" else self.symbol
        return np.where(self.grid.nyquist_mask, 0.0, f)

    def apply_array(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * self.factor()

    def __call__(self, f: ScalarField) -> ScalarField:
        if f.grid != self.grid:
            raise ValueError(f"grid mismatch: {f.grid} vs {self.grid}")
        return f.with_coeffs(self.apply_array(f.coeffs))


def derivative(f: ScalarField, j: int) -> ScalarField:
    """Partial derivative along 0-based axis ``j``; zero for axis 2 in 2-D."""
    return Multiplier.derivative(f.grid, j)(f)


def fractional_laplacian(f: ScalarField, s: float) -> ScalarField:
    """Apply Lambda**s, the multiplier |k|**s (zero mode mapped to 0)."""
    return Multiplier.fractional(f.grid, s)(f)


def integrate(f: ScalarField) -> float:
    return f.grid.volume * float(f.coeffs.flat[0].real)


def inner(f: ScalarField, g: ScalarField) -> float:
    """L2 inner product by Parseval; alias-free for any pair of fields."""
    f._check(g)
    return f.grid.volume * float(np.vdot(g.coeffs, f.coeffs).real)


def multiply(f: ScalarField, g: ScalarField, padding=1.5) -> ScalarField:
    """Pointwise product on a zero-padded grid, truncated back to ``f.grid``.

    Retained modes are exact when K_f + K_g < n * padding / 2.  The Nyquist
    row is dropped so the result stays Hermitian.
    """
    f._check(g)
    grid = f.grid
    m = padded_size(grid.n, padding)
    pf = to_physical(f.coeffs, grid.dim, m)
    pg = to_physical(g.coeffs, grid.dim, m)
    c = from_physical(pf * pg, grid.dim, grid.n)
    c[grid.nyquist_mask] = 0.0
    return ScalarField(grid, c, _sum_bl(f.band_limit, g.band_limit, grid.n))


def lp_samples_norm(samples: np.ndarray, p: float, grid: Grid) -> float:
    """Grid-sampled L^p norm of (possibly vector-magnitude) samples."""
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(samples)
    if math.isinf(p):
        return float(a.max())
    cell = (grid.spacing) ** grid.dim
    if p == 2:
        return float(math.sqrt(np.sum(a * a) * cell))
    return float((np.sum(a**p) * cell) ** (1.0 / p))


def lp_norm(f: ScalarField, p: float) -> float:
    return lp_samples_norm(f.physical(), p, f.grid)


def seminorm_sq_array(coeffs: np.ndarray, grid: Grid, s: float) -> float:
    """sum_k |k|^{2s} |c_k|^2 (2 pi)^dim over trailing spatial axes (batch summed)."""
    w = grid.abs_power(2 * s)
    return grid.volume * float(np.sum(w * (coeffs.real**2 + coeffs.imag**2)))


def sobolev_seminorm(f: ScalarField, s: float) -> float:
    """Homogeneous H^s seminorm; the zero mode never contributes."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    return math.sqrt(seminorm_sq_array(f.coeffs, f.grid, s))


def l2_sq_array(coeffs: np.ndarray, grid: Grid) -> float:
    return grid.volume * float(np.sum(coeffs.real**2 + coeffs.imag**2))

