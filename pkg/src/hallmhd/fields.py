"""Three-component vector fields and periodic vector calculus.

A :class:`VectorField` always carries three components.  On a 2-D grid it
is a 2.5-D field: all three components depend on (x1, x2) only, so every
x3-derivative vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid, ScalarField, l2_sq_array, pad_spectrum, seminorm_sq_array

KINDS = ("u", "b", "omega", "j", "z", "generic")

__all__ = [
    "VectorField",
    "FieldSplit",
    "curl",
    "divergence",
    "gradient",
    "leray_project",
    "random_solenoidal",
    "random_field",
    "resample",
    "split_hv",
    "solenoidality",
    "curl_array",
    "div_array",
    "leray_array",
]


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    coeffs: np.ndarray  # shape (3, *grid.shape)
    kind: str = "generic"
    band_limit: int | None = None
    solenoidal: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match (3, *{self.grid.shape})")
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_components(cls, comps, kind="generic", solenoidal=False) -> "VectorField":
        comps = list(comps)
        if len(comps) != 3:
            raise ValueError("a vector field needs exactly three components")
        grid = comps[0].grid
        for c in comps[1:]:
            if c.grid != grid:
                raise ValueError("components live on different grids")
        bls = [c.band_limit for c in comps]
        bl = None if any(b is None for b in bls) else max(bls)
        return cls(grid, np.stack([c.coeffs for c in comps]), kind, bl, solenoidal)

    @classmethod
    def from_physical(cls, grid: Grid, samples, kind="generic", band_limit=None) -> "VectorField":
        from .spectral import forward

        samples = np.asarray(samples, dtype=float)
        return cls(grid, forward(samples, grid.dim), kind, band_limit)

    @classmethod
    def from_functions(cls, grid: Grid, fns, kind="generic", band_limit=None) -> "VectorField":
        X = grid.mesh()
        samples = [np.broadcast_to(np.asarray(f(*X), dtype=float), grid.shape) for f in fns]
        return cls.from_physical(grid, np.stack(samples), kind, band_limit)

    @classmethod
    def zeros(cls, grid: Grid, kind="generic") -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex), kind, 0, True)

    def __getitem__(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.coeffs[i], self.band_limit)

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return (self[0], self[1], self[2])

    def physical(self) -> np.ndarray:
        from .spectral import inverse

        return inverse(self.coeffs, self.grid.dim)

    def replace(self, coeffs=None, kind=None, solenoidal=None) -> "VectorField":
        return VectorField(
            self.grid,
            self.coeffs if coeffs is None else coeffs,
            self.kind if kind is None else kind,
            self.band_limit,
            self.solenoidal if solenoidal is None else solenoidal,
        )

    def _check(self, other: "VectorField"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        self._check(other)
        bl = None if None in (self.band_limit, other.band_limit) else max(self.band_limit, other.band_limit)
        return VectorField(self.grid, self.coeffs + other.coeffs, self.kind, bl,
                           self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return self.replace(coeffs=-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.replace(coeffs=self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return math.sqrt(l2_sq_array(self.coeffs, self.grid))

    def seminorm(self, s: float) -> float:
        return math.sqrt(seminorm_sq_array(self.coeffs, self.grid, s))

    def max_abs_diff(self, other: "VectorField") -> float:
        self._check(other)
        return float(np.max(np.abs(self.coeffs - other.coeffs)))


@dataclass(frozen=True, eq=False)
class FieldSplit:
    horizontal: VectorField
    vertical: VectorField

    def reconstruct(self) -> VectorField:
        return self.horizontal + self.vertical


# ---------------------------------------------------------------------------
# array kernels (leading axis = component)


def curl_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    d1, d2, d3 = grid.deriv_factors
    out = np.empty_like(c)
    out[0] = d2 * c[2] - d3 * c[1]
    out[1] = d3 * c[0] - d1 * c[2]
    out[2] = d1 * c[1] - d2 * c[0]
    return out


def div_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    d1, d2, d3 = grid.deriv_factors
    return d1 * c[0] + d2 * c[1] + d3 * c[2]


def grad_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([np.broadcast_to(d * c, grid.shape) for d in grid.deriv_factors]).astype(complex)


def leray_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    """v - grad(Laplacian^{-1} div v); the zero mode of the inverse is 0."""
    k2 = grid.k_squared
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    d = div_array(c, grid)
    # grad(Delta^{-1} div v): d_j * (-1/k^2) * div
    phi = -inv * d
    out = c - grad_array(phi, grid)
    out[:, grid.nyquist_mask] = 0.0
    return out


# ---------------------------------------------------------------------------
# public operations


def curl(v: VectorField, kind: str | None = None) -> VectorField:
    """Curl; in 2.5-D this is (d2 v3, -d1 v3, d1 v2 - d2 v1)."""
    if kind is None:
        kind = {"u": "omega", "b": "j"}.get(v.kind, "generic")
    return VectorField(v.grid, curl_array(v.coeffs, v.grid), kind, v.band_limit, True)


def divergence(v: VectorField) -> ScalarField:
    return ScalarField(v.grid, div_array(v.coeffs, v.grid), v.band_limit)


def gradient(f: ScalarField) -> VectorField:
    return VectorField(f.grid, grad_array(f.coeffs, f.grid), "generic", f.band_limit)


def leray_project(v: VectorField) -> VectorField:
    return VectorField(v.grid, leray_array(v.coeffs, v.grid), v.kind, v.band_limit, True)


def solenoidality(v: VectorField) -> float:
    """||div v||_{L2} / |v|_{H^1}; 0 for a constant field."""
    d = div_array(v.coeffs, v.grid)
    num = math.sqrt(l2_sq_array(d, v.grid))
    den = v.seminorm(1.0)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def split_hv(b: VectorField) -> FieldSplit:
    h = np.array(b.coeffs)
    h[2] = 0.0
    v = np.zeros_like(h)
    v[2] = b.coeffs[2]
    return FieldSplit(b.replace(coeffs=h, solenoidal=False), b.replace(coeffs=v, solenoidal=False))


def _mirror(c: np.ndarray, dim: int) -> np.ndarray:
    """c(-k) in FFT ordering over the trailing ``dim`` axes."""
    axes = tuple(range(c.ndim - dim, c.ndim))
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def hermitian_part(c: np.ndarray, dim: int) -> np.ndarray:
    return 0.5 * (c + np.conj(_mirror(c, dim)))


def _draw(grid: Grid, K: int, seed) -> np.ndarray:
    if K < 1 or 3 * K >= grid.n:
        raise ValueError(f"band limit K={K} must satisfy 1 <= K and 3K < n={grid.n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    shape = (3,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = hermitian_part(c, grid.dim)
    c = np.where(grid.band_mask(K), c, 0.0)
    c[(slice(None),) + (0,) * grid.dim] = 0.0
    c[:, grid.nyquist_mask] = 0.0
    return c


def random_solenoidal(grid: Grid, K: int, seed, kind: str = "generic") -> VectorField:
    """Seeded, mean-zero, divergence-free field with unit L2 norm and max_i |k_i| <= K.

    Each retained mode gets independent standard-normal real and imaginary
    parts from numpy's PCG64 generator; the draw is Hermitian-symmetrised,
    Leray-projected and normalised.  ``seed`` is anything numpy accepts as
    a seed, e.g. an int or a list of ints for derived streams.
    """
    c = leray_array(_draw(grid, K, seed), grid)
    c /= math.sqrt(l2_sq_array(c, grid))
    return VectorField(grid, c, kind, K, True)


def random_field(grid: Grid, K: int, seed, kind: str = "generic") -> VectorField:
    """Like :func:`random_solenoidal` but without the projection."""
    c = _draw(grid, K, seed)
    c /= math.sqrt(l2_sq_array(c, grid))
    return VectorField(grid, c, kind, K, False)


def resample(v: VectorField, n: int) -> VectorField:
    """Exact spectral embedding of ``v`` on a finer grid of size ``n``."""
    if n < v.grid.n:
        raise ValueError("resample only refines")
    grid = Grid(v.grid.dim, n)
    c = np.array(v.coeffs)
    c[:, v.grid.nyquist_mask] = 0.0
    return VectorField(grid, pad_spectrum(c, v.grid.dim, n), v.kind, v.band_limit, v.solenoidal)
