"""Hall-term decompositions, cancellation identities and auxiliary fields.

Term names keep the 1-based labels of the underlying estimates: ``I5[d][i]``
is the i-th piece of the d-th directional split in 2.5-D, ``V[k][i]`` its 3-D
analogue, and ``VI``, ``VII``, ``VIII`` the eight-term regroupings of
V_{k,1}+V_{k,3}, V_{k,2}+V_{k,5} and V_{k,4}+V_{k,6}.

All decomposition integrals are cubic in b.  For b band-limited to
max_i |k_i| <= K with 3K < n the grid mean of a triple product is exact, so
integrands are evaluated on the base grid without padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import VectorField, curl, curl_array, solenoidality
from .mhd import State, SystemSpec, advect, hall_term, rhs
from .spectral import Grid, ScalarField, inverse, multiply, to_physical

__all__ = [
    "HallBreakdown2D",
    "HallBreakdown3D",
    "AuxFields",
    "GroupedIdentity",
    "WitnessReport",
    "effective_band_limit",
    "decompose_hall_2d",
    "decompose_hall_3d",
    "grouped_bounds_witness_3d",
    "divcurl_identity",
    "divcurl_normalizers",
    "aux_fields",
    "z1_equation_residual",
    "z2_equation_residual",
    "z2_extra_term",
]


def _rel(value: float, normalizer: float) -> float:
    if normalizer == 0.0:
        return 0.0 if value == 0.0 else math.inf
    return abs(value) / normalizer


def effective_band_limit(coeffs: np.ndarray, grid: Grid, rtol: float = 1e-14) -> int:
    """Largest max_i |k_i| carrying a coefficient above ``rtol`` * max |c|."""
    mag = np.abs(coeffs).reshape(-1, *grid.shape).max(axis=0)
    top = mag.max()
    if top == 0.0:
        return 0
    return int(grid.k_max_abs[mag > rtol * top].max())


def _require_cubic_exact(b: VectorField, dim: int):
    if b.grid.dim != dim:
        raise ValueError(f"expected a {dim}-D grid, got {b.grid.dim}-D")
    K = effective_band_limit(b.coeffs, b.grid)
    if 3 * K >= b.grid.n:
        raise ValueError(
            f"field is band-limited at K={K}; cubic quadrature needs 3K < n={b.grid.n}"
        )


class _Derivs:
    """Physical samples of b, its first and second derivatives, and j = curl b."""

    def __init__(self, b: VectorField):
        g = b.grid
        self.grid = g
        self.dim = g.dim
        f = g.deriv_factors
        c = b.coeffs
        self.b = inverse(c, g.dim)
        # d1[a][i] = d_a b_i
        self.d1 = [inverse(f[a] * c, g.dim) if a < g.dim else np.zeros((3,) + g.shape) for a in range(3)]
        self.d2 = {}
        for a in range(3):
            for e in range(a, 3):
                if a < g.dim and e < g.dim:
                    arr = inverse(f[a] * f[e] * c, g.dim)
                else:
                    arr = np.zeros((3,) + g.shape)
                self.d2[(a, e)] = self.d2[(e, a)] = arr
        jc = curl_array(c, g)
        self.j = inverse(jc, g.dim)
        self.dj = [inverse(f[a] * jc, g.dim) if a < g.dim else np.zeros((3,) + g.shape) for a in range(3)]

    def db(self, a: int, i: int) -> np.ndarray:
        """d_a b_i with 1-based indices."""
        return self.d1[a - 1][i - 1]

    def ddb(self, a: int, e: int, i: int) -> np.ndarray:
        """d_a d_e b_i with 1-based indices."""
        return self.d2[(a - 1, e - 1)][i - 1]

    def jj(self, i: int) -> np.ndarray:
        return self.j[i - 1]

    def dj_(self, a: int, i: int) -> np.ndarray:
        return self.dj[a - 1][i - 1]

    def integral(self, *factors) -> float:
        prod = factors[0]
        for fct in factors[1:]:
            prod = prod * fct
        return self.grid.volume * float(np.mean(prod))


def _hall_direct(b: VectorField, epsilon: float) -> float:
    """epsilon * integral of curl(j x b) . Laplacian(b), by Parseval."""
    h = hall_term(b)
    lap = -b.grid.k_squared * b.coeffs
    return epsilon * b.grid.volume * float(np.vdot(lap, h.coeffs).real)


# ---------------------------------------------------------------------------
# 2.5-D


@dataclass(frozen=True)
class HallBreakdown2D:
    i51: tuple  # I_{5,1,1..6}
    i52: tuple  # I_{5,2,1..6}
    i5_direct: float

    def term(self, d: int, i: int) -> float:
        """I_{5,d,i}, 1-based."""
        return (self.i51, self.i52)[d - 1][i - 1]

    def cancellation(self, d: int) -> tuple[float, float]:
        """(I_{5,d,1} + I_{5,d,3}, largest |I_{5,d,i}| over the six pieces).

        Both summands vanish on their own, so the pair alone is no scale.
        """
        a, c = self.term(d, 1), self.term(d, 3)
        group = (self.i51, self.i52)[d - 1]
        return a + c, max(abs(t) for t in group)

    def decomposition(self) -> tuple[float, float, float]:
        """(sum of the twelve terms, direct value, normaliser)."""
        terms = list(self.i51) + list(self.i52)
        norm = max([abs(t) for t in terms] + [abs(self.i5_direct)])
        return math.fsum(terms), self.i5_direct, norm


def decompose_hall_2d(b: VectorField, epsilon: float = 1.0) -> HallBreakdown2D:
    _require_cubic_exact(b, 2)
    D = _Derivs(b)
    j, dj, db = D.jj, D.dj_, D.db
    e = epsilon
    splits = []
    for a in (1, 2):
        splits.append(
            (
                -e * D.integral(j(2), db(a, 3), dj(a, 1)),
                e * D.integral(j(3), db(a, 2), dj(a, 1)),
                e * D.integral(j(1), db(a, 3), dj(a, 2)),
                -e * D.integral(j(3), db(a, 1), dj(a, 2)),
                -e * D.integral(j(1), db(a, 2), dj(a, 3)),
                e * D.integral(j(2), db(a, 1), dj(a, 3)),
            )
        )
    return HallBreakdown2D(splits[0], splits[1], _hall_direct(b, epsilon))


# ---------------------------------------------------------------------------
# 3-D


@dataclass(frozen=True, eq=False)
class HallBreakdown3D:
    v: np.ndarray  # (3, 6): V_{k,i}
    vi: np.ndarray  # (3, 8)
    vii: np.ndarray  # (3, 8)
    viii: np.ndarray  # (3, 8)
    direct: float

    def V(self, k: int, i: int) -> float:
        return float(self.v[k - 1, i - 1])

    def VI(self, k: int, l: int) -> float:
        return float(self.vi[k - 1, l - 1])

    def VII(self, k: int, l: int) -> float:
        return float(self.vii[k - 1, l - 1])

    def VIII(self, k: int, l: int) -> float:
        return float(self.viii[k - 1, l - 1])

    def cancellations(self, k: int) -> dict:
        """Paired sums new1/new2/new3 for direction k as (value, normaliser).

        The normaliser is the largest |term| in the eight-term family.
        """
        out = {}
        for name, grp, (l1, l2) in (
            ("new1", self.vi, (1, 5)),
            ("new2", self.vii, (2, 7)),
            ("new3", self.viii, (4, 8)),
        ):
            row = grp[k - 1]
            out[name] = (float(row[l1 - 1] + row[l2 - 1]), float(np.max(np.abs(row))))
        return out

    def regroupings(self, k: int) -> dict:
        """V-pair sums against their eight-term expansions: (lhs, rhs, normaliser)."""
        out = {}
        for name, (i1, i2), grp in (
            ("est90", (1, 3), self.vi),
            ("est92", (2, 5), self.vii),
            ("est94", (4, 6), self.viii),
        ):
            lhs = self.V(k, i1) + self.V(k, i2)
            row = grp[k - 1]
            norm = max(abs(self.V(k, i1)), abs(self.V(k, i2)), float(np.max(np.abs(row))))
            out[name] = (lhs, math.fsum(row), norm)
        return out

    def decomposition(self) -> tuple[float, float, float]:
        norm = max(float(np.max(np.abs(self.v))), abs(self.direct))
        return math.fsum(self.v.ravel()), self.direct, norm


def _vi_terms(D: _Derivs, k: int) -> list:
    db, ddb, I = D.db, D.ddb, D.integral
    return [
        I(db(k, 3), db(1, 3), ddb(k, 2, 3)),
        -I(db(k, 3), db(1, 3), ddb(k, 3, 2)),
        -I(db(k, 3), db(3, 1), ddb(k, 2, 3)),
        I(db(k, 3), db(3, 1), ddb(k, 3, 2)),
        -I(db(k, 3), db(2, 3), ddb(k, 1, 3)),
        I(db(k, 3), db(2, 3), ddb(k, 3, 1)),
        I(db(k, 3), db(3, 2), ddb(k, 1, 3)),
        -I(db(k, 3), db(3, 2), ddb(k, 3, 1)),
    ]


def _vii_terms(D: _Derivs, k: int) -> list:
    db, ddb, I = D.db, D.ddb, D.integral
    return [
        I(db(k, 2), db(1, 2), ddb(k, 2, 3)),
        -I(db(k, 2), db(1, 2), ddb(k, 3, 2)),
        -I(db(k, 2), db(2, 1), ddb(k, 2, 3)),
        I(db(k, 2), db(2, 1), ddb(k, 3, 2)),
        -I(db(k, 2), db(2, 3), ddb(k, 1, 2)),
        I(db(k, 2), db(2, 3), ddb(k, 2, 1)),
        I(db(k, 2), db(3, 2), ddb(k, 1, 2)),
        -I(db(k, 2), db(3, 2), ddb(k, 2, 1)),
    ]


def _viii_terms(D: _Derivs, k: int) -> list:
    db, ddb, I = D.db, D.ddb, D.integral
    return [
        I(db(k, 1), db(1, 2), ddb(k, 1, 3)),
        -I(db(k, 1), db(1, 2), ddb(k, 3, 1)),
        -I(db(k, 1), db(2, 1), ddb(k, 1, 3)),
        I(db(k, 1), db(2, 1), ddb(k, 3, 1)),
        -I(db(k, 1), db(1, 3), ddb(k, 1, 2)),
        I(db(k, 1), db(1, 3), ddb(k, 2, 1)),
        I(db(k, 1), db(3, 1), ddb(k, 1, 2)),
        -I(db(k, 1), db(3, 1), ddb(k, 2, 1)),
    ]


def decompose_hall_3d(b: VectorField, epsilon: float = 1.0) -> HallBreakdown3D:
    """All V, VI, VII, VIII integrals by literal quadrature, each scaled by epsilon."""
    _require_cubic_exact(b, 3)
    D = _Derivs(b)
    j, dj, db, I = D.jj, D.dj_, D.db, D.integral
    v = np.empty((3, 6))
    vi = np.empty((3, 8))
    vii = np.empty((3, 8))
    viii = np.empty((3, 8))
    for k in (1, 2, 3):
        v[k - 1] = [
            -I(j(2), db(k, 3), dj(k, 1)),
            I(j(3), db(k, 2), dj(k, 1)),
            I(j(1), db(k, 3), dj(k, 2)),
            -I(j(3), db(k, 1), dj(k, 2)),
            -I(j(1), db(k, 2), dj(k, 3)),
            I(j(2), db(k, 1), dj(k, 3)),
        ]
        vi[k - 1] = _vi_terms(D, k)
        vii[k - 1] = _vii_terms(D, k)
        viii[k - 1] = _viii_terms(D, k)
    e = epsilon
    return HallBreakdown3D(e * v, e * vi, e * vii, e * viii, _hall_direct(b, epsilon))


@dataclass(frozen=True)
class GroupedIdentity:
    name: str
    lhs: float
    rhs: float
    normalizer: float

    @property
    def relative_error(self) -> float:
        return _rel(self.lhs - self.rhs, self.normalizer)


@dataclass(frozen=True)
class WitnessReport:
    identities: tuple
    witness: float
    ratios: dict = field(default_factory=dict)


def _witness_integral(b: VectorField) -> float:
    """integral |grad b| |grad b_h| |grad^2 b_h| on a 2x refined grid."""
    g = b.grid
    m = 2 * g.n
    f = g.deriv_factors
    c = b.coeffs
    grad = np.stack([to_physical(f[a] * c, 3, m) for a in range(3)])  # (a, i, ...)
    gb = np.sqrt(np.sum(grad**2, axis=(0, 1)))
    gbh = np.sqrt(np.sum(grad[:, :2] ** 2, axis=(0, 1)))
    hh = np.zeros_like(gb)
    for a in range(3):
        for e in range(3):
            hh += np.sum(to_physical(f[a] * f[e] * c[:2], 3, m) ** 2, axis=0)
    return g.volume * float(np.mean(gb * gbh * np.sqrt(hh)))


def grouped_bounds_witness_3d(b: VectorField) -> WitnessReport:
    """Check the integration-by-parts regroupings used to bound the 3-D Hall term.

    * est97: sum_k VI_{k,2} + VI_{k,6} against its by-parts form, with
      d3 b3 replaced by -(d1 b1 + d2 b2);
    * est98: sum_k VI_{k,3} + VI_{k,7} against its final by-parts line, same
      substitution;
    * est100: the retained VII/VIII terms against the form with the four
      d_k d_a b3 factors integrated by parts in x_k.

    The witness integral is reported, not compared.
    """
    _require_cubic_exact(b, 3)
    D = _Derivs(b)
    db, ddb, I = D.db, D.ddb, D.integral

    def d3b3():
        return -(db(1, 1) + db(2, 2))

    def dk_d3b3(k):
        return -(ddb(k, 1, 1) + ddb(k, 2, 2))

    def da_d3b3(a):
        return -(ddb(a, 1, 1) + ddb(a, 2, 2))

    ks = (1, 2, 3)
    # est97
    lhs_terms = [t for k in ks for t in (_vi_terms(D, k)[1], _vi_terms(D, k)[5])]
    rhs_terms = []
    for k in ks:
        rhs_terms += [
            I(dk_d3b3(k), db(1, 3), db(k, 2)),
            I(db(k, 3), da_d3b3(1), db(k, 2)),
            -I(dk_d3b3(k), db(2, 3), db(k, 1)),
            -I(db(k, 3), da_d3b3(2), db(k, 1)),
        ]
    est97 = GroupedIdentity(
        "est97", math.fsum(lhs_terms), math.fsum(rhs_terms),
        max(abs(t) for t in lhs_terms + rhs_terms),
    )

    # est98
    lhs_terms = [t for k in ks for t in (_vi_terms(D, k)[2], _vi_terms(D, k)[6])]
    rhs_terms = []
    for k in ks:
        rhs_terms += [
            -I(db(2, 1), db(k, 3), dk_d3b3(k)),
            I(db(1, 2), db(k, 3), dk_d3b3(k)),
        ]
    est98 = GroupedIdentity(
        "est98", math.fsum(lhs_terms), math.fsum(rhs_terms),
        max(abs(t) for t in lhs_terms + rhs_terms),
    )

    # est100
    lhs_terms = []
    rhs_terms = []
    for k in ks:
        vii = _vii_terms(D, k)
        viii = _viii_terms(D, k)
        lhs_terms += [vii[l - 1] for l in (1, 3, 4, 5, 6, 8)]
        lhs_terms += [viii[l - 1] for l in (1, 2, 3, 5, 6, 7)]

        def by_parts(sign, a_k, c, a_idx):
            # sign * int A C d_k d_a b3  ->  -sign * int (d_k A C + A d_k C) d_a b3
            (ka, ia), (kc, ic) = a_k, c
            dA = ddb(k, ka, ia)
            dC = ddb(k, kc, ic)
            return -sign * (
                I(dA, db(kc, ic), db(a_idx, 3)) + I(db(ka, ia), dC, db(a_idx, 3))
            )

        rhs_terms += [
            by_parts(+1, (k, 2), (1, 2), 2),  # VII_1
            by_parts(-1, (k, 2), (2, 1), 2),  # VII_3
            vii[3], vii[4], vii[5], vii[7],
            by_parts(+1, (k, 1), (1, 2), 1),  # VIII_1
            viii[1],
            by_parts(-1, (k, 1), (2, 1), 1),  # VIII_3
            viii[4], viii[5], viii[6],
        ]
    est100 = GroupedIdentity(
        "est100", math.fsum(lhs_terms), math.fsum(rhs_terms),
        max(abs(t) for t in lhs_terms + rhs_terms),
    )

    witness = _witness_integral(b)
    ratios = {gi.name: _rel(gi.lhs, witness) for gi in (est97, est98, est100)}
    return WitnessReport((est97, est98, est100), witness, ratios)


# ---------------------------------------------------------------------------
# div-curl identities


def divcurl_identity(f: VectorField, g: VectorField) -> tuple[float, float, float, float]:
    """Both sides of the 2.5-D div-curl identities.

    est41: int (curl f)_1 g_1 + (curl f)_2 g_2 = int f_3 (curl g)_3
    est42: int (curl f)_3 (curl g)_3 = -int f_1 Lap g_1 + f_2 Lap g_2   (g solenoidal)
    """
    f._check(g)
    grid = f.grid
    if grid.dim != 2:
        raise ValueError("div-curl identities are stated for x3-independent fields")
    if solenoidality(g) > 1e-10:
        raise ValueError("g must be divergence-free for the est42 identity")
    vol = grid.volume

    def ip(a, c):
        return vol * float(np.vdot(c, a).real)

    cf = curl_array(f.coeffs, grid)
    cg = curl_array(g.coeffs, grid)
    lap_g = -grid.k_squared * g.coeffs
    lhs41 = ip(cf[0], g.coeffs[0]) + ip(cf[1], g.coeffs[1])
    rhs41 = ip(f.coeffs[2], cg[2])
    lhs42 = ip(cf[2], cg[2])
    rhs42 = -(ip(f.coeffs[0], lap_g[0]) + ip(f.coeffs[1], lap_g[1]))
    return lhs41, rhs41, lhs42, rhs42


def divcurl_normalizers(f: VectorField, g: VectorField) -> tuple[float, float]:
    """Largest individual term magnitude in each identity (Cauchy-Schwarz scale)."""
    grid = f.grid
    cf = curl_array(f.coeffs, grid)
    cg = curl_array(g.coeffs, grid)
    lap_g = -grid.k_squared * g.coeffs

    def nrm(a):
        return math.sqrt(grid.volume * float(np.sum(np.abs(a) ** 2)))

    n41 = max(nrm(cf[0]) * nrm(g.coeffs[0]), nrm(cf[1]) * nrm(g.coeffs[1]), nrm(f.coeffs[2]) * nrm(cg[2]))
    n42 = max(nrm(cf[2]) * nrm(cg[2]), nrm(f.coeffs[0]) * nrm(lap_g[0]), nrm(f.coeffs[1]) * nrm(lap_g[1]))
    return n41, n42


# ---------------------------------------------------------------------------
# auxiliary fields z1 = b + omega, z2 = curl z1


@dataclass(frozen=True, eq=False)
class AuxFields:
    omega: VectorField
    z1: VectorField
    z2: VectorField

    def curl_omega(self) -> VectorField:
        return curl(self.omega)


def aux_fields(state: State) -> AuxFields:
    omega = curl(state.u, kind="omega")
    z1 = (state.b + omega).replace(kind="z")
    z2 = curl(z1, kind="z")
    return AuxFields(omega, z1, z2)


_UNIT_A = SystemSpec("A", nu=1.0, eta=1.0, epsilon=1.0)


def _require_unit_spec(spec: SystemSpec | None) -> SystemSpec:
    if spec is None:
        return _UNIT_A
    if spec.system != "A" or (spec.nu, spec.eta, spec.epsilon) != (1.0, 1.0, 1.0):
        raise ValueError("the z-equations hold for system A with nu = eta = epsilon = 1 only")
    return spec


def _residual(terms: list[VectorField]) -> float:
    total = terms[0].coeffs
    for t in terms[1:]:
        total = total + t.coeffs
    grid = terms[0].grid
    num = math.sqrt(grid.volume * float(np.sum(np.abs(total) ** 2)))
    den = max(t.l2_norm() for t in terms)
    return _rel(num, den)


def _dt_z1(state: State, spec: SystemSpec) -> VectorField:
    du, db = rhs(state, spec)
    return db + curl(du)


def _lap(v: VectorField) -> VectorField:
    return v.replace(coeffs=-v.grid.k_squared * v.coeffs)


def z1_equation_residual(state: State, spec: SystemSpec | None = None) -> float:
    """Relative L2 residual of d_t z1 + (u.grad) z1 - (z1.grad) u - Lap z1."""
    spec = _require_unit_spec(spec)
    if state.grid.dim != 2:
        raise ValueError("z-equations are 2.5-D")
    aux = aux_fields(state)
    u, z1 = state.u, aux.z1
    dz1 = _dt_z1(state, spec)
    return _residual([dz1, advect(u, z1), -advect(z1, u), -_lap(z1)])


def z2_extra_term(z1: VectorField, u: VectorField) -> VectorField:
    """2 (0, 0, d1 z1 . d2 u - d2 z1 . d1 u)."""
    grid = u.grid
    f = grid.deriv_factors
    acc = ScalarField.zeros(grid)
    for i in range(3):
        a1 = ScalarField(grid, f[0] * z1.coeffs[i])
        a2 = ScalarField(grid, f[1] * z1.coeffs[i])
        u1 = ScalarField(grid, f[0] * u.coeffs[i])
        u2 = ScalarField(grid, f[1] * u.coeffs[i])
        acc = acc + multiply(a1, u2) - multiply(a2, u1)
    c = np.zeros((3,) + grid.shape, dtype=complex)
    c[2] = 2.0 * acc.coeffs
    return VectorField(grid, c)


def z2_equation_residual(state: State, spec: SystemSpec | None = None) -> float:
    """Relative L2 residual of the z2 evolution equation, d_t z2 = curl(d_t z1)."""
    spec = _require_unit_spec(spec)
    if state.grid.dim != 2:
        raise ValueError("z-equations are 2.5-D")
    aux = aux_fields(state)
    u, om, z1, z2 = state.u, aux.omega, aux.z1, aux.z2
    dz2 = curl(_dt_z1(state, spec))
    return _residual(
        [
            dz2,
            advect(u, z2),
            advect(om, z1),
            -_lap(z2),
            -advect(z1, om),
            -advect(z2, u),
            -z2_extra_term(z1, u),
        ]
    )
