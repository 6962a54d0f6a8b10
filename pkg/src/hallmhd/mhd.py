"""Right-hand sides of the Hall-MHD systems.

Four systems share one nonlinear structure and differ only in their
diagonal dissipation:

========  ====  ==================  =====================================
tag       dim   velocity            magnetic
========  ====  ==================  =====================================
A         2.5   nu Lambda^2 u       eta Lambda^2 b
B         2.5   nu Lambda^2 u       eta Lambda^3 b
C         2.5   nu Lambda^2 u       eta_h Lambda^3 b_h + eta_v Lambda^2 b_v
D         3     nu Lambda^5/2 u     eta_h Lambda^7/2 b_h + eta_v Lambda^5/2 b_v
========  ====  ==================  =====================================

with b_h = (b1, b2, 0) and b_v = (0, 0, b3).  Every quadratic product is
formed on a 3/2-padded grid, so retained modes are alias-free.

In 3-D the split diffusion of system D does not commute with the
divergence, so its magnetic diffusion is Leray-projected (a magnetic
pressure keeps div b = 0).  On solenoidal fields the projected operator is
eta_h|k|^a_h I + (eta_v|k|^a_v - eta_h|k|^a_h) w w^T with w = P e3, a
rank-one update with a closed-form exponential, and its quadratic form is
unchanged, so the energy identity is the same.  In 2.5-D the projection is
the identity on this term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import VectorField, curl_array, leray_array
from .spectral import Grid, from_physical, padded_size, to_physical

__all__ = [
    "SystemSpec",
    "State",
    "SYSTEM_ALIASES",
    "advect",
    "hall_term",
    "rhs",
    "energy_flux_hall",
    "nonlinear_arrays",
    "decay_rates",
    "dissipation_rate",
    "hall_flux_scale",
    "magnetic_diffusion",
    "MagneticPropagator",
]

SYSTEM_ALIASES = {
    "A": "A",
    "A_classical_25D": "A",
    "B": "B",
    "B_hyper_25D": "B",
    "C": "C",
    "C_aniso_25D": "C",
    "D": "D",
    "D_aniso_3D": "D",
}

# (alpha_u, alpha_b_horizontal, alpha_b_vertical)
EXPONENTS = {
    "A": (2.0, 2.0, 2.0),
    "B": (2.0, 3.0, 3.0),
    "C": (2.0, 3.0, 2.0),
    "D": (2.5, 3.5, 2.5),
}

DEFAULT_PADDING = 1.5


@dataclass(frozen=True)
class SystemSpec:
    system: str = "A"
    nu: float = 1.0
    eta: float = 1.0
    eta_h: float = 1.0
    eta_v: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        tag = SYSTEM_ALIASES.get(self.system)
        if tag is None:
            raise ValueError(f"unknown system {self.system!r}; expected one of A, B, C, D")
        object.__setattr__(self, "system", tag)
        if not self.nu > 0:
            raise ValueError("nu must be > 0")
        if tag in ("A", "B") and not self.eta > 0:
            raise ValueError("eta must be > 0")
        if tag in ("C", "D") and not (self.eta_h > 0 and self.eta_v > 0):
            raise ValueError("eta_h and eta_v must be > 0")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")

    @property
    def dim(self) -> int:
        return 3 if self.system == "D" else 2

    @property
    def exponents(self) -> dict:
        a_u, a_h, a_v = EXPONENTS[self.system]
        if self.system in ("A", "B"):
            return {"u": a_u, "b": a_h}
        return {"u": a_u, "b_h": a_h, "b_v": a_v}

    def magnetic_coefficients(self) -> tuple[float, float]:
        """(horizontal, vertical) magnetic diffusivities."""
        if self.system in ("A", "B"):
            return self.eta, self.eta
        return self.eta_h, self.eta_v


@dataclass(frozen=True, eq=False)
class State:
    u: VectorField
    b: VectorField
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.b.grid:
            raise ValueError("u and b must share a grid")
        if self.t < 0:
            raise ValueError("time must be >= 0")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: Grid, uc, bc, t=0.0) -> "State":
        return cls(VectorField(grid, uc, "u", solenoidal=True), VectorField(grid, bc, "b", solenoidal=True), t)


# ---------------------------------------------------------------------------
# kernels


def _phys(c: np.ndarray, grid: Grid, m: int) -> np.ndarray:
    return to_physical(c, grid.dim, m)


def _spec(p: np.ndarray, grid: Grid) -> np.ndarray:
    # products are truncated to |k_i| < n/2; the Nyquist row is dropped
    c = from_physical(p, grid.dim, grid.n)
    c[..., grid.nyquist_mask] = 0.0
    return c


def _grad_phys(c: np.ndarray, grid: Grid, m: int) -> list:
    """Padded physical d_j c_i as a list over j (None for d3 in 2.5-D)."""
    out = []
    for d in grid.deriv_factors:
        if np.isscalar(d):
            out.append(None)
        else:
            out.append(_phys(d * c, grid, m))
    return out


def _advect_phys(a: np.ndarray, grad_c: list) -> np.ndarray:
    acc = None
    for j, g in enumerate(grad_c):
        if g is None:
            continue
        term = a[j] * g
        acc = term if acc is None else acc + term
    return acc


def _cross(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[1] * c[2] - a[2] * c[1],
            a[2] * c[0] - a[0] * c[2],
            a[0] * c[1] - a[1] * c[0],
        ]
    )


def _curl_phys(grad_c: list) -> np.ndarray:
    # grad_c[j][i] = d_j c_i; at most one None entry (d3 in 2.5-D)
    def d(j, i):
        return 0.0 if grad_c[j] is None else grad_c[j][i]

    return np.stack([d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)])


def nonlinear_arrays(uc, bc, grid: Grid, epsilon: float, padding=DEFAULT_PADDING):
    """Nonlinear tendencies (N_u, N_b) as spectral arrays.

    N_u = P[-(u.grad)u + (b.grad)b]
    N_b = -(u.grad)b + (b.grad)u - epsilon curl(j x b)
    """
    m = padded_size(grid.n, padding)
    U = _phys(uc, grid, m)
    B = _phys(bc, grid, m)
    gU = _grad_phys(uc, grid, m)
    gB = _grad_phys(bc, grid, m)

    nu_phys = _advect_phys(B, gB) - _advect_phys(U, gU)
    nb_phys = _advect_phys(B, gU) - _advect_phys(U, gB)
    Nu = leray_array(_spec(nu_phys, grid), grid)
    Nb = _spec(nb_phys, grid)
    if epsilon != 0.0:
        J = _curl_phys(gB)
        jxb = _spec(_cross(J, B), grid)
        Nb = Nb - epsilon * curl_array(jxb, grid)
    return Nu, Nb


def decay_rates(grid: Grid, spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal dissipation rates: (rate for u [shape], rate for b [3, shape])."""
    a_u, a_h, a_v = EXPONENTS[spec.system]
    eh, ev = spec.magnetic_coefficients()
    ru = spec.nu * grid.abs_power(a_u)
    rh = eh * grid.abs_power(a_h)
    rv = ev * grid.abs_power(a_v)
    return ru, np.stack([rh, rh, rv])


def magnetic_diffusion(bc: np.ndarray, grid: Grid, spec: SystemSpec) -> np.ndarray:
    """Spectral magnetic dissipation term (positive operator applied to b)."""
    _, rb = decay_rates(grid, spec)
    out = rb * bc
    if spec.system == "D":
        out = leray_array(out, grid)
    return out


class MagneticPropagator:
    """exp(-t L_b) for the magnetic dissipation L_b of ``spec`` on ``grid``."""

    def __init__(self, grid: Grid, spec: SystemSpec):
        _, rb = decay_rates(grid, spec)
        self.rb = rb
        self.rank_one = spec.system == "D" and grid.dim == 3
        if self.rank_one:
            k = grid.k_abs
            inv = np.zeros_like(k)
            np.divide(1.0, k, out=inv, where=k > 0)
            k1, k2, k3 = (np.broadcast_to(kk, grid.shape) * inv for kk in grid.wavenumbers)
            w = np.stack([-k1 * k3, -k2 * k3, 1.0 - k3**2])
            w2 = 1.0 - k3**2
            wn = np.zeros_like(w2)
            np.divide(1.0, np.sqrt(w2), out=wn, where=w2 > 1e-30)
            self.what = w * wn
            self.dh = rb[0]
            self.lam = rb[0] + (rb[2] - rb[0]) * np.where(w2 > 1e-30, w2, 0.0)

    def __call__(self, t: float, c: np.ndarray) -> np.ndarray:
        if not self.rank_one:
            return np.exp(-t * self.rb) * c
        p = np.sum(self.what * c, axis=0)
        return np.exp(-t * self.dh) * (c - p * self.what) + np.exp(-t * self.lam) * p * self.what


def _check_dim(state: State, spec: SystemSpec):
    if state.grid.dim != spec.dim:
        raise ValueError(
            f"system {spec.system} needs a {spec.dim}-D grid, state lives on a {state.grid.dim}-D grid"
        )


# ---------------------------------------------------------------------------
# public operations


def advect(a: VectorField, c: VectorField, padding=DEFAULT_PADDING) -> VectorField:
    """(a.grad) c, component-wise, with dealiased products."""
    a._check(c)
    grid = a.grid
    m = padded_size(grid.n, padding)
    res = _advect_phys(_phys(a.coeffs, grid, m), _grad_phys(c.coeffs, grid, m))
    return VectorField(grid, _spec(res, grid), "generic")


def hall_term(b: VectorField, form: str = "curl_cross", padding=DEFAULT_PADDING) -> VectorField:
    """curl(j x b) (``curl_cross``) or curl((b.grad) b) (``curl_advect``)."""
    grid = b.grid
    m = padded_size(grid.n, padding)
    B = _phys(b.coeffs, grid, m)
    gB = _grad_phys(b.coeffs, grid, m)
    if form == "curl_cross":
        inner = _cross(_curl_phys(gB), B)
    elif form == "curl_advect":
        inner = _advect_phys(B, gB)
    else:
        raise ValueError(f"unknown Hall form {form!r}")
    return VectorField(grid, curl_array(_spec(inner, grid), grid), "generic", solenoidal=True)


def rhs(state: State, spec: SystemSpec, nonlinear: bool = True) -> tuple[VectorField, VectorField]:
    """Time derivatives (du/dt, db/dt) for the chosen system."""
    _check_dim(state, spec)
    grid = state.grid
    ru, _ = decay_rates(grid, spec)
    uc, bc = state.u.coeffs, state.b.coeffs
    du = -ru * uc
    db = -magnetic_diffusion(bc, grid, spec)
    if nonlinear:
        Nu, Nb = nonlinear_arrays(uc, bc, grid, spec.epsilon)
        du = du + Nu
        db = db + Nb
    return VectorField(grid, du, "u"), VectorField(grid, db, "b")


def dissipation_rate(state: State, spec: SystemSpec) -> float:
    """nu||Lambda^{a_u/2} u||^2 + magnetic analogue: minus d/dt of half the energy."""
    grid = state.grid
    ru, rb = decay_rates(grid, spec)
    pu = state.u.coeffs.real**2 + state.u.coeffs.imag**2
    pb = state.b.coeffs.real**2 + state.b.coeffs.imag**2
    return grid.volume * float(np.sum(ru * pu) + np.sum(rb * pb))


def energy_flux_hall(b: VectorField) -> float:
    """integral of curl(j x b) . b; zero up to roundoff."""
    h = hall_term(b)
    return b.grid.volume * float(np.vdot(b.coeffs, h.coeffs).real)


def hall_flux_scale(b: VectorField) -> float:
    """Cauchy-Schwarz bound ||curl(j x b)|| ||b||, the natural scale of the flux."""
    return hall_term(b).l2_norm() * b.l2_norm()
