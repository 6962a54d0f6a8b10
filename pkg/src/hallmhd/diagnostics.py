"""Monitored quantities along a trajectory.

A :class:`DiagnosticsRecord` is an immutable snapshot of energies, Sobolev
norms, regularity-criterion integrands and z-field norms at one time.
:func:`accumulate` advances the running time integrals.  Criteria stated
with BMO norms are not computed; L-infinity columns (which bound BMO from
above) are emitted instead and labelled as proxies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import curl_array
from .mhd import State, SystemSpec, dissipation_rate
from .spectral import Grid, inverse, l2_sq_array, lp_samples_norm, seminorm_sq_array
from .timestepper import StepResult

__all__ = [
    "CRITERION_QUANTITIES",
    "CriterionSpec",
    "DiagnosticsRecord",
    "Recorder",
    "sample",
    "accumulate",
    "criterion_field",
]

CRITERION_QUANTITIES = ("grad_b3", "j3", "bilap_u3", "bilap_u1", "bilap_u2")


@dataclass(frozen=True)
class CriterionSpec:
    """A space-time norm ∫ ||q||_{L^p}^r dt with 2/p + 2/r <= 1.

    ``r`` defaults to 2p/(p - 2), or 2 when p is infinite.
    """

    quantity: str
    p: float
    r: float | None = None

    def __post_init__(self):
        if self.quantity not in CRITERION_QUANTITIES:
            raise ValueError(f"unknown criterion quantity {self.quantity!r}")
        p = float(self.p)
        if not p > 2:
            raise ValueError("p must exceed 2")
        r = self.r
        if r is None:
            r = 2.0 if math.isinf(p) else 2.0 * p / (p - 2.0)
        r = float(r)
        if not r > 0:
            raise ValueError("r must be positive")
        if 2.0 / p + 2.0 / r > 1.0 + 1e-12:
            raise ValueError(f"2/p + 2/r = {2 / p + 2 / r:g} exceeds 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)

    @property
    def name(self) -> str:
        ptag = "inf" if math.isinf(self.p) else f"{self.p:g}"
        return f"{self.quantity}_L{ptag}_r{self.r:g}"


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    l2_u: float  # squared norms throughout
    l2_b: float
    h1_u: float
    h1_b: float
    hm_u: float
    hm_b: float
    m: int
    dissipation_rate: float
    criterion_samples: dict = field(default_factory=dict)
    criterion_integrals: dict = field(default_factory=dict)
    dissipated: float = 0.0
    e0: float | None = None
    z_norms: dict = field(default_factory=dict)
    linf_proxies: dict = field(default_factory=dict)
    status: str = "ok"

    @property
    def energy(self) -> float:
        return self.l2_u + self.l2_b

    @property
    def energy_defect(self) -> float:
        """E(t) + 2 ∫ dissipation dt - E(0)."""
        e0 = self.energy if self.e0 is None else self.e0
        return self.energy + 2.0 * self.dissipated - e0


def criterion_field(state: State, quantity: str) -> np.ndarray:
    """Physical samples of the criterion integrand; vector-valued for grad_b3."""
    g = state.grid
    f = g.deriv_factors
    if quantity == "grad_b3":
        b3 = state.b.coeffs[2]
        return np.stack([inverse(np.broadcast_to(d * b3, g.shape), g.dim) for d in f[: g.dim]])
    if quantity == "j3":
        return inverse(curl_array(state.b.coeffs, g)[2], g.dim)
    if quantity.startswith("bilap_u"):
        k = int(quantity[-1]) - 1
        return inverse(g.k_squared**2 * state.u.coeffs[k], g.dim)
    raise ValueError(f"unknown criterion quantity {quantity!r}")


def _pointwise_magnitude(a: np.ndarray, grid: Grid) -> np.ndarray:
    return a if a.ndim == grid.dim else np.sqrt(np.sum(a**2, axis=0))


def _z_norms(state: State) -> dict:
    g = state.grid
    omega = curl_array(state.u.coeffs, g)
    z1 = state.b.coeffs + omega
    z2 = curl_array(z1, g)
    curl_om = curl_array(omega, g)
    out = {"z1": l2_sq_array(z1, g), "z2": l2_sq_array(z2, g)}
    for k in range(3):
        out[f"curl_omega_{k + 1}"] = l2_sq_array(curl_om[k], g)
    return out


def _linf(c: np.ndarray, grid: Grid) -> float:
    p = inverse(c, grid.dim)
    return float(np.max(np.sqrt(np.sum(p**2, axis=0)))) if p.size else 0.0


def sample(
    state: State,
    spec: SystemSpec,
    criteria: list[CriterionSpec] | tuple = (),
    m: int = 3,
) -> DiagnosticsRecord:
    """Instantaneous diagnostics; running integrals start at zero."""
    g = state.grid
    uc, bc = state.u.coeffs, state.b.coeffs
    l2u, l2b = l2_sq_array(uc, g), l2_sq_array(bc, g)
    samples = {}
    for cs in criteria:
        a = _pointwise_magnitude(criterion_field(state, cs.quantity), g)
        samples[cs.name] = lp_samples_norm(a, cs.p, g)
    grad_b = np.stack([np.broadcast_to(d * bc, bc.shape) for d in g.deriv_factors[: g.dim]])
    linf = {
        "j_linf_bmo_proxy": _linf(curl_array(bc, g), g),
        "u_linf_bmo_proxy": _linf(uc, g),
        "grad_b_linf_bmo_proxy": _linf(grad_b.reshape((-1,) + g.shape), g),
    }
    return DiagnosticsRecord(
        t=state.t,
        l2_u=l2u,
        l2_b=l2b,
        h1_u=seminorm_sq_array(uc, g, 1.0),
        h1_b=seminorm_sq_array(bc, g, 1.0),
        hm_u=l2u + seminorm_sq_array(uc, g, m),
        hm_b=l2b + seminorm_sq_array(bc, g, m),
        m=m,
        dissipation_rate=dissipation_rate(state, spec),
        criterion_samples=samples,
        criterion_integrals={k: 0.0 for k in samples},
        z_norms=_z_norms(state),
        linf_proxies=linf,
    )


def accumulate(
    prev: DiagnosticsRecord,
    cur: DiagnosticsRecord,
    criteria: list[CriterionSpec] | tuple = (),
    dissipated: float | None = None,
) -> DiagnosticsRecord:
    """Advance running integrals from ``prev`` to ``cur``.

    Criterion integrals use the trapezoid rule on ||q||^r.  The dissipated
    energy uses ``dissipated`` when the integrator supplies its own stage
    quadrature and the trapezoid rule otherwise.
    """
    dt = cur.t - prev.t
    if not dt > 0:
        raise ValueError(f"time must increase: {prev.t!r} -> {cur.t!r}")
    rs = {cs.name: cs.r for cs in criteria}
    integrals = {}
    for name, val in cur.criterion_samples.items():
        r = rs.get(name)
        if r is None:
            raise ValueError(f"no CriterionSpec given for sample {name!r}")
        before = prev.criterion_samples.get(name, val)
        integrals[name] = prev.criterion_integrals.get(name, 0.0) + 0.5 * dt * (before**r + val**r)
    if dissipated is None:
        dissipated = 0.5 * dt * (prev.dissipation_rate + cur.dissipation_rate)
    e0 = prev.energy if prev.e0 is None else prev.e0
    return replace(
        cur,
        criterion_integrals=integrals,
        dissipated=prev.dissipated + dissipated,
        e0=e0,
    )


class Recorder:
    """Stepper hook that samples every step and keeps a decimated history.

    Every ``cadence``-th record is kept, together with the latest one, so the
    last finite sample is always available after a blow-up.
    """

    def __init__(self, spec: SystemSpec, criteria=(), m: int = 3, cadence: int = 1):
        if cadence < 1:
            raise ValueError("cadence must be >= 1")
        self.spec = spec
        self.criteria = tuple(criteria)
        self.m = m
        self.cadence = cadence
        self.history: list[DiagnosticsRecord] = []
        self.latest: DiagnosticsRecord | None = None
        self.count = 0
        self.sup_h1 = 0.0

    def __call__(self, result: StepResult):
        rec = sample(result.state, self.spec, self.criteria, self.m)
        if self.latest is None or result.dt == 0.0:
            rec = replace(rec, e0=rec.energy)
        else:
            rec = accumulate(self.latest, rec, self.criteria, result.dissipated)
        self.latest = rec
        self.sup_h1 = max(self.sup_h1, rec.h1_u + rec.h1_b)
        if self.count % self.cadence == 0:
            self.history.append(rec)
        self.count += 1

    def finish(self, status: str) -> list[DiagnosticsRecord]:
        """Close the history, tagging the final record with the run status."""
        if self.latest is not None:
            final = replace(self.latest, status=status)
            if self.history and self.history[-1].t == final.t:
                self.history[-1] = final
            else:
                self.history.append(final)
            self.latest = final
        return self.history
