"""Integrating-factor RK4 time stepping.

The dissipation L (ν|k|^a on u, per-component magnetic symbols on b) is
integrated exactly by exp(-L t); the nonlinear tendency is advanced with
the classical fourth-order Lawson scheme.  The energy dissipated during a
step is integrated with the same RK weights at the internal stages, so the
discrete energy balance inherits the fourth-order accuracy of the scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import VectorField, curl_array, leray_array, solenoidality
from .mhd import MagneticPropagator, State, SystemSpec, _check_dim, decay_rates, nonlinear_arrays
from .spectral import inverse

__all__ = [
    "StepperConfig",
    "StepResult",
    "RunResult",
    "BlowUpError",
    "CFLWarning",
    "step",
    "run",
    "cfl_dt",
]


class BlowUpError(RuntimeError):
    """Raised when the solution leaves the finite range or exceeds the guard."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class CFLWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    cfl: float = 0.4
    t_end: float = 0.0
    adapt: bool = False
    max_steps: int = 1_000_000
    blowup_guard: float = 1e8
    solenoidal_tol: float = 1e-9
    linear_only: bool = False  # test hook: drop the nonlinear tendency

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


@dataclass(frozen=True, eq=False)
class StepResult:
    state: State
    dt: float
    dissipated: float  # integral over the step of the dissipation rate
    cfl_ok: bool = True


@dataclass(eq=False)
class RunResult:
    state: State
    status: str  # completed | blowup_detected | step_limit
    steps: int
    last_finite: State
    message: str = ""


def _rate(uc, bc, ru, rb, vol) -> float:
    return vol * float(
        np.sum(ru * (uc.real**2 + uc.imag**2)) + np.sum(rb * (bc.real**2 + bc.imag**2))
    )


def wave_speed(state: State, spec: SystemSpec) -> float:
    """max|u| + max|b| + epsilon max|j| on the grid."""
    g = state.grid
    u = np.abs(inverse(state.u.coeffs, g.dim)).max()
    b = np.abs(inverse(state.b.coeffs, g.dim)).max()
    j = np.abs(inverse(curl_array(state.b.coeffs, g), g.dim)).max() if spec.epsilon else 0.0
    return float(u + b + spec.epsilon * j)


def cfl_dt(state: State, spec: SystemSpec, cfg: StepperConfig) -> float:
    """Largest step allowed by the advective and whistler CFL proxy."""
    speed = wave_speed(state, spec)
    if speed == 0.0:
        return math.inf
    return cfg.cfl * state.grid.spacing / speed


def step(state: State, spec: SystemSpec, cfg: StepperConfig, dt: float | None = None) -> StepResult:
    """Advance one IF-RK4 step of size ``dt`` (``cfg.dt`` by default)."""
    _check_dim(state, spec)
    h = cfg.dt if dt is None else dt
    grid = state.grid
    cfl_ok = True
    if not cfg.adapt:
        limit = cfl_dt(state, spec, cfg)
        if h > limit:
            cfl_ok = False
            warnings.warn(f"dt={h:g} exceeds CFL limit {limit:g} at t={state.t:g}", CFLWarning, stacklevel=2)

    ru, rb = decay_rates(grid, spec)
    ru = np.broadcast_to(ru, grid.shape)
    eu_half, eu = np.exp(-0.5 * h * ru), np.exp(-h * ru)
    prop = MagneticPropagator(grid, spec)

    def eb_half(c):
        return prop(0.5 * h, c)

    def eb(c):
        return prop(h, c)

    vol = grid.volume

    def N(uc, bc):
        if cfg.linear_only:
            return 0.0, 0.0
        return nonlinear_arrays(uc, bc, grid, spec.epsilon)

    u0, b0 = state.u.coeffs, state.b.coeffs
    ku1, kb1 = N(u0, b0)
    ua = eu_half * (u0 + 0.5 * h * ku1)
    ba = eb_half(b0 + 0.5 * h * kb1)
    ku2, kb2 = N(ua, ba)
    ub = eu_half * u0 + 0.5 * h * ku2
    bb = eb_half(b0) + 0.5 * h * kb2
    ku3, kb3 = N(ub, bb)
    uc = eu * u0 + h * eu_half * ku3
    bc = eb(b0) + h * eb_half(kb3)
    ku4, kb4 = N(uc, bc)
    u1 = eu * u0 + h / 6.0 * (eu * ku1 + 2.0 * eu_half * (ku2 + ku3) + ku4)
    b1 = eb(b0) + h / 6.0 * (eb(kb1) + 2.0 * eb_half(kb2 + kb3) + kb4)

    dissipated = h / 6.0 * (
        _rate(u0, b0, ru, rb, vol)
        + 2.0 * _rate(ua, ba, ru, rb, vol)
        + 2.0 * _rate(ub, bb, ru, rb, vol)
        + _rate(uc, bc, ru, rb, vol)
    )
    t1 = state.t + h

    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(b1))):
        raise BlowUpError(f"non-finite values at t={t1:g}", t1)
    u1 = leray_array(u1, grid)
    b1 = np.array(b1)
    b1[:, grid.nyquist_mask] = 0.0

    u_new = VectorField(grid, u1, "u", state.u.band_limit, True)
    b_new = VectorField(grid, b1, "b", state.b.band_limit, True)
    sol = solenoidality(b_new)
    if sol > cfg.solenoidal_tol:
        raise BlowUpError(f"div b drifted to {sol:.3e} at t={t1:g}", t1)
    sup = np.abs(inverse(u1, grid.dim)).max() + np.abs(inverse(b1, grid.dim)).max()
    if not math.isfinite(sup) or sup > cfg.blowup_guard:
        raise BlowUpError(f"|u|_inf + |b|_inf = {sup:.3e} exceeds guard at t={t1:g}", t1)
    return StepResult(State(u_new, b_new, t1), h, dissipated, cfl_ok)


def run(
    initial: State,
    spec: SystemSpec,
    cfg: StepperConfig,
    hooks: list[Callable] | None = None,
) -> RunResult:
    """Integrate from ``initial.t`` to ``cfg.t_end``.

    Each hook is called as ``hook(result)`` with a StepResult: once for the
    initial state (dt = 0) and then after every step.
    """
    hooks = hooks or []
    state = initial
    for hk in hooks:
        hk(StepResult(state, 0.0, 0.0))
    steps = 0
    eps_t = 1e-12 * max(1.0, cfg.t_end)
    while cfg.t_end - state.t > eps_t:
        if steps >= cfg.max_steps:
            return RunResult(state, "step_limit", steps, state, message=f"stopped after {steps} steps")
        h = cfg.dt
        if cfg.adapt:
            h = min(h, cfl_dt(state, spec, cfg))
        remaining = cfg.t_end - state.t
        if h >= remaining - eps_t:
            h = remaining
        try:
            res = step(state, spec, cfg, h)
        except BlowUpError as exc:
            return RunResult(state, "blowup_detected", steps, state, message=str(exc))
        state = res.state
        steps += 1
        for hk in hooks:
            hk(res)
    return RunResult(state, "completed", steps, state)
