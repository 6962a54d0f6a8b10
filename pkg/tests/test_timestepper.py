import math
import warnings

import numpy as np
import pytest

from hallmhd.fields import VectorField, random_solenoidal, solenoidality
from hallmhd.mhd import State, SystemSpec, decay_rates
from hallmhd.spectral import Grid
from hallmhd.timestepper import (
    BlowUpError,
    CFLWarning,
    StepperConfig,
    cfl_dt,
    run,
    step,
)


def random_state(grid, K, seed, amp=0.5):
    return State(
        amp * random_solenoidal(grid, K, [seed, 0], "u"),
        amp * random_solenoidal(grid, K, [seed, 1], "b"),
    )


def projected_decay(grid, rb, t, bc):
    """Brute-force exp(-t P D P) per mode via a symmetric eigendecomposition."""
    k = np.stack(np.broadcast_arrays(*grid.wavenumbers)).reshape(3, -1).T
    kk = np.sum(k**2, axis=1, keepdims=True)
    khat = np.where(kk > 0, k / np.sqrt(np.where(kk > 0, kk, 1.0)), 0.0)
    P = np.eye(3) - khat[:, :, None] * khat[:, None, :]
    D = np.zeros_like(P)
    for a in range(3):
        D[:, a, a] = np.broadcast_to(rb[a], grid.shape).ravel()
    lam, V = np.linalg.eigh(P @ D @ P)
    E = V @ (np.exp(-t * lam)[:, :, None] * np.swapaxes(V, 1, 2))
    out = E @ bc.reshape(3, -1).T[:, :, None]
    return out[:, :, 0].T.reshape(bc.shape)


def l2(a, grid):
    return math.sqrt(grid.volume * float(np.sum(np.abs(a) ** 2)))


@pytest.mark.parametrize(
    "kw",
    [dict(dt=0), dict(dt=0.1, cfl=0), dict(dt=0.1, cfl=1.5), dict(dt=0.1, t_end=-1), dict(dt=0.1, max_steps=-1)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        StepperConfig(**kw)


def test_steady_shear_decays_exactly(grid2):
    u = VectorField.from_functions(grid2, [lambda x, y: 0 * x, lambda x, y: np.sin(x), lambda x, y: 0 * x], "u")
    s = State(u, VectorField.zeros(grid2, "b"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CFLWarning)
        out = step(s, SystemSpec("A", nu=0.7, epsilon=0.0), StepperConfig(dt=0.05)).state
    assert out.u.max_abs_diff(math.exp(-0.7 * 0.05) * u) <= 1e-13
    assert out.t == pytest.approx(0.05)


def test_zero_state_stays_zero(grid2):
    s = State(VectorField.zeros(grid2, "u"), VectorField.zeros(grid2, "b"))
    r = step(s, SystemSpec("A"), StepperConfig(dt=0.1))
    assert not np.any(r.state.u.coeffs) and not np.any(r.state.b.coeffs)
    assert r.dissipated == 0


@pytest.mark.parametrize(
    "system,grid", [("A", Grid(2, 16)), ("B", Grid(2, 16)), ("C", Grid(2, 16)), ("D", Grid(3, 16))]
)
def test_linear_hook_matches_exponential(system, grid):
    spec = SystemSpec(system, nu=0.9, eta=0.4, eta_h=0.3, eta_v=1.1)
    s = random_state(grid, 4, 3, amp=1.0)
    cfg = StepperConfig(dt=0.01, t_end=0.1, linear_only=True)
    res = run(s, spec, cfg)
    ru, rb = decay_rates(grid, spec)
    eu = np.exp(-0.1 * ru) * s.u.coeffs
    if system == "D":
        eb = projected_decay(grid, rb, 0.1, s.b.coeffs)
    else:
        eb = np.exp(-0.1 * rb) * s.b.coeffs
    assert res.steps == 10
    assert np.max(np.abs(res.state.u.coeffs - eu)) <= 1e-12
    assert np.max(np.abs(res.state.b.coeffs - eb)) <= 1e-12


def test_system_d_keeps_b_solenoidal(grid3):
    spec = SystemSpec("D", nu=0.2, eta_h=0.3, eta_v=1.1, epsilon=0.5)
    s = random_state(grid3, 4, 9)
    res = run(s, spec, StepperConfig(dt=0.01, t_end=0.05))
    assert res.status == "completed"
    assert solenoidality(res.state.b) <= 1e-12


def _integrate(s, spec, dt, T):
    return run(s, spec, StepperConfig(dt=dt, t_end=T)).state


def test_global_error_is_fourth_order():
    g = Grid(2, 32)
    spec = SystemSpec("A", nu=0.05, eta=0.05, epsilon=1.0)
    s = random_state(g, 4, 5)
    T = 0.4
    ys = [_integrate(s, spec, dt, T) for dt in (0.04, 0.02, 0.01)]
    e1 = l2(ys[0].u.coeffs - ys[1].u.coeffs, g) + l2(ys[0].b.coeffs - ys[1].b.coeffs, g)
    e2 = l2(ys[1].u.coeffs - ys[2].u.coeffs, g) + l2(ys[1].b.coeffs - ys[2].b.coeffs, g)
    assert math.log2(e1 / e2) >= 3.8


def test_run_t_end_zero_returns_initial(grid2):
    s = random_state(grid2, 4, 1)
    res = run(s, SystemSpec("A"), StepperConfig(dt=0.1, t_end=0.0))
    assert res.status == "completed" and res.steps == 0 and res.state is s


def test_run_does_not_overshoot(grid2):
    seen = []
    res = run(random_state(grid2, 4, 1), SystemSpec("A"), StepperConfig(dt=0.03, t_end=0.1), [lambda r: seen.append(r.state.t)])
    assert res.status == "completed"
    assert res.state.t == pytest.approx(0.1, abs=1e-14)
    assert seen[0] == 0.0 and len(seen) == 5


def test_run_step_limit(grid2):
    res = run(random_state(grid2, 4, 1), SystemSpec("A"), StepperConfig(dt=0.01, t_end=1.0, max_steps=3))
    assert res.status == "step_limit" and res.steps == 3


def test_blowup_guard(grid2):
    s = random_state(grid2, 4, 1, amp=10.0)
    res = run(s, SystemSpec("A"), StepperConfig(dt=1e-3, t_end=0.01, blowup_guard=1.0))
    assert res.status == "blowup_detected"
    assert res.last_finite is s and res.steps == 0


def test_non_finite_values_abort(grid2):
    s = random_state(grid2, 4, 1)
    bad = State(s.u.replace(coeffs=s.u.coeffs * np.nan), s.b)
    with pytest.raises(BlowUpError):
        step(bad, SystemSpec("A"), StepperConfig(dt=1e-3, adapt=True))


def test_cfl_warning_and_adaptive_step(grid2):
    s = random_state(grid2, 4, 1, amp=5.0)
    spec = SystemSpec("A")
    cfg = StepperConfig(dt=1.0)
    limit = cfl_dt(s, spec, cfg)
    with pytest.warns(CFLWarning):
        r = step(s, spec, cfg, dt=2 * limit)
    assert not r.cfl_ok
    steps = []
    run(s, spec, StepperConfig(dt=1.0, t_end=3 * limit, adapt=True), [lambda r: steps.append(r.dt)])
    assert max(steps[1:]) <= limit * 1.5  # the limit is re-evaluated on the evolving state
    assert all(d > 0 for d in steps[1:])


def test_dimension_mismatch(grid2):
    with pytest.raises(ValueError):
        step(random_state(grid2, 4, 1), SystemSpec("D"), StepperConfig(dt=0.01))


def test_solenoidality_drift_over_many_steps():
    g = Grid(2, 16)
    s = random_state(g, 4, 2)
    res = run(s, SystemSpec("C", eta_h=0.5, eta_v=0.5), StepperConfig(dt=1e-3, t_end=10.0, max_steps=10_000))
    assert res.steps == 10_000
    assert solenoidality(res.state.u) <= 1e-9
    assert solenoidality(res.state.b) <= 1e-9
