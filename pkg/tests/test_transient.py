import numpy as np
import pytest

from ratchet_lab.fixtures import conjugate_params, sawtooth_params, symmetric_params
from ratchet_lab.model import Grid, GridFn, ModelError, make_smoothed_sawtooth
from ratchet_lab.stationary import Direction, solve_stationary, well_mass_report
from ratchet_lab.transient import (
    ConvergenceError,
    DeterministicFlashing,
    FlashingSchedule,
    RandomFlashingStepper,
    TransientState,
    compare_directions,
    cycle_asymptotics,
    run_to_stationary,
    step_deterministic_flashing,
    step_random_flashing,
)


def test_stationary_state_is_fixed(transport):
    pair = solve_stationary(transport)
    out = step_random_flashing(TransientState(pair), 1e-3, transport)
    assert out.pair.l1_distance(pair) <= 1e-9
    assert out.t == pytest.approx(1e-3) and out.step_count == 1


def test_mass_conserved_over_1000_steps(transport):
    stepper = RandomFlashingStepper(transport, 1e-3)
    u = TransientState.uniform(transport.grid).pair.stacked()
    m = stepper.op.mass(u)
    assert m == pytest.approx(1.0, abs=1e-14)
    worst = 0.0
    for _ in range(1000):
        v = stepper.advance(u)
        worst = max(worst, abs(stepper.op.mass(v) - stepper.op.mass(u)))
        assert v.min() >= 0
        u = v
    assert worst <= 1e-12
    assert stepper.op.mass(u) == pytest.approx(1.0, abs=1e-9)


def test_conjugate_relaxation_monotone():
    p = conjugate_params()
    target = solve_stationary(p)
    stepper = RandomFlashingStepper(p, 1e-3)
    state = TransientState.uniform(p.grid)
    gaps = []
    for _ in range(10):
        for _ in range(200):
            state = stepper.step(state)
        gaps.append(state.pair.l1_distance(target))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_conjugate_run_converges():
    rel = run_to_stationary(conjugate_params(), dt=1e-3, tol=1e-7)
    assert rel.final_gap < 1e-7
    assert rel.max_mass_drift <= 1e-12


def test_transport_run_matches_stationary_wells(transport):
    rel = run_to_stationary(transport, dt=1e-3, tol=1e-7)
    rep = well_mass_report(solve_stationary(transport), transport.k)
    dyn = well_mass_report(rel.state.pair, transport.k)
    assert dyn.p_hat == pytest.approx(rep.p_hat, abs=1e-6)
    assert dyn.P_hat == pytest.approx(rep.P_hat, abs=1e-6)
    tail = np.array(rel.history[len(rel.history) // 2 :])
    assert np.all(np.diff(tail) < 0)


def test_stationary_start_needs_no_steps(transport):
    rel = run_to_stationary(transport, initial=TransientState(solve_stationary(transport)))
    assert rel.state.step_count == 0
    assert len(rel.history) == 1


def test_nonconvergence_reported(transport):
    with pytest.raises(ConvergenceError, match="final L1 gap") as info:
        run_to_stationary(transport, dt=1e-3, tol=1e-7, max_steps=20)
    assert info.value.state.step_count == 20
    assert len(info.value.history) == 21


def test_records_for_time_series(transport):
    rel = run_to_stationary(transport, dt=1e-2, tol=1e-4, record_every=10)
    t, mass, gap, pw, Pw = rel.records[0]
    assert t == pytest.approx(0.1)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert pw.shape == Pw.shape == (2,)


def test_invalid_time_step(transport):
    with pytest.raises(ModelError):
        RandomFlashingStepper(transport, 0.0)


def test_schedule_phases():
    s = FlashingSchedule(3.0, 1.0)
    assert [s.h(t) for t in (0.0, 0.5, 1.0, 1.5, 3.0, 3.2, 4.0, 4.1)] == [0, 1, 1, 0, 0, 1, 1, 0]
    with pytest.raises(ModelError):
        FlashingSchedule(1.0, 1.0)
    with pytest.raises(ModelError):
        FlashingSchedule(1.0, 0.0)


@pytest.fixture(scope="module")
def tooth():
    return make_smoothed_sawtooth(2, 0.15, 1.0, Grid(1001))


def test_off_phase_relaxes_to_uniform(tooth):
    model = DeterministicFlashing(tooth, 0.05, 1e-2)
    rho = np.where(tooth.grid.nodes < 0.3, 1 / 0.3, 0.0)
    rho = model.run(rho / (tooth.grid.weights @ rho), 3000, on=0)
    assert np.max(np.abs(rho - 1.0)) <= 1e-6


def test_on_phase_relaxes_to_boltzmann(tooth):
    # sigma = 0.5 keeps barrier crossing between the two wells fast enough for t = 30
    sigma = 0.5
    model = DeterministicFlashing(tooth, sigma, 1e-2)
    rho = model.run(np.ones(tooth.grid.n), 3000, on=1)
    boltz = np.exp(-tooth.values / sigma)
    boltz /= tooth.grid.weights @ boltz
    assert np.max(np.abs(rho - boltz)) <= 1e-6


def test_deterministic_step_conserves_mass(tooth):
    s = FlashingSchedule(1.0, 0.4)
    rho = GridFn(tooth.grid, np.ones(tooth.grid.n))
    t = 0.0
    for _ in range(300):
        nxt = step_deterministic_flashing(rho, t, 1e-2, tooth, 0.05, s)
        assert abs(nxt.integral() - rho.integral()) <= 1e-12
        assert nxt.values.min() >= 0
        rho, t = nxt, t + 1e-2


def test_cycle_map_settles(tooth):
    asym = cycle_asymptotics(tooth, 0.01, FlashingSchedule(3.0, 1.0), dt=1e-2)
    assert asym.last_change < 1e-8
    assert asym.wells.sum() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("a,expected", [(0.15, Direction.LEFT), (0.35, Direction.RIGHT)])
def test_switched_direction_follows_well_centre(a, expected):
    pot = make_smoothed_sawtooth(2, a, 1.0, Grid(1001))
    assert cycle_asymptotics(pot, 0.01, FlashingSchedule(3.0, 1.0), dt=1e-2).direction is expected


def test_models_disagree_between_site_and_centre():
    c = compare_directions(sawtooth_params(a=0.2, s_star=0.15, sigma=0.01, n=1001),
                           FlashingSchedule(3.0, 1.0), dt=1e-2)
    assert c.random_direction is Direction.RIGHT
    assert c.deterministic_direction is Direction.LEFT
    assert c.agree is False


@pytest.mark.parametrize("a", [0.2, 0.3])
def test_models_agree_for_symmetric_attachment(a):
    c = compare_directions(symmetric_params(a=a, n=1001), FlashingSchedule(3.0, 1.0), dt=1e-2)
    assert c.agree is True


def test_fully_symmetric_is_indeterminate():
    c = compare_directions(symmetric_params(a=0.25, n=1001), FlashingSchedule(3.0, 1.0), dt=1e-2)
    assert c.random_direction is Direction.INDETERMINATE
    assert c.deterministic_direction is Direction.INDETERMINATE
    assert c.agree is None
