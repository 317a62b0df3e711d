import numpy as np
import pytest

from ratchet_lab.model import (
    Grid,
    GridFn,
    ModelError,
    RatchetParams,
    make_constant_rate,
    make_peaked_rate,
    make_smooth_rate,
    make_smoothed_sawtooth,
    periodicity_residual,
    well_integrals,
)
from ratchet_lab.diffusive_mean import diffusive_mean


def test_grid_invariants():
    g = Grid(2001)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert np.max(np.abs(np.diff(g.nodes) - g.h)) <= 1e-14 * 1.0
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ModelError):
        Grid(2)


def test_for_teeth_is_admissible():
    for k in range(2, 7):
        g = Grid.for_teeth(k)
        assert g.n >= 2001 and (g.n - 1) % (2 * k) == 0


def test_gridfn_rejects_bad_values():
    g = Grid(11)
    with pytest.raises(ModelError):
        GridFn(g, np.ones(10))
    with pytest.raises(ModelError):
        GridFn(g, np.full(11, np.nan))


def test_symmetric_tooth_is_mirror_symmetric():
    g = Grid.for_teeth(2)
    pot = make_smoothed_sawtooth(2, 0.25, 1.0, g)
    assert np.max(np.abs(pot.values - pot.values[::-1])) <= 1e-12


def test_sawtooth_monotone_between_extrema():
    g = Grid.for_teeth(2)
    pot = make_smoothed_sawtooth(2, 0.1, 1.0, g)
    d = np.diff(pot.values)
    m = g.period_cells(2)
    ja = pot.a_index
    for i in range(2):
        assert np.all(d[i * m : i * m + ja] < 0)
        assert np.all(d[i * m + ja : (i + 1) * m] > 0)
    slope = pot.slope()
    assert np.all(slope[pot.extrema_indices()] == 0.0)


def test_sawtooth_extrema_locations():
    g = Grid.for_teeth(3)
    pot = make_smoothed_sawtooth(3, 0.2, 2.0, g)
    assert np.allclose(pot.maxima(), [0, 1 / 3, 2 / 3, 1])
    assert np.allclose(pot.minima(), pot.a + np.arange(3) / 3)
    assert np.all(pot.values[g.nodes.searchsorted(pot.maxima() - 1e-12)] == 2.0)


def test_sawtooth_periodic():
    g = Grid.for_teeth(3)
    pot = make_smoothed_sawtooth(3, 0.2, 2.0, g)
    m = g.period_cells(3)
    assert np.max(np.abs(pot.values[:-m] - pot.values[m:])) <= 1e-12
    assert periodicity_residual(pot.samples, 3) <= 1e-10


@pytest.mark.parametrize("a", [0.0, 0.5, 0.6, -0.1])
def test_sawtooth_rejects_bad_offset(a):
    with pytest.raises(ModelError, match="a="):
        make_smoothed_sawtooth(2, a, 1.0, Grid.for_teeth(2))


def test_sawtooth_rejects_short_grid():
    with pytest.raises(ModelError):
        make_smoothed_sawtooth(2, 0.2, 1.0, Grid(2001, 0.0, 0.5))


def test_peaked_rate_mass():
    g = Grid.for_teeth(2)
    nu = make_peaked_rate(2, 0.3, 0.01, 0.01, 1.0, g)
    excess = well_integrals(GridFn(g, nu.values - 0.01), 2)
    assert np.all(np.abs(excess - 1.0) <= 0.02)


def test_peaked_rate_argmax():
    g = Grid.for_teeth(2)
    nu = make_peaked_rate(2, 0.15, 0.005, 0.01, 1.0, g)
    m = g.period_cells(2)
    j = int(np.argmax(nu.values[: m + 1]))
    assert abs(g.nodes[j] - 0.15) <= g.h


def test_wide_bump_approaches_symmetric_mean():
    g = Grid.for_teeth(2)
    m = g.period_cells(2)
    errs = []
    for w in (0.05, 0.5, 5.0):
        nu = make_peaked_rate(2, 0.1, w, 0.1, 1.0, g)
        errs.append(abs(diffusive_mean(nu.samples.restrict(0, m)).s - 0.25))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


@pytest.mark.parametrize("kw", [dict(width=0), dict(base=0), dict(mass=-1)])
def test_peaked_rate_rejects_nonpositive(kw):
    args = dict(k=2, s_star=0.3, width=0.01, base=0.01, mass=1.0, grid=Grid.for_teeth(2))
    args.update(kw)
    with pytest.raises(ModelError):
        make_peaked_rate(**args)


def test_well_integrals_examples():
    g = Grid(2001)
    assert np.allclose(well_integrals(GridFn(g, np.ones(g.n)), 4), 0.25, atol=1e-15)
    assert np.allclose(well_integrals(GridFn(g, g.nodes), 2), [0.125, 0.375], atol=1e-15)
    pot = make_smoothed_sawtooth(2, 0.15, 1.0, g)
    w = well_integrals(pot.samples, 2)
    assert w[0] == pytest.approx(w[1], abs=1e-14)


def test_well_integrals_rejects_misaligned_grid():
    with pytest.raises(ModelError):
        well_integrals(GridFn(Grid(10), np.ones(10)), 2)


def test_params_validation():
    g = Grid.for_teeth(2)
    pot = make_smoothed_sawtooth(2, 0.15, 1.0, g)
    nu = make_constant_rate(1.0, 2, g)
    with pytest.raises(ModelError, match="sigma"):
        RatchetParams(0.0, 1.0, 1.0, pot, nu, nu)
    other = make_constant_rate(1.0, 2, Grid.for_teeth(2, 4001))
    with pytest.raises(ModelError, match="grid"):
        RatchetParams(0.1, 1.0, 1.0, pot, nu, other)
    with pytest.raises(ModelError, match="period"):
        RatchetParams(0.1, 1.0, 1.0, pot, nu, make_constant_rate(1.0, 4, g))


def test_reflected_params_mirror_everything(transport):
    r = transport.reflected()
    assert r.a == pytest.approx(0.5 - transport.a)
    assert np.array_equal(r.potential.values, transport.potential.values[::-1])
    assert np.array_equal(r.nu.values, transport.nu.values[::-1])
    r.potential.check()


def test_smooth_rate_symmetric_phase():
    g = Grid.for_teeth(2)
    nu = make_smooth_rate(2, 1.0, 0.5, 0.25, g)
    assert np.max(np.abs(nu.values - nu.values[::-1])) <= 1e-12
    with pytest.raises(ModelError):
        make_smooth_rate(2, 1.0, 1.5, 0.0, g)


def test_drift_accessor(transport):
    assert np.allclose(transport.b, transport.potential.slope() / transport.eta.values)
