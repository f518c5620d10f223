import numpy as np
import pytest
from scipy.special import erf

from sldg_vlasov.driver import (
    LANDAU_RATE_K05,
    SimConfig,
    Simulation,
    fit_damping_rate,
    moments,
    run,
    sample_initial,
    velocity_dof_coords,
    velocity_dof_weights,
)


def small_config(**kw):
    base = dict(dim=1, n_base=16, levels=0, degree=2, n_x=16, n_steps=5)
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dim=2).validate()
    with pytest.raises(ValueError):
        SimConfig(n_base=1).validate()
    with pytest.raises(ValueError):
        SimConfig(dt=0.0).validate()
    with pytest.raises(ValueError):
        SimConfig(bc="reflecting").validate()
    with pytest.raises(ValueError):
        SimConfig(workers=0).validate()
    assert SimConfig().validate().length == pytest.approx(4 * np.pi)


def test_initial_value_at_origin():
    sim = Simulation(SimConfig(dim=3, n_base=4, levels=1, degree=3, n_x=8, n_steps=1))
    iv = np.nonzero((sim.vcoords == 0.0).all(axis=1))[0]
    assert iv.size > 0
    ix = np.nonzero(sim.xgrid.dof_coords == 0.0)[0]
    expect = (2 * np.pi) ** -1.5 * 1.01
    np.testing.assert_allclose(sim.f[np.ix_(iv, ix)], expect, rtol=1e-14)


def test_initial_unperturbed_x_independent():
    sim = Simulation(small_config(perturbation=0.0))
    assert np.abs(np.diff(sim.f, axis=1)).max() == 0.0


def test_initial_nonnegative():
    sim = Simulation(small_config())
    assert (sim.f >= 0).all()


def test_initial_mass_matches_truncated_maxwellian():
    # m0 = L_x * (truncated Maxwellian mass)^dv, pinned by the erf oracle.
    sim = Simulation(SimConfig(dim=3, n_base=8, levels=0, degree=5, n_x=8, n_steps=1))
    m0, m1, m2 = moments(sim.f, sim.vweights, sim.vcoords, sim.xgrid.dof_weights)
    expect = sim.config.length * erf(6.0 / np.sqrt(2.0)) ** 3
    assert abs(m0 - expect) / expect <= 1e-5
    assert abs(m0 - 4 * np.pi) / (4 * np.pi) <= 1e-5
    assert abs(m1) <= 1e-12 * m0


def test_moments_zero_field():
    sim = Simulation(small_config())
    z = np.zeros_like(sim.f)
    assert moments(z, sim.vweights, sim.vcoords, sim.xgrid.dof_weights) == (0.0, 0.0, 0.0)


def test_unperturbed_state_is_fixed_point():
    cfg = small_config(perturbation=0.0, n_steps=3)
    sim = Simulation(cfg)
    rec0 = sim.diagnostics(sim.field_solve())
    assert rec0.e_max <= 1e-6  # quadrature noise only
    for _ in range(3):
        rec = sim.step()
    assert abs(rec.m0 - rec0.m0) <= 1e-12 * abs(rec0.m0)
    assert abs(rec.m2 - rec0.m2) <= 1e-12 * abs(rec0.m2)


def test_vanishing_dt_regression():
    cfg = small_config(dt=1e-12, n_steps=1)
    sim = Simulation(cfg)
    before = sim.f.copy()
    sim.step()
    assert np.abs(sim.f - before).max() <= 1e-10


def test_mass_and_momentum_invariants_per_step():
    cfg = small_config(n_steps=10, bc="periodic")
    sim = Simulation(cfg)
    m0_prev = None
    for _ in range(10):
        rec = sim.step()
        if m0_prev is not None:
            assert abs(rec.m0 - m0_prev) <= 1e-12 * abs(m0_prev)
        m0_prev = rec.m0
        assert abs(rec.m1) <= 1e-10


def test_fit_synthetic_envelope():
    t = np.arange(0.0, 20.0 + 1e-12, 0.1)
    series = np.exp(-0.1533 * t) * np.abs(np.cos(1.4156 * t))
    fit = fit_damping_rate(t, series)
    assert fit.ok
    assert abs(fit.rate + 0.1533) <= 1e-3


def test_fit_monotone_insufficient():
    t = np.arange(0.0, 5.0, 0.1)
    fit = fit_damping_rate(t, np.exp(-t))
    assert not fit.ok
    assert fit.rate is None
    assert fit.n_peaks < 2


def test_fit_two_peaks_exact_line():
    t = np.arange(11, dtype=float)
    y = np.full(11, 0.1)
    y[3], y[7] = 2.0, 1.0  # two isolated peaks
    fit = fit_damping_rate(t, y)
    assert fit.ok and fit.n_peaks == 2
    expect = (np.log(1.0) - np.log(2.0)) / (7.0 - 3.0)
    assert abs(fit.rate - expect) <= 1e-13


def test_fit_plateau_breaks_to_earlier_index():
    t = np.arange(8, dtype=float)
    y = np.array([0.0, 1.0, 1.0, 0.5, 0.8, 0.2, 0.1, 0.0])
    fit = fit_damping_rate(t, y)
    np.testing.assert_array_equal(fit.peak_times[:1], [1.0])


def test_fit_short_series():
    fit = fit_damping_rate([0.0, 1.0], [1.0, 2.0])
    assert not fit.ok and fit.n_peaks == 0


def test_run_records_and_initial_field():
    cfg = small_config(n_steps=4, n_x=64)  # default x resolution for the field
    res = run(cfg)
    assert len(res.records) == 5
    assert res.records[0].t == 0.0
    # E_max(0) = perturbation / wave_number up to FE error
    assert abs(res.records[0].e_max - 0.02) <= 1e-3 * 0.02
    for rec in res.records:
        assert abs(rec.e_total - (0.5 * rec.m2 + rec.e_field)) <= 1e-15 * abs(rec.e_total)


def test_run_deterministic_across_workers():
    cfg = small_config(n_steps=3)
    a = run(cfg)
    b = run(small_config(n_steps=3, workers=3))
    for ra, rb in zip(a.records, b.records):
        assert ra == rb


def test_run_nonfinite_aborts_with_step_index():
    cfg = small_config(n_steps=2)
    with np.errstate(invalid="ignore"):
        sim = Simulation(cfg)
        sim.f[:] = np.inf
        with pytest.raises(RuntimeError, match="step 0"):
            sim.run()
        sim = Simulation(cfg)
        sim.step()  # healthy first step
        sim.f[:] = np.nan
        with pytest.raises(RuntimeError, match="step"):
            sim.run()


def test_run_1v_benchmark_smoke():
    # Reduced resolution keeps this quick; the rate is still in the right
    # neighborhood even though the acceptance run uses 64 cells.
    cfg = SimConfig(dim=1, n_base=32, levels=0, degree=3, n_steps=150)
    res = run(cfg)
    assert res.fit.ok
    assert abs((res.fit.rate - LANDAU_RATE_K05) / LANDAU_RATE_K05) <= 0.2
