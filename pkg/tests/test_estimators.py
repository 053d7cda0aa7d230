import numpy as np
import pytest

from ivmediation.errors import AllReplicatesFailed, EmptyCell, SingularDesign, WeakInstrument
from ivmediation.estimators import (
    bootstrap,
    estimate_effects_iv,
    estimate_effects_si,
    estimate_theta_iv,
)
from ivmediation.oracle import (
    gap_report,
    iv_mediation_estimands,
    population_theta_iv,
    si_probability_limits,
    true_effect_set,
)
from ivmediation.population import build_paper_counterexample
from ivmediation.sampler import Dataset, draw

from conftest import single_stratum

THETA_KEYS = ("alpha0", "alpha1", "beta0", "beta1", "pi0", "pi1", "tau0", "tau1")


def _rows(rows):
    a = np.array(rows, dtype=float)
    return Dataset(a[:, 0].astype(np.int8), a[:, 1].astype(np.int8), a[:, 2].astype(np.int8), a[:, 3])


@pytest.mark.parametrize("n", [40, 1000])
@pytest.mark.parametrize("m", [((0, 1), (0, 1)), ((1, 0), (0, 1)), ((0, 1), (1, 0))])
def test_noiseless_single_stratum_is_exact(n, m):
    pop = single_stratum(m, ((0.3, 1.7), (2.2, -0.4)), p_z=0.3, p_d=0.6)
    ds = draw(pop, n, 4)
    theta = estimate_theta_iv(ds).to_dict()
    truth = population_theta_iv(pop).to_dict()
    for k in THETA_KEYS:
        assert theta[k] == pytest.approx(truth[k], rel=1e-12, abs=1e-12)


def test_noiseless_single_stratum_effects_match_oracle():
    pop = single_stratum(((0, 1), (1, 0)), ((0.3, 1.7), (2.2, -0.4)), p_z=0.5)
    ds = draw(pop, 64, 5)
    est = estimate_effects_iv(ds)
    # plug-in uses the sample share of Z, so compare with the oracle at that share
    at_share = iv_mediation_estimands(population_theta_iv(pop), est.e_z_hat)
    for e in ("nie0", "nie1", "nde0", "nde1"):
        assert est.effects[e] == pytest.approx(at_share.get(e), rel=1e-12, abs=1e-12)
    g = gap_report(pop)
    assert all(abs(v) < 1e-12 for v in g.gaps.values())


def test_pop_a_theta_large_sample(pop_a_noiseless):
    ds = draw(pop_a_noiseless, 10**6, 1)
    theta = estimate_theta_iv(ds).to_dict()
    truth = population_theta_iv(pop_a_noiseless).to_dict()
    for k in THETA_KEYS:
        assert abs(theta[k] - truth[k]) < 0.02, k


def test_pop_a_nie0_iv_large_sample(pop_a):
    est = estimate_effects_iv(draw(pop_a, 10**6, 1))
    assert abs(est.effects["nie0"] - 1.0) < 0.03
    assert sum(est.cell_counts.values()) == 10**6
    assert 0 <= est.e_z_hat <= 1
    assert est.first_stage[0] == pytest.approx(0.5, abs=0.01)


def test_counterexample_large_sample():
    pop = build_paper_counterexample(1.0).with_noise(1.0)
    ds = draw(pop, 10**6, 2)
    est = estimate_effects_iv(ds, strict=False)
    assert abs(est.effects["nie0"]) < 0.03
    assert est.effects["nie1"] is None
    with pytest.raises(WeakInstrument) as info:
        estimate_effects_iv(ds)
    assert info.value.d == 1


def test_constant_instrument_is_empty_cell(pop_a):
    ds = draw(pop_a, 500, 1)
    ds = Dataset(ds.d, np.zeros_like(ds.z), ds.m, ds.y)
    with pytest.raises(EmptyCell) as info:
        estimate_theta_iv(ds)
    assert info.value.z == 1


def test_weak_threshold_configurable():
    ds = _rows([(0, 0, 0, 1.0), (0, 1, 1, 2.0), (1, 0, 0, 0.0), (1, 1, 1, 3.0),
                (0, 0, 1, 2.0), (0, 1, 0, 1.0)])
    with pytest.raises(WeakInstrument):
        estimate_theta_iv(ds)
    # arm D=1 has a unit first stage
    assert estimate_theta_iv(ds, strict=False).alpha1 == 3.0
    with pytest.raises(WeakInstrument):
        estimate_theta_iv(_rows([(0, 0, 0, 0), (0, 1, 1, 1), (1, 0, 0, 0), (1, 1, 1, 1)]),
                          weak_threshold=2.0)


def test_si_matches_limits_without_confounding(unconfounded):
    est = estimate_effects_si(draw(unconfounded, 400_000, 8))
    truth = true_effect_set(unconfounded)
    for e in ("nie0", "nie1", "nde0", "nde1"):
        assert est.effects[e] == pytest.approx(getattr(truth, e), abs=0.02)


def test_si_biased_on_pop_a(pop_a):
    est = estimate_effects_si(draw(pop_a, 10**6, 1))
    plim = si_probability_limits(pop_a)
    for k in ("a0", "a1", "b0", "b1", "b2", "b3"):
        assert getattr(est, k) == pytest.approx(plim[k], abs=0.01)
    assert est.effects["nie0"] == pytest.approx(2 / 3, abs=0.01)
    assert est.effects["nie0"] - 0.5 > 0.15


def test_si_effect_assembly():
    # saturated model: coefficients are cell-mean contrasts
    ds = _rows([(0, 0, 0, 1.0), (0, 1, 1, 3.0), (0, 0, 0, 1.0), (1, 0, 0, 2.0), (1, 1, 1, 7.0), (1, 0, 1, 7.0)])
    est = estimate_effects_si(ds)
    a0, a1 = 1 / 3, 2 / 3 - 1 / 3
    b0, b1, b2, b3 = 1.0, 1.0, 2.0, 3.0
    assert (est.a0, est.a1) == pytest.approx((a0, a1))
    assert (est.b0, est.b1, est.b2, est.b3) == pytest.approx((b0, b1, b2, b3))
    assert est.effects["nie0"] == pytest.approx(b2 * a1)
    assert est.effects["nie1"] == pytest.approx((b2 + b3) * a1)
    assert est.effects["nde0"] == pytest.approx(b1 + b3 * a0)
    assert est.effects["nde1"] == pytest.approx(b1 + b3 * (a0 + a1))


def test_si_singular_when_mediator_constant_in_arm():
    ds = _rows([(0, 0, 0, 1.0), (0, 1, 0, 3.0), (1, 0, 0, 2.0), (1, 1, 1, 7.0)])
    with pytest.raises(SingularDesign):
        estimate_effects_si(ds)


def test_bootstrap_single_replicate_is_degenerate(pop_a):
    res = bootstrap(draw(pop_a, 2000, 1), "iv", reps=1, seed=0)
    for lo, hi in res.intervals.values():
        assert lo == hi


def test_bootstrap_covers_estimand(pop_a):
    res = bootstrap(draw(pop_a, 10**5, 3), "iv", reps=400, seed=3)
    lo, hi = res.intervals["nie0"]
    assert lo <= 1.0 <= hi
    assert res.failures == 0


def test_bootstrap_deterministic(pop_a):
    ds = draw(pop_a, 3000, 1)
    assert bootstrap(ds, "si", reps=30, seed=9) == bootstrap(ds, "si", reps=30, seed=9)
    assert bootstrap(ds, "si", reps=30, seed=9) != bootstrap(ds, "si", reps=30, seed=10)


def test_bootstrap_counts_failures():
    ds = _rows([(0, 0, 0, 0.0), (0, 1, 1, 1.0), (1, 0, 0, 2.0), (1, 1, 1, 4.0)])
    res = bootstrap(ds, "iv", reps=100, seed=1)
    assert res.failures >= 80
    assert res.failures < 100


def test_bootstrap_all_failed():
    ds = _rows([(0, 0, 0, 0.0), (1, 0, 1, 1.0), (0, 0, 1, 2.0)])
    with pytest.raises(AllReplicatesFailed):
        bootstrap(ds, "iv", reps=20, seed=1)


def test_bootstrap_rejects_zero_reps(pop_a):
    with pytest.raises(ValueError):
        bootstrap(draw(pop_a, 100, 1), reps=0)
