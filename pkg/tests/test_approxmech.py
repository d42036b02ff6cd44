import math

import pytest

from bundlerev.approxmech import (
    PRICE_FRACTION,
    Q_MIN,
    SAMPLE_FLOOR,
    ApproxDecision,
    bundle_price,
    evaluate_decision,
    exact_sale_probability,
    run_approx,
    sample_count,
)
from bundlerev.corpus import single_buyer_corpus
from bundlerev.distcore import MarketInstance, er_truncated, point_mass, uniform_grid
from bundlerev.errors import ValidationError


def test_sample_count():
    assert sample_count(16, 0.1) == (math.ceil(math.log(16) / 0.01), False)
    assert sample_count(2, 0.5) == (SAMPLE_FLOOR, True)
    assert sample_count(1, 0.1) == (SAMPLE_FLOOR, True)


def test_bundle_price_ddt(ddt):
    s, p = bundle_price(ddt)
    assert s == 2.5
    # adaptive core at thresholds c*r = 2.5 has welfare 2.5
    assert p == pytest.approx(PRICE_FRACTION * 2.5)


def test_uniform_items_sell_separately():
    inst = MarketInstance.independent([uniform_grid(0, 1, 50)] * 16)
    d = run_approx(inst, 0.1, seed=0)
    assert d.p_star == pytest.approx(3.2)
    assert d.choice == "separate"
    assert d.est_revenue == pytest.approx(d.srev)


@pytest.mark.parametrize("n", [16, 64])
def test_equal_revenue_items_bundle(n):
    inst = MarketInstance.independent([er_truncated(n, grid="integer")] * n)
    d = run_approx(inst, 0.1, seed=0)
    assert d.choice == "bundle"
    assert d.q_hat >= Q_MIN
    assert d.p_star * exact_sale_probability(inst, d.p_star) > d.srev


def test_deterministic_per_seed(ddt):
    assert run_approx(ddt, 0.2, seed=5) == run_approx(ddt, 0.2, seed=5)


def test_rejects_bad_inputs(ddt):
    with pytest.raises(ValidationError):
        run_approx(ddt, 0.0)
    with pytest.raises(ValidationError):
        run_approx(MarketInstance.correlated(ddt.to_joint()), 0.1)
    with pytest.raises(ValidationError):
        ApproxDecision(1.0, 0.1, "bundle", 100, 0, 0.1, 2.0, 0.1, True)
    with pytest.raises(ValidationError):
        ApproxDecision(1.0, 0.1, "auction", 100, 0, 0.1, 2.0, 0.1, True)


def test_zero_revenue_instance_ties_to_bundle():
    # q_hat * p* = 0 >= srev = 0, so the literal rule picks the (worthless) bundle
    inst = MarketInstance.independent([point_mass(0.0)] * 2)
    d = run_approx(inst, 0.1)
    assert d.choice == "bundle" and d.p_star == 0.0 and d.est_revenue == 0.0


def test_ddt_sells_separately(ddt):
    d = run_approx(ddt, 0.1, seed=42)
    assert d.choice == "separate"
    assert d.p_star * exact_sale_probability(ddt, d.p_star) < 2.5


def test_single_item_sells_separately():
    inst = MarketInstance.independent([uniform_grid(0, 1, 20)])
    assert run_approx(inst, 0.1).choice == "separate"


def test_q_hat_accuracy_battery():
    inst = MarketInstance.independent([uniform_grid(0, 1, 50)] * 16)
    price = 8.0  # the mean bundle value, so the sale probability is near 1/2
    q = exact_sale_probability(inst, price)
    assert 0.2 < q < 0.8
    from bundlerev.sampling import sample_profiles

    n = sample_count(16, 0.1)[0]
    hits = 0
    for seed in range(100):
        draws = sample_profiles(inst.buyer_items(0), seed, n)
        q_hat = float((draws.sum(axis=1) >= price).mean())
        hits += abs(q_hat - q) <= 3 * math.sqrt(q * (1 - q) / n)
    assert hits >= 99


def test_evaluate_decision_small_corpus():
    for inst in single_buyer_corpus(51, 25):
        for seed in range(3):
            rep = evaluate_decision(run_approx(inst, 0.1, seed=seed), inst)
            assert rep.passed, rep.values
