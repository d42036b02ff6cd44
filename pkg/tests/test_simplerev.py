
import numpy as np
import pytest
from oracles import bundle_revenue_brute, prev_brute

from bundlerev.corpus import single_buyer_corpus
from bundlerev.distcore import DiscreteDist, MarketInstance, point_mass, uniform_grid
from bundlerev.errors import SizeError, ValidationError
from bundlerev.simplerev import (
    PartitionSpec,
    brev,
    brev_price,
    prev_exact,
    prev_on,
    restricted_growth_strings,
    srev,
)


def _items(inst):
    return [(d.support.tolist(), d.probs.tolist()) for d in inst.buyer_items(0)]


def test_ddt_values(ddt):
    assert srev(ddt).value == 2.5
    assert brev(ddt).value == 2.25
    assert brev_price(ddt) == (3.0, 2.25)
    p, part = prev_exact(ddt)
    assert p.value == 2.5 and part == PartitionSpec.singletons(2)


def test_uniform_items_srev():
    for n in (1, 4, 16):
        inst = MarketInstance.independent([uniform_grid(0, 1, 200)] * n)
        assert srev(inst).value == pytest.approx(n * 0.25, abs=n * 0.01)


def test_single_item_collapse(u13):
    inst = MarketInstance.independent([u13])
    assert srev(inst).value == brev(inst).value == prev_exact(inst)[0].value == 1.5


def test_point_masses_sum():
    inst = MarketInstance.independent([point_mass(2.0), point_mass(3.5)])
    assert brev(inst).value == 5.5
    assert prev_exact(inst)[0].value == 5.5


@pytest.mark.parametrize("n,bell", [(0, 1), (1, 1), (3, 5), (5, 52), (7, 877)])
def test_rgs_counts(n, bell):
    rgs = list(restricted_growth_strings(n))
    assert len(rgs) == bell == len(set(rgs))
    assert rgs == sorted(rgs)


def test_partition_spec_validation():
    with pytest.raises(ValidationError):
        PartitionSpec(((0, 1), (1,)))
    with pytest.raises(ValidationError):
        PartitionSpec(((0,), (2,)))
    with pytest.raises(ValidationError):
        PartitionSpec(((0,), ()))
    assert PartitionSpec(((1,), (0,))).blocks == ((0,), (1,))


def test_prev_matches_brute_force():
    for inst in single_buyer_corpus(21, 40, max_items=4, max_support=2):
        items = _items(inst)
        assert prev_exact(inst)[0].value == pytest.approx(prev_brute(items), abs=1e-12)
        assert brev(inst).value == pytest.approx(bundle_revenue_brute(items, range(len(items))), abs=1e-12)


def test_prev_dominates_extremes():
    for inst in single_buyer_corpus(22, 40):
        p = prev_exact(inst)[0].value
        assert p >= max(srev(inst).value, brev(inst).value) - 1e-12


def test_prev_tie_breaks_toward_more_blocks():
    # two point masses: every partition earns the same, so singletons win the tie
    inst = MarketInstance.independent([point_mass(1.0), point_mass(1.0), point_mass(1.0)])
    _, part = prev_exact(inst)
    assert part == PartitionSpec.singletons(3)


def test_prev_cap_error_suggests_prev_on():
    inst = MarketInstance.independent([point_mass(1.0)] * 11)
    with pytest.raises(SizeError, match="prev_on"):
        prev_exact(inst)
    assert prev_on(inst, PartitionSpec.grand(11)).value == 11.0


def test_correlated_uses_marginals(ddt):
    joint = MarketInstance.correlated(ddt.to_joint())
    assert srev(joint).value == 2.5
    assert brev(joint).value == 2.25
    assert prev_exact(joint)[0].value == 2.5


def test_multi_buyer_bundles():
    d = DiscreteDist.from_atoms([0, 1], [0.5, 0.5])
    inst = MarketInstance.from_grid([[d, d]])
    assert srev(inst).value == pytest.approx(0.75)
    assert brev(inst).value == pytest.approx(0.75)


def test_monotone_under_raising_values():
    rng = np.random.default_rng(4)
    for inst in single_buyer_corpus(23, 30):
        raised = MarketInstance.independent(
            [DiscreteDist(d.support + rng.uniform(0, 1) * np.arange(1, d.size + 1), d.probs) for d in inst.buyer_items(0)]
        )
        assert srev(raised).value >= srev(inst).value - 1e-12
        assert brev(raised).value >= brev(inst).value - 1e-12


def test_prev_on_rejects_mismatched_partition(ddt):
    with pytest.raises(ValidationError):
        prev_on(ddt, PartitionSpec.singletons(3))
