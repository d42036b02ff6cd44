import numpy as np
import pytest

from bundlerev.corpus import joint_corpus
from bundlerev.distcore import JointDist, MarketInstance
from bundlerev.errors import PreconditionError, SizeError, ValidationError
from bundlerev.reductions import (
    brev_joint,
    check_cor_bound,
    check_reduction_ratios,
    lower_to_sum,
    pointmass_welfare_check,
    ratio,
    srev_joint,
    symmetrize,
    to_pointmass_in_sum,
)


def test_ddt_joint_values(ddt):
    joint = ddt.to_joint()
    assert srev_joint(joint) == 2.5
    assert brev_joint(joint) == (3.0, 2.25)
    assert ratio(joint) == pytest.approx(0.9)


def test_lower_to_sum():
    out = lower_to_sum(np.array([1.0, 5.0, 3.0]), 6.0)
    assert out.tolist() == [1.0, 2.0, 3.0]
    out = lower_to_sum(np.array([4.0, 4.0]), 5.0)
    assert out.tolist() == [1.0, 4.0]
    assert lower_to_sum(np.array([2.0, 1.0]), 3.0).tolist() == [2.0, 1.0]


def test_pointmass_in_sum_ddt(ddt):
    d1, d2, info = to_pointmass_in_sum(ddt)
    assert info == {"price": 3.0, "sale_prob": 0.75}
    assert np.allclose(d1.support.sum(axis=1), 3.0)
    # same bundle revenue at the same price
    assert brev_joint(d2)[1] == pytest.approx(2.25)
    assert brev_joint(d1) == pytest.approx((3.0, 3.0))


def test_pointmass_rows_dominated():
    for joint in joint_corpus(71, 40):
        _, d2, _ = to_pointmass_in_sum(joint)
        # rows are only ever lowered, so every marginal is first-order dominated
        for i in range(joint.n_items):
            lo, hi = d2.marginal(i), joint.marginal(i)
            assert all(lo.sf(x) <= hi.sf(x) + 1e-12 for x in np.union1d(lo.support, hi.support))
        assert srev_joint(d2) <= srev_joint(joint) + 1e-9


def test_pointmass_precondition():
    joint = JointDist.normalized([[1.0, 1.0]], [1.0])
    with pytest.raises(PreconditionError):
        to_pointmass_in_sum(joint, p=5.0)


def test_symmetrize_equalizes_marginals():
    for joint in joint_corpus(72, 20, max_items=3, min_items=2):
        sym = symmetrize(joint)
        first = sym.marginal(0)
        for i in range(1, sym.n_items):
            assert sym.marginal(i).allclose(first)
        assert brev_joint(sym)[1] == pytest.approx(brev_joint(joint)[1])
    with pytest.raises(SizeError):
        symmetrize(JointDist.normalized(np.ones((1, 7)), [1.0]))


def test_reduction_ratios_corpus():
    for joint in joint_corpus(73, 60, max_items=3):
        rep = check_reduction_ratios(joint)
        assert rep.passed, rep.values


def test_cor_bound_and_welfare_check():
    for joint in joint_corpus(74, 40, max_items=3, min_items=2):
        assert check_cor_bound(joint).passed
        d1, _, _ = to_pointmass_in_sum(joint)
        rep = pointmass_welfare_check(symmetrize(d1))
        assert rep.passed, rep.values
    with pytest.raises(PreconditionError):
        check_cor_bound(JointDist.normalized([[1.0]], [1.0]))


def test_welfare_check_requires_pointmass(ddt):
    with pytest.raises(PreconditionError):
        pointmass_welfare_check(ddt)


def test_rejects_multi_buyer():
    from bundlerev.distcore import point_mass

    with pytest.raises(ValidationError):
        ratio_input = MarketInstance.from_grid([[point_mass(1.0), point_mass(1.0)]])
        check_reduction_ratios(ratio_input)
