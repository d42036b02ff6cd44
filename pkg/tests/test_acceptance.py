"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the long experiment
criterion is marked ``slow``.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest
from oracles import best_price_revenue, random_reserve_brute

from bundlerev.approxmech import evaluate_decision, run_approx
from bundlerev.cli import main as cli_main
from bundlerev.corpus import iid_bidder_corpus, joint_corpus, scheme_corpus, single_buyer_corpus
from bundlerev.coretail import (
    build_split,
    core_decomposition_bound,
    core_variance_checks,
    ly1_check,
    ly2_checks,
    tail_bound_check,
)
from bundlerev.distcore import DiscreteDist, MarketInstance, uniform_grid
from bundlerev.gaps import gen_lb_cor, lb_cor_structure, run_gap_experiment
from bundlerev.optrev import rev, rev_lp
from bundlerev.pricing import (
    brev_zero,
    bundle_combine,
    check_brendan,
    check_split,
    exact_random_reserve,
    random_reserve_check,
)
from bundlerev.reductions import check_cor_bound, check_reduction_ratios
from bundlerev.simplerev import brev, brev_price, srev
from bundlerev.singleitem import optimal_item_rev

CORPUS_SEED = 2024
CORPUS_SIZE = 200


def _line(capsys, k: int, passed: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nCRITERION {k}: {'PASS' if passed else 'FAIL'} | {detail}")


@lru_cache(maxsize=1)
def _corpus():
    return single_buyer_corpus(CORPUS_SEED, CORPUS_SIZE, max_items=3, max_support=3)


@lru_cache(maxsize=None)
def _rev_of(idx: int) -> float:
    return rev(_corpus()[idx])


def _drop_null_items(inst: MarketInstance) -> MarketInstance:
    """Remove items valued 0 with certainty; adaptive thresholds are undefined for them and they carry no revenue."""
    keep = [d for d in inst.buyer_items(0) if d.max_value > 0]
    if not keep or len(keep) == inst.n_items:
        return inst
    return MarketInstance.independent(keep)


def test_criterion_1_ddt(capsys):
    t0 = time.perf_counter()
    inst = MarketInstance.independent(
        [DiscreteDist.from_atoms([1, 2], [0.5, 0.5]), DiscreteDist.from_atoms([1, 3], [0.5, 0.5])]
    )
    s, b = srev(inst).value, brev(inst).value
    r = rev_lp(inst).objective
    ratio = r / max(s, b)
    elapsed = time.perf_counter() - t0
    ok = s == 2.5 and b == 2.25 and abs(r - 2.625) <= 1e-6 and abs(ratio - 1.05) <= 1e-6 and elapsed < 1.0
    _line(capsys, 1, ok, f"srev={s} brev={b} rev={r:.9f} ratio={ratio:.9f} time={elapsed:.2f}s")
    assert ok


def test_criterion_2_uniform_items(capsys):
    t0 = time.perf_counter()
    inst = MarketInstance.independent([uniform_grid(0, 1, 200)] * 16)
    s = srev(inst).value
    price, bundle_rev = brev_price(inst)
    elapsed = time.perf_counter() - t0
    ok = abs(s - 4.0) <= 0.05 and bundle_rev >= 6.4 and elapsed < 10
    _line(
        capsys,
        2,
        ok,
        f"srev={s:.4f} bundle price={price:.4f} bundle revenue={bundle_rev:.4f} (needs >= 6.4) time={elapsed:.2f}s",
    )
    assert abs(s - 4.0) <= 0.05
    assert bundle_rev >= 6.4


def test_criterion_3_main_bounds(capsys):
    t0 = time.perf_counter()
    worst_six = worst_log = 0.0
    failures = 0
    for idx, inst in enumerate(_corpus()):
        r = _rev_of(idx)
        s, b = srev(inst).value, brev(inst).value
        n = inst.n_items
        failures += not (r <= 6 * max(s, b) + 1e-6 and r <= (math.log(n) + 3) * s + 1e-6)
        if s > 0:
            worst_six = max(worst_six, r / max(s, b))
            worst_log = max(worst_log, r / ((math.log(n) + 3) * s))
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 120
    _line(
        capsys,
        3,
        ok,
        f"{CORPUS_SIZE} instances, failures={failures}, max rev/max(srev,brev)={worst_six:.4f}, "
        f"max rev/((ln n+3) srev)={worst_log:.4f}, time={elapsed:.1f}s",
    )
    assert ok


def test_criterion_4_core_decomposition(capsys):
    failures, dropped, null = [], 0, 0
    for idx, inst in enumerate(_corpus()):
        if all(d.max_value == 0 for d in inst.buyer_items(0)):
            # every value is 0: all revenues vanish and there is nothing to split
            null += 1
            if abs(_rev_of(idx)) > 1e-9:
                failures.append((idx, "nonzero revenue on an all-zero instance"))
            continue
        reduced = _drop_null_items(inst)
        if reduced is not inst:
            dropped += 1
            assert rev(reduced) == pytest.approx(_rev_of(idx), abs=1e-6)
        try:
            split = build_split(reduced, "adaptive", c=1.0)
        except Exception as e:  # noqa: BLE001 - any error is a failure of this criterion
            failures.append((idx, f"split: {e}"))
            continue
        checks = {
            "LY1": ly1_check(split),
            "LY2": ly2_checks(split),
            "core-decomposition": core_decomposition_bound(split),
            "tail<=2srev": tail_bound_check(split),
            "core-variance": core_variance_checks(split),
        }
        if checks["tail<=2srev"]["factor"] != 2.0:
            failures.append((idx, "tail factor is not 2"))
        failures += [(idx, name) for name, rep in checks.items() if not rep.passed]
    ok = not failures
    _line(
        capsys,
        4,
        ok,
        f"{CORPUS_SIZE} instances ({dropped} with always-zero items removed, {null} all-zero), failures={len(failures)} {failures[:3]}",
    )
    assert ok


def test_criterion_5_approximation_algorithm(capsys):
    eps = 0.1
    failures = 0
    worst = 0.0
    bundles = 0
    for idx, inst in enumerate(_corpus()):
        full = _rev_of(idx)
        for seed in range(20):
            dec = run_approx(inst, eps, seed=seed)
            rep = evaluate_decision(dec, inst, rev_oracle=lambda _joint, full=full: full)
            failures += not rep.passed
            bundles += dec.choice == "bundle"
            worst = max(worst, rep["ratio"] if rep["chosen_revenue"] > 0 else 0.0)
    ok = failures == 0
    _line(
        capsys,
        5,
        ok,
        f"{CORPUS_SIZE} instances x 20 seeds, failures={failures}, bundle choices={bundles}, "
        f"max rev/chosen={worst:.4f} (limit {6 * (1 + eps):.2f})",
    )
    assert ok


def _enumerable_iid_instances():
    """Every i.i.d. bidder set m <= 3 with support <= 4 from a fixed corpus, plus U{1,2} with two bidders."""
    u12 = DiscreteDist.from_atoms([1, 2], [0.5, 0.5])
    return [[u12, u12]] + iid_bidder_corpus(CORPUS_SEED, 150, max_bidders=3, max_support=4)


def test_criterion_6_pricing(capsys):
    t0 = time.perf_counter()
    fails = {"reserve": 0, "split": 0, "bundle": 0, "brendan": 0}
    cases = {"reserve": 0, "split": 0, "bundle": 0, "brendan": 0, "brendan_vacuous": 0}
    bidder_sets = _enumerable_iid_instances()
    u12_b0 = brev_zero(bidder_sets[0])
    u12_rev = exact_random_reserve(bidder_sets[0])
    u12_ok = abs(u12_b0 - 1.25) <= 1e-12 and abs(u12_rev - random_reserve_brute([([1, 2], [0.5, 0.5])] * 2)) <= 1e-12
    for bidders in bidder_sets:
        cases["reserve"] += 1
        fails["reserve"] += not random_reserve_check(bidders).passed
        rep = check_split(bidders)
        cases["split"] += rep["profiles"]
        fails["split"] += rep["violations"]
    for dists, schemes in scheme_corpus(CORPUS_SEED, 50, c1=0.5):
        cases["bundle"] += 1
        _, _, rep = bundle_combine(schemes, dists, 0.5)
        fails["bundle"] += not rep.passed
        for s in schemes:
            rep = check_brendan(dists, s.items)
            if rep["vacuous"]:
                cases["brendan_vacuous"] += 1
                continue
            cases["brendan"] += len(rep["cases"])
            fails["brendan"] += sum(not c["passed"] for c in rep["cases"])
    for inst in _corpus():
        items = inst.buyer_items(0)
        if sum_of_max(items) == 0:
            continue
        rep = check_brendan(items, range(len(items)))
        if rep["vacuous"]:
            cases["brendan_vacuous"] += 1
            continue
        cases["brendan"] += len(rep["cases"])
        fails["brendan"] += sum(not c["passed"] for c in rep["cases"])
    elapsed = time.perf_counter() - t0
    ok = u12_ok and not any(fails.values()) and elapsed < 120
    _line(
        capsys,
        6,
        ok,
        f"U{{1,2}} m=2: BRev0={u12_b0} reserve revenue={u12_rev:.4f}; cases={cases} failures={fails} time={elapsed:.1f}s",
    )
    assert ok


def sum_of_max(items) -> float:
    return float(sum(d.max_value for d in items))


@pytest.mark.slow
def test_criterion_7_gap_trends(capsys):
    t0 = time.perf_counter()
    ns = [16, 64, 256]
    notes = []
    ok = True
    for kind in ("prev_max", "cor"):
        rows = run_gap_experiment(kind, ns, seed=7)
        ratios = [r.ratio for r in rows]
        inc = all(a < b for a, b in zip(ratios, ratios[1:]))
        ok &= inc
        notes.append(f"{kind} ratios={[round(float(x), 4) for x in ratios]}")
    rows = run_gap_experiment("many_iid", ns, seed=7, trials=10**5)
    ratios = [r.ratio for r in rows]
    ses = [r.ratio_se for r in rows]
    sep = all(b - a > 3 * math.hypot(sa, sb) for a, b, sa, sb in zip(ratios, ratios[1:], ses, ses[1:]))
    ok &= sep
    notes.append(f"many_iid seq/srev={[round(float(x), 4) for x in ratios]} se={[f'{s:.1e}' for s in ses]}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    _line(capsys, 7, ok, "; ".join(notes) + f"; time={elapsed:.0f}s")
    assert ok


def test_criterion_8_reductions(capsys):
    ratio_fail = 0
    for joint in joint_corpus(CORPUS_SEED, 100, max_items=3):
        ratio_fail += not check_reduction_ratios(joint).passed
    bound_fail = 0
    worst = 0.0
    tested = 0
    for joint in joint_corpus(CORPUS_SEED + 1, 100, max_items=3, min_items=2):
        rep = check_cor_bound(joint)
        bound_fail += not rep.passed
        worst = max(worst, rep["brev"] / rep["bound"] if rep["bound"] > 0 else 0.0)
        tested += 1
    lb16 = gen_lb_cor(16)
    rep16 = check_cor_bound(lb16)
    bound_fail += not rep16.passed
    tested += 1
    # larger constructions: the coarsened grand-bundle revenue is an upper bound on BRev
    structured = []
    for n in (64, 256):
        st = lb_cor_structure(n)
        b, s = st.brev().value, st.srev().value
        structured.append((n, b, 5 * math.log(n) * s))
        bound_fail += not b <= 5 * math.log(n) * s
        tested += 1
    ok = ratio_fail == 0 and bound_fail == 0
    _line(
        capsys,
        8,
        ok,
        f"ratio failures={ratio_fail}/100, bound failures={bound_fail}/{tested}, "
        f"lb_cor(16) brev={rep16['brev']:.4f} bound={rep16['bound']:.4f}, "
        + ", ".join(f"lb_cor({n}) brev<={b:.3f} bound={x:.3f}" for n, b, x in structured),
    )
    assert ok


def test_criterion_9_oracles_and_determinism(capsys, tmp_path):
    rng = np.random.default_rng(CORPUS_SEED)
    worst_lp = worst_brute = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 6))
        values = rng.choice(np.arange(0, 11), size=k, replace=False).astype(float)
        probs = rng.dirichlet(np.ones(k))
        d = DiscreteDist.from_atoms(values, probs)
        mine = optimal_item_rev([d]).value
        worst_lp = max(worst_lp, abs(mine - rev(d)))
        worst_brute = max(worst_brute, abs(mine - best_price_revenue(d.support.tolist(), d.probs.tolist())))
    outputs = []
    for run in range(2):
        path = tmp_path / f"run{run}.csv"
        code = cli_main(["gaps", "--kind", "many_iid", "--ns", "16,64", "--seed", "11", "--trials", "4000", "--out", str(path)])
        assert code == 0
        outputs.append(path.read_bytes())
    strip = [b"\n".join(o.split(b"\n")[1:]) for o in outputs]
    same = strip[0] == strip[1] and outputs[0].startswith(b"# generated ")
    ok = worst_lp <= 1e-6 and worst_brute <= 1e-12 and same
    _line(
        capsys,
        9,
        ok,
        f"max |myerson - lp|={worst_lp:.2e}, max |myerson - brute|={worst_brute:.2e}, csv identical after header={same}",
    )
    assert ok
