import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from itemfair.grouping import custom_scheme
from itemfair.metrics import (
    FairnessReport,
    NoGroupedItemsError,
    Slate,
    accuracy,
    dgu,
    evaluate,
    evaluate_indices,
    gh,
    gh_counts,
    gp,
    group_unfairness,
    load_reports_json,
    mgu,
    save_reports_csv,
    save_reports_json,
)

from instances import random_instance
from oracles import naive_suite

AB = custom_scheme("ab", ["A", "B"], {"1": ["A"], "2": ["A"], "3": ["B"]})


def test_gh_hand_count():
    assert gh([["1", "3"], ["3"]], AB) == pytest.approx({"A": 1 / 3, "B": 2 / 3}, abs=1e-15)


def test_gh_single_group():
    s = custom_scheme("one", ["X"], {"a": ["X"], "b": ["X"]})
    assert gh([["a", "b"], ["b"]], s) == {"X": 1.0}


def test_gh_multi_membership_sums_to_one():
    s = custom_scheme("g", ["A", "B", "C"], {"1": ["A", "B"], "2": ["B"], "3": ["C", "A"]})
    shares = gh([["1", "2"], ["3", "1"]], s)
    # memberships: A=3, B=3, C=1 out of 7
    assert shares == pytest.approx({"A": 3 / 7, "B": 3 / 7, "C": 1 / 7})
    assert math.isclose(sum(shares.values()), 1.0)


def test_gh_no_grouped_items():
    with pytest.raises(NoGroupedItemsError, match="no grouped interactions"):
        gh([["zz"]], AB)


def test_gp_hand_count():
    assert gp([Slate("s", ("1", "2"))], AB, 2) == {"A": 1.0, "B": 0.0}


def test_gp_k1_over_three_slates():
    slates = [Slate("a", ("1", "3")), Slate("b", ("2", "3")), Slate("c", ("3", "1"))]
    assert gp(slates, AB, 1) == pytest.approx({"A": 2 / 3, "B": 1 / 3})


def test_gp_equals_gh_when_composition_matches():
    histories = [["1", "3"], ["3", "2"]]
    slates = [Slate(str(n), tuple(h)) for n, h in enumerate(histories)]
    assert gp(slates, AB, 2) == gh(histories, AB)


def test_gp_no_grouped_recommendations():
    with pytest.raises(NoGroupedItemsError):
        gp([Slate("s", ("x", "y"))], AB, 2)


def test_gu_and_aggregates():
    gu = group_unfairness(gh([["1", "3"], ["3"]], AB), gp([Slate("s", ("1", "2"))], AB, 2))
    assert gu == pytest.approx({"A": 2 / 3, "B": -2 / 3})
    assert mgu(gu) == pytest.approx(2 / 3)
    assert dgu(gu) == pytest.approx(4 / 3)


def test_gu_mismatched_groups():
    with pytest.raises(ValueError):
        group_unfairness({"A": 1.0}, {"B": 1.0})


def test_mgu_three_groups():
    assert mgu({"A": 0.1, "B": -0.05, "C": -0.05}) == pytest.approx(0.0667, abs=1e-4)


def test_zero_and_single_group_aggregates():
    assert mgu({"A": 0.0, "B": 0.0}) == 0 and dgu({"A": 0.0, "B": 0.0}) == 0
    assert dgu({"A": 0.3}) == 0


def test_accuracy_ranks():
    assert accuracy([Slate("s", ("t", "x"))], ["t"], 5) == (1.0, 1.0)
    ndcg, hr = accuracy([Slate("s", ("a", "b", "t", "c"))], ["t"], 5)
    assert ndcg == pytest.approx(0.5) and hr == 1.0
    assert accuracy([Slate("s", ("a", "b", "c", "d", "e", "t"))], ["t"], 5) == (0.0, 0.0)


def test_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        accuracy([Slate("s", ("a",))], [], 1)


def test_slate_rejects_duplicates():
    with pytest.raises(ValueError):
        Slate("s", ("a", "a"))


def test_short_slates_counted(caplog):
    r = evaluate([["1"]], [Slate("s", ("1", "3"))], ["3"], AB, 5)
    assert r.short_slates == 1
    assert r.gp == {"A": 0.5, "B": 0.5}


def test_brute_force_equivalence_small():
    rng = random.Random(11)
    for _ in range(200):
        groups, member, histories, slates, targets, k = random_instance(rng)
        scheme = custom_scheme("r", groups, member)
        r = evaluate(histories, [Slate(str(n), tuple(s)) for n, s in enumerate(slates)], targets, scheme, k)
        o_gh, o_gp, o_gu, o_mgu, o_dgu = naive_suite(histories, slates, k, groups, member)
        for g in groups:
            assert abs(r.gh[g] - o_gh[g]) <= 1e-12
            assert abs(r.gp[g] - o_gp[g]) <= 1e-12
            assert abs(r.gu[g] - o_gu[g]) <= 1e-12
        assert abs(r.mgu - o_mgu) <= 1e-12 and abs(r.dgu - o_dgu) <= 1e-12


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_instance(random.Random(seed))


@settings(max_examples=200, deadline=None)
@given(instances())
def test_invariants(inst):
    groups, member, histories, slates, targets, k = inst
    scheme = custom_scheme("r", groups, member)
    r = evaluate(histories, [Slate(str(n), tuple(s)) for n, s in enumerate(slates)], targets, scheme, k)
    assert abs(sum(r.gu.values())) < 1e-9
    assert abs(sum(r.gh.values()) - 1) < 1e-9 and abs(sum(r.gp.values()) - 1) < 1e-9
    assert 0 <= r.mgu <= r.dgu + 1e-15
    if len(groups) >= 2:
        assert r.dgu <= len(groups) * r.mgu + 1e-12
    assert 0 <= r.ndcg <= r.hr <= 1


@settings(max_examples=100, deadline=None)
@given(instances(), st.integers(0, 5))
def test_appending_beyond_k_changes_nothing(inst, extra):
    groups, member, histories, slates, targets, k = inst
    scheme = custom_scheme("r", groups, member)
    base = [Slate(str(n), tuple(s)) for n, s in enumerate(slates)]
    longer = [Slate(s.ref, s.items + tuple(f"new{j}" for j in range(extra))) for s in base]
    a = evaluate(histories, [Slate(s.ref, s.items[:k]) for s in base], targets, scheme, k)
    b = evaluate(histories, [Slate(s.ref, (s.items[:k] + longer[n].items[len(s.items[:k]):])) for n, s in
                             enumerate(base)], targets, scheme, k)
    assert a.gp == b.gp and a.ndcg == b.ndcg and a.hr == b.hr


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["1", "2", "3", "4"]), min_size=1, max_size=6), min_size=1, max_size=8),
       st.integers(1, 4))
def test_calibration_fixed_point(histories, reps):
    # Slates whose membership multiset is a multiple of the histories' one.
    scheme = custom_scheme("c", ["A", "B", "C"], {"1": ["A"], "2": ["B"], "3": ["C", "A"], "4": ["B"]})
    slates = []
    for n, h in enumerate(histories):
        for r in range(reps):
            slates.append(Slate(f"{n}.{r}", tuple(dict.fromkeys(h))))
    # duplicates inside a history cannot be mirrored in a slate; compare on de-duplicated histories
    dedup = [list(dict.fromkeys(h)) for h in histories]
    k = max(len(s.items) for s in slates)
    r = evaluate(dedup, slates, ["1"] * len(slates), scheme, k)
    assert r.mgu < 1e-9 and r.dgu < 1e-9


def test_index_path_matches_slate_path():
    rng = random.Random(5)
    for _ in range(50):
        groups, member, histories, slates, targets, _ = random_instance(rng)
        scheme = custom_scheme("r", groups, member)
        items = sorted({i for s in slates for i in s} | set(targets) | set(member) | {x for h in histories for x in h})
        width = min(len(s) for s in slates)
        slates = [s[:width] for s in slates]
        if not any(scheme.groups_of(s[0]) for s in slates):
            continue
        idx = np.array([[items.index(i) for i in s] for s in slates])
        t = np.array([items.index(i) for i in targets])
        for k in range(1, width + 1):
            try:
                a = evaluate(histories, [Slate(str(n), tuple(s)) for n, s in enumerate(slates)], targets, scheme, k)
            except NoGroupedItemsError:
                continue
            b = evaluate_indices(gh_counts(histories, scheme), idx, t, scheme.matrix(items), scheme, k)
            for g in groups:
                assert a.gp[g] == pytest.approx(b.gp[g], abs=1e-12)
                assert a.gh[g] == pytest.approx(b.gh[g], abs=1e-12)
            assert a.mgu == pytest.approx(b.mgu, abs=1e-12)
            assert a.ndcg == pytest.approx(b.ndcg, abs=1e-12) and a.hr == b.hr


def test_report_exports(tmp_path):
    r = evaluate([["1", "3"], ["3"]], [Slate("s", ("1", "2"))], ["2"], AB, 2)
    save_reports_json([r], tmp_path / "r.json")
    back = load_reports_json(tmp_path / "r.json")
    assert back == [r]
    import json
    keys = set(json.loads((tmp_path / "r.json").read_text())[0])
    assert {"scheme", "k", "gh", "gp", "gu", "mgu", "dgu", "ndcg", "hr"} <= keys
    save_reports_csv([r], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 + 1  # header, one row per group, one summary row
    assert lines[-1].startswith("ab,2,summary")
    assert isinstance(back[0], FairnessReport)
