"""Tests for the dynamic O-information and the multiplet search."""
import itertools
import math

import numpy as np
import pytest
from sklearn.base import clone

from infoflow import (
    AssetMeta,
    CovModel,
    DegenerateDataError,
    MultipletResult,
    MultipletSearch,
    best_pair,
    class_fractions,
    dynamic_o_information,
    gen_planted_highorder,
    greedy_extend,
    membership_counts,
    multiplet_scan,
    o_info_gain,
    o_information,
    surrogate_doinfo,
)
from infoflow.ingest import ReturnPanel
from infoflow.oinfo import read_multiplets_csv, write_multiplets_csv

SUM_COV = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 3.0]])
DRIVER_COV = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])


def cov_model(matrix, labels):
    return CovModel(labels=labels, matrix=np.asarray(matrix, float), sample_count=1000)


def make_panel(values, labels):
    values = np.asarray(values, float)
    return ReturnPanel(
        window_id=0,
        labels=tuple(labels),
        values=values,
        active=np.ones(values.shape[1], dtype=bool),
    )


class TestOInfoGain:
    def test_independent_target_zero(self):
        model = cov_model(np.eye(3), ("x1", "x2", "y"))
        assert o_info_gain(model, ("x1", "x2"), "y") == 0.0

    def test_noisy_sum_value(self):
        model = cov_model(SUM_COV, ("x1", "x2", "y"))
        expected = 0.5 * math.log(3.0) - math.log(2.0)
        assert o_info_gain(model, ("x1", "x2"), "y") == pytest.approx(expected, abs=1e-9)

    def test_common_driver_value(self):
        model = cov_model(DRIVER_COV, ("x1", "x2", "y"))
        assert o_info_gain(model, ("x1", "x2"), "y") == pytest.approx(
            0.5 * math.log(32.0 / 27.0), abs=1e-9
        )

    def test_decomposition_identity_random(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(200):
            d = int(rng.integers(3, 8))
            a = rng.standard_normal((d, d + 2))
            model = cov_model(a @ a.T / (d + 2) + 0.1 * np.eye(d), tuple(f"v{i}" for i in range(d)))
            labs = model.labels
            gain = o_info_gain(model, labs[:-1], labs[-1])
            direct = o_information(model, labs) - (
                o_information(model, labs[:-1]) if d > 3 else 0.0
            )
            if d == 3:
                direct = o_information(model, labs)  # pair term is exactly zero
            worst = max(worst, abs(direct - gain))
        assert worst < 1e-9

    def test_target_in_sources_rejected(self):
        model = cov_model(np.eye(3), ("a", "b", "c"))
        with pytest.raises(ValueError):
            o_info_gain(model, ("a", "b"), "a")


class TestDynamicOInformation:
    def test_planted_synergy_negative(self):
        panel, members, target = gen_planted_highorder("synergistic", 2, 50_000, seed=1)
        assert dynamic_o_information(panel, target, members, p=1) < 0

    def test_planted_redundancy_positive(self):
        panel, members, target = gen_planted_highorder("redundant", 2, 50_000, seed=2)
        assert dynamic_o_information(panel, target, members, p=1) > 0

    def test_independent_sources_within_null_band(self):
        rng = np.random.default_rng(3)
        panel = make_panel(rng.standard_normal((20_000, 4)), ("y", "a", "b", "c"))
        value = dynamic_o_information(panel, "y", ("a", "b"), p=1)
        null = surrogate_doinfo(panel, "y", ("a", "b"), p=1, n_surrogates=100, seed=4)
        assert abs(value) < 3 * null.std(ddof=1) + abs(null.mean())

    def test_needs_enough_samples(self):
        rng = np.random.default_rng(5)
        panel = make_panel(rng.standard_normal((20, 4)), ("y", "a", "b", "c"))
        with pytest.raises(DegenerateDataError):
            dynamic_o_information(panel, "y", ("a", "b"), p=3)


class TestBestPair:
    def test_planted_pair_wins(self):
        hits = 0
        for seed in range(10):
            panel, members, target = gen_planted_highorder("synergistic", 3, 30_000, seed=seed)
            result = best_pair(panel, target, p=1, kind="synergistic")
            hits += result.members == tuple(sorted(members))
        assert hits >= 9

    def test_exhaustive_equivalence(self):
        panel, members, target = gen_planted_highorder("redundant", 3, 20_000, seed=6)
        result = best_pair(panel, target, p=1, kind="redundant")
        labels = [lab for lab in panel.labels if lab != target]
        values = {
            pair: dynamic_o_information(panel, target, pair, p=1)
            for pair in itertools.combinations(sorted(labels), 2)
        }
        best = max(values, key=values.get)
        assert result.members == best
        assert result.value == pytest.approx(values[best], abs=1e-9)

    def test_two_candidates_forced(self):
        rng = np.random.default_rng(7)
        panel = make_panel(rng.standard_normal((5000, 3)), ("y", "a", "b"))
        for kind in ("redundant", "synergistic"):
            result = best_pair(panel, "y", p=1, kind=kind)
            assert result.members == ("a", "b")

    def test_too_few_candidates_rejected(self):
        rng = np.random.default_rng(8)
        panel = make_panel(rng.standard_normal((5000, 2)), ("y", "a"))
        with pytest.raises(DegenerateDataError):
            best_pair(panel, "y", p=1, kind="synergistic")


def planted_three_way(T, seed, weights=(1.0, 1.0, 0.8)):
    """Target future = weighted sum of three source pasts; X3 weakest."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((T + 1, 3))
    y = raw[:T] @ np.asarray(weights) + 0.1 * rng.standard_normal(T)
    cols = [y, raw[1:, 0], raw[1:, 1], raw[1:, 2], rng.standard_normal(T)]
    return make_panel(np.column_stack(cols), ("Y", "X1", "X2", "X3", "D1"))


class TestGreedyExtend:
    def test_three_way_synergy_extension(self):
        panel = planted_three_way(50_000, seed=9)
        pair = best_pair(panel, "Y", p=1, kind="synergistic")
        assert pair.members == ("X1", "X2")
        extended = greedy_extend(panel, "Y", pair)
        assert extended.members == ("X1", "X2", "X3")
        assert extended.size == 3
        assert set(pair.members) < set(extended.members)

    def test_extension_is_argmax_over_candidates(self):
        panel = planted_three_way(20_000, seed=10)
        pair = best_pair(panel, "Y", p=1, kind="redundant")
        extended = greedy_extend(panel, "Y", pair)
        others = [lab for lab in ("X1", "X2", "X3", "D1") if lab not in pair.members]
        candidates = {
            k: dynamic_o_information(panel, "Y", tuple(sorted(pair.members + (k,))), p=1)
            for k in others
        }
        assert extended.value == pytest.approx(max(candidates.values()), abs=1e-9)

    def test_exhausted_pool_rejected(self):
        rng = np.random.default_rng(11)
        panel = make_panel(rng.standard_normal((5000, 3)), ("y", "a", "b"))
        pair = best_pair(panel, "y", p=1, kind="redundant")
        with pytest.raises(DegenerateDataError):
            greedy_extend(panel, "y", pair)

    def test_wrong_target_rejected(self):
        panel = planted_three_way(20_000, seed=12)
        pair = best_pair(panel, "Y", p=1, kind="redundant")
        with pytest.raises(ValueError):
            greedy_extend(panel, "X1", pair)


class TestMultipletScan:
    def test_cardinality_contract(self):
        rng = np.random.default_rng(13)
        panel = make_panel(rng.standard_normal((20_000, 6)), tuple("ABCDEF"))
        results = multiplet_scan(panel, p=1, n_max=5)
        # 6 targets x 2 kinds x sizes 2..5
        assert len(results) == 6 * 2 * 4
        for target in "ABCDEF":
            for kind in ("redundant", "synergistic"):
                chain = [r for r in results if r.target == target and r.kind == kind]
                assert [r.size for r in chain] == [2, 3, 4, 5]
                for small, big in zip(chain, chain[1:]):
                    assert set(small.members) < set(big.members)

    def test_three_columns_capped_at_pairs(self, caplog):
        rng = np.random.default_rng(14)
        panel = make_panel(rng.standard_normal((5000, 3)), ("a", "b", "c"))
        results = multiplet_scan(panel, p=1, n_max=5)
        assert {r.size for r in results} == {2}
        assert any("capped" in rec.message for rec in caplog.records)

    def test_greedy_matches_exhaustive_triples(self):
        hits = 0
        for seed in range(20):
            kind = "synergistic" if seed % 2 else "redundant"
            panel, members, target = gen_planted_highorder(kind, 4, 30_000, seed=100 + seed)
            results = multiplet_scan(panel, targets=[target], p=1, n_max=3)
            got = next(r.members for r in results if r.kind == kind and r.size == 3)
            labels = [lab for lab in panel.labels if lab != target]
            sign = 1.0 if kind == "redundant" else -1.0
            best = max(
                itertools.combinations(sorted(labels), 3),
                key=lambda c: sign * dynamic_o_information(panel, target, c, p=1),
            )
            hits += got == best
        assert hits >= 18

    def test_determinism(self):
        rng = np.random.default_rng(15)
        panel = make_panel(rng.standard_normal((10_000, 5)), tuple("ABCDE"))
        assert multiplet_scan(panel, p=1, n_max=4) == multiplet_scan(panel, p=1, n_max=4)

    def test_degenerate_target_skipped(self, caplog):
        rng = np.random.default_rng(16)
        values = rng.standard_normal((5000, 4))
        values[:, 2] = 1.0
        panel = make_panel(values, ("a", "b", "c", "d"))
        results = multiplet_scan(panel, p=1, n_max=3)
        assert all(r.target != "c" for r in results)
        assert all("c" not in r.members for r in results)

    def test_estimator_api(self):
        rng = np.random.default_rng(17)
        est = MultipletSearch(lag=1, n_max=3)
        assert est.get_params() == {"lag": 1, "n_max": 3, "targets": None}
        cloned = clone(est)
        cloned.fit(rng.standard_normal((8000, 4)), labels=("a", "b", "c", "d"))
        assert len(cloned.results_) == 4 * 2 * 2


REGISTRY = {
    "BTC": AssetMeta("BTC", "coin", __import__("datetime").date(2020, 1, 1)),
    "LNK": AssetMeta("LNK", "token", __import__("datetime").date(2020, 1, 1)),
    "UST": AssetMeta("UST", "stablecoin", __import__("datetime").date(2020, 1, 1)),
}


def mp(target, kind, members, size=None, window=0, value=0.1):
    return MultipletResult(
        window_id=window,
        target=target,
        kind=kind,
        size=size or len(members),
        members=tuple(members),
        value=value,
        lag_p=1,
    )


class TestMembershipCounts:
    def test_single_result(self):
        rows = membership_counts([mp("Y", "redundant", ("BTC", "LNK"))], REGISTRY)
        assert ("redundant", "BTC", "coin", 1) in rows
        assert ("redundant", "LNK", "token", 1) in rows

    def test_counts_once_per_size_level(self):
        results = [
            mp("Y", "synergistic", tuple(["BTC"] + [f"X{i}" for i in range(n - 1)]))
            for n in (2, 3, 4, 5)
        ]
        rows = membership_counts(results, REGISTRY)
        btc = next(r for r in rows if r[1] == "BTC")
        assert btc[3] == 4

    def test_unknown_class_fallback(self):
        rows = membership_counts([mp("Y", "redundant", ("ZZZ", "BTC"))], REGISTRY)
        assert ("redundant", "ZZZ", "unknown", 1) in rows

    def test_empty(self):
        assert membership_counts([], REGISTRY) == []

    def test_sorted_descending(self):
        results = [
            mp("Y", "redundant", ("BTC", "LNK")),
            mp("Z", "redundant", ("BTC", "UST")),
        ]
        rows = membership_counts(results, REGISTRY)
        counts = [r[3] for r in rows]
        assert counts == sorted(counts, reverse=True)


class TestClassFractions:
    def test_even_split(self):
        rows = class_fractions([mp("Y", "redundant", ("BTC", "LNK"))], REGISTRY)
        kind, size, frac = rows[0]
        assert (kind, size) == ("redundant", 2)
        assert frac["coin"] == pytest.approx(0.5)
        assert frac["token"] == pytest.approx(0.5)

    def test_all_token(self):
        results = [mp("Y", "synergistic", ("LNK", "L2", "L3"))]
        meta = dict(REGISTRY)
        meta["L2"] = AssetMeta("L2", "token", REGISTRY["LNK"].first_day)
        meta["L3"] = AssetMeta("L3", "token", REGISTRY["LNK"].first_day)
        rows = class_fractions(results, meta)
        assert rows[0][2]["token"] == pytest.approx(1.0)

    def test_fractions_sum_to_one(self):
        results = [
            mp("Y", "redundant", ("BTC", "LNK", "UST")),
            mp("Z", "redundant", ("LNK", "UST", "BTC")),
        ]
        rows = class_fractions(results, REGISTRY)
        for _, _, frac in rows:
            assert sum(frac.values()) == pytest.approx(1.0, abs=1e-12)

    def test_planted_stablecoin_synergy_fraction_grows(self):
        # One strong coin source plus three stablecoin sources: as the
        # synergistic multiplet grows it recruits the stablecoins, so their
        # fraction rises with size.
        rng = np.random.default_rng(18)
        T = 40_000
        raw = rng.standard_normal((T + 1, 4))
        y = raw[:T] @ np.array([1.5, 1.0, 1.0, 1.0]) + 0.1 * rng.standard_normal(T)
        cols = [y] + [raw[1:, k] for k in range(4)] + [rng.standard_normal(T)]
        panel = make_panel(np.column_stack(cols), ("Y", "C1", "S1", "S2", "S3", "D1"))
        results = [
            r
            for r in multiplet_scan(panel, targets=["Y"], p=1, n_max=4)
            if r.kind == "synergistic"
        ]
        day = __import__("datetime").date(2020, 1, 1)
        meta = {
            "C1": AssetMeta("C1", "coin", day),
            "D1": AssetMeta("D1", "token", day),
            "S1": AssetMeta("S1", "stablecoin", day),
            "S2": AssetMeta("S2", "stablecoin", day),
            "S3": AssetMeta("S3", "stablecoin", day),
        }
        rows = class_fractions(results, meta)
        stable = {size: frac["stablecoin"] for kind, size, frac in rows if kind == "synergistic"}
        assert stable[2] < stable[3] < stable[4]


class TestMultipletCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        results = [
            mp("Y", "redundant", ("A", "B"), value=0.123456789123),
            mp("Y", "synergistic", ("A", "C"), value=-0.5),
        ]
        path = tmp_path / "multiplets_0.csv"
        write_multiplets_csv(path, results)
        assert read_multiplets_csv(path, lag_p=1) == results
