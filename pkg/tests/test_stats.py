"""Tests for the signed-rank test, the A12 effect size, and Scott-Knott ranking."""

import itertools

import numpy as np
import pytest
from scipy import stats as scipy_stats

from d2emo.errors import ContractViolation
from d2emo.experiment.stats import (
    MIN_PAIRS,
    Effect,
    SampleGroup,
    a12,
    a12_class,
    rank_sum_p,
    scott_knott,
    wilcoxon_signed_rank,
)


def _brute_force_p(d: np.ndarray) -> float:
    d = d[d != 0]
    ranks = scipy_stats.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    sums = np.array([ranks[list(signs)].sum() for signs in itertools.product([False, True], repeat=len(d))])
    lower = np.mean(sums <= observed + 1e-9)
    upper = np.mean(sums >= observed - 1e-9)
    return min(1.0, 2.0 * min(lower, upper))


class TestWilcoxon:
    def test_all_positive_shift(self) -> None:
        a = np.arange(10, dtype=float)
        result = wilcoxon_signed_rank(a + 1.0, a)
        assert result.p_value == pytest.approx(2.0 / 1024.0)
        assert result.significant
        assert result.n_pairs == 10

    def test_symmetric_in_argument_order(self, rng: np.random.Generator) -> None:
        a, b = rng.random(12), rng.random(12)
        assert wilcoxon_signed_rank(a, b).p_value == pytest.approx(wilcoxon_signed_rank(b, a).p_value)

    @pytest.mark.parametrize(
        "d",
        [
            [1.0, -1.0, 2.0, 2.0, -3.0, 4.0, 4.0, -5.0],
            [0.5, 1.5, -2.5, 3.5, 4.5, 5.5, -6.5, 7.5],
            [1.0, 1.0, 1.0, -1.0, 2.0, 2.0, 0.0, 3.0],
        ],
    )
    def test_exact_matches_enumeration(self, d: list[float]) -> None:
        diffs = np.array(d)
        result = wilcoxon_signed_rank(diffs, np.zeros_like(diffs))
        assert result.p_value == pytest.approx(_brute_force_p(diffs), abs=1e-12)

    def test_random_pairs_match_enumeration(self, rng: np.random.Generator) -> None:
        checked = 0
        for _ in range(200):
            a = np.round(rng.normal(0.2, 1.0, 8), 1)
            b = np.round(rng.normal(0.0, 1.0, 8), 1)
            if np.count_nonzero(a - b) < MIN_PAIRS:
                continue
            result = wilcoxon_signed_rank(a, b)
            assert result.p_value == pytest.approx(_brute_force_p(a - b), abs=1e-12)
            checked += 1
        assert checked >= 190

    def test_normal_approximation_matches_scipy(self, rng: np.random.Generator) -> None:
        a = np.round(rng.normal(0.3, 1.0, 40), 1)
        b = np.round(rng.normal(0.0, 1.0, 40), 1)
        ours = wilcoxon_signed_rank(a, b)
        reference = scipy_stats.wilcoxon(a, b, zero_method="wilcox", correction=False, method="approx")
        assert ours.n_pairs > 20
        assert ours.p_value == pytest.approx(reference.pvalue, rel=1e-9)

    def test_zero_differences_are_dropped(self) -> None:
        a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
        b = a - np.array([0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        assert wilcoxon_signed_rank(a, b).n_pairs == 5

    def test_identical_samples(self) -> None:
        result = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result.p_value == 1.0
        assert not result.significant

    def test_too_few_pairs(self) -> None:
        with pytest.raises(ContractViolation):
            wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0])

    def test_unpaired_shapes(self) -> None:
        with pytest.raises(ContractViolation):
            wilcoxon_signed_rank([1.0, 2.0], [1.0])


class TestA12:
    def test_identical_samples(self) -> None:
        assert a12([1, 2, 3], [1, 2, 3]) == 0.5

    def test_complete_separation(self) -> None:
        assert a12([4, 5], [1, 2]) == 1.0
        assert a12([1, 2], [4, 5]) == 0.0

    def test_ties_count_half(self) -> None:
        assert a12([1, 2], [2, 3]) == pytest.approx(0.125)

    def test_complement(self, rng: np.random.Generator) -> None:
        a, b = rng.random(11), rng.random(9)
        assert a12(a, b) + a12(b, a) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        ("value", "effect"),
        [
            (0.5, Effect.EQUAL),
            (0.45, Effect.EQUAL),
            (0.6, Effect.SMALL),
            (0.38, Effect.SMALL),
            (0.3, Effect.MEDIUM),
            (0.7, Effect.MEDIUM),
            (0.71, Effect.LARGE),
            (0.0, Effect.LARGE),
        ],
    )
    def test_classes(self, value: float, effect: Effect) -> None:
        assert a12_class(value) is effect

    def test_empty_sample(self) -> None:
        with pytest.raises(ContractViolation):
            a12([], [1.0])


class TestScottKnott:
    def test_separated_groups_rank_by_mean(self) -> None:
        base = np.linspace(0.0, 1.0, 11)
        groups = [SampleGroup("low", base), SampleGroup("high", base + 20.0), SampleGroup("mid", base + 10.0)]
        assert scott_knott(groups) == {"low": 3, "high": 1, "mid": 2}

    def test_returns_input_label_order(self) -> None:
        base = np.linspace(0.0, 1.0, 11)
        groups = [SampleGroup("b", base), SampleGroup("a", base + 5.0)]
        assert list(scott_knott(groups)) == ["b", "a"]

    def test_indistinguishable_groups_share_rank(self) -> None:
        base = np.linspace(9.0, 11.0, 11)
        groups = [SampleGroup("x", base), SampleGroup("y", base + 0.1), SampleGroup("z", base - 10.0)]
        assert scott_knott(groups) == {"x": 1, "y": 1, "z": 2}

    def test_identical_groups(self) -> None:
        values = np.linspace(0.0, 1.0, 11)
        assert set(scott_knott([SampleGroup(str(i), values) for i in range(4)]).values()) == {1}

    def test_single_group(self) -> None:
        assert scott_knott([SampleGroup("only", [1.0, 2.0])]) == {"only": 1}

    def test_duplicate_labels(self) -> None:
        with pytest.raises(ContractViolation):
            scott_knott([SampleGroup("a", [1.0]), SampleGroup("a", [2.0])])

    def test_empty(self) -> None:
        with pytest.raises(ContractViolation):
            scott_knott([])

    def test_group_rejects_non_finite(self) -> None:
        with pytest.raises(ContractViolation):
            SampleGroup("bad", [1.0, np.nan])


def test_rank_sum_detects_shift() -> None:
    base = np.linspace(0.0, 1.0, 11)
    assert rank_sum_p(base, base + 5.0) < 0.001
    assert rank_sum_p(base, base) > 0.5
