"""
Unit tests for the correlation engine and the analyses built on it.
"""

import numpy as np
import pandas as pd
import pytest

from roaddiv.config import CorrelationConfig
from roaddiv.correlation import (
    correlate,
    correlation_matrix,
    correlations_frame,
    CORRELATION_COLUMNS,
    quartile_subset,
    rq2_pairwise_dm_correlation,
    rq3_length_effect,
    rq4_dm_bd_correlation,
)
from roaddiv.exceptions import DegenerateInput
from roaddiv.models import CorrelationMethod, CorrelationStrength, classify_strength


def _dm_table(n=20, sizes=(10,), labels=("all",)):
    rng = np.random.default_rng(0)
    a = rng.uniform(1.0, 10.0, size=n)
    rows = []
    for i in range(n):
        rows.append(
            {
                "suite_id": f"s{i:03d}",
                "suite_size": sizes[i % len(sizes)],
                "label": labels[i % len(labels)],
                "mean_length": 50.0 + a[i],
                "alignment": "aligned",
                "a": a[i],
                "b": 2.0 * a[i] + 1.0,
                "c": -a[i],
            }
        )
    return pd.DataFrame(rows)


def _bd_table(dm, agent_id="agent"):
    return pd.DataFrame(
        {
            "suite_id": dm["suite_id"],
            "agent_id": agent_id,
            "bd": 3.0 * dm["a"] + 2.0,
        }
    )


class TestCorrelate:
    def test_linear_relation(self):
        x = np.arange(20, dtype=float)
        result = correlate(x, 2 * x + 1, x_label="x", y_label="y")
        assert result.coefficient == pytest.approx(1.0)
        assert result.strength is CorrelationStrength.VERY_HIGH
        assert result.n == 20
        assert not result.degenerate

    def test_monotone_relation_with_spearman(self):
        x = np.linspace(-3.0, 3.0, 30)
        result = correlate(x, x ** 3, normality=(False, False))
        assert result.method is CorrelationMethod.SPEARMAN
        assert result.coefficient == pytest.approx(1.0)

    def test_normal_inputs_use_pearson(self):
        x = np.linspace(0.0, 1.0, 10)
        result = correlate(x, -x, normality=(True, True))
        assert result.method is CorrelationMethod.PEARSON
        assert result.coefficient == pytest.approx(-1.0)

    def test_constant_input_is_degenerate(self):
        result = correlate([1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0], x_label="flat")
        assert result.degenerate
        assert result.coefficient == 0.0
        assert result.p_value == 1.0
        assert result.strength is CorrelationStrength.SLIGHT
        assert "flat" in result.note

    def test_too_few_samples(self):
        assert correlate([1.0, 2.0], [2.0, 1.0]).degenerate

    def test_strict_mode_raises(self):
        with pytest.raises(DegenerateInput) as exc_info:
            correlate([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], x_label="flat", strict=True)
        assert exc_info.value.label == "flat"

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            correlate([1.0, 2.0, 3.0], [1.0, 2.0])

    def test_non_finite_input(self):
        with pytest.raises(ValueError):
            correlate([1.0, np.nan, 3.0], [1.0, 2.0, 3.0])


class TestStrength:
    @pytest.mark.parametrize(
        "coefficient,strength",
        [
            (0.0, CorrelationStrength.SLIGHT),
            (0.19, CorrelationStrength.SLIGHT),
            (0.2, CorrelationStrength.LOW),
            (-0.5, CorrelationStrength.MODERATE),
            (0.7, CorrelationStrength.HIGH),
            (0.9, CorrelationStrength.VERY_HIGH),
            (-1.0, CorrelationStrength.VERY_HIGH),
        ],
    )
    def test_bands(self, coefficient, strength):
        assert classify_strength(coefficient) is strength


class TestPairwiseAgreement:
    def test_each_pair_once_per_group(self):
        results = rq2_pairwise_dm_correlation(_dm_table(), measures=["a", "b", "c"])
        assert len(results) == 6
        assert {result.group for result in results} == {"all", "size=10"}
        by_pair = {(r.x_label, r.y_label): r for r in results if r.group == "all"}
        assert by_pair[("a", "b")].coefficient == pytest.approx(1.0)
        assert by_pair[("a", "c")].coefficient == pytest.approx(-1.0)

    def test_groups_by_size(self):
        results = rq2_pairwise_dm_correlation(_dm_table(sizes=(10, 20)), measures=["a", "b"])
        assert [result.group for result in results] == ["all", "size=10", "size=20"]

    def test_both_alignments_are_kept_apart(self):
        aligned = _dm_table()
        raw = aligned.assign(alignment="raw")
        results = rq2_pairwise_dm_correlation(pd.concat([aligned, raw]), measures=["a", "b"])
        assert {result.group for result in results} == {
            "aligned:all",
            "aligned:size=10",
            "raw:all",
            "raw:size=10",
        }

    def test_matrix_is_symmetric(self):
        results = rq2_pairwise_dm_correlation(_dm_table(), measures=["a", "b", "c"])
        matrix = correlation_matrix(results, "all")
        assert list(matrix.index) == ["a", "b", "c"]
        assert np.allclose(matrix.values, matrix.values.T)
        assert np.allclose(np.diag(matrix.values), 1.0)
        assert matrix.loc["c", "a"] == pytest.approx(-1.0)

    def test_frame_columns(self):
        results = rq2_pairwise_dm_correlation(_dm_table(), measures=["a", "b"])
        frame = correlations_frame(results)
        assert list(frame.columns) == CORRELATION_COLUMNS
        assert len(frame) == 2


class TestLengthEffect:
    def test_measure_against_mean_length(self):
        results = rq3_length_effect(_dm_table(labels=("shortest", "longest")), measures=["a"])
        assert [result.group for result in results] == ["all", "longest", "shortest"]
        assert all(result.y_label == "mean_length" for result in results)
        assert all(result.coefficient == pytest.approx(1.0) for result in results)

    def test_single_label_has_one_group(self):
        results = rq3_length_effect(_dm_table(), measures=["a", "c"])
        assert [result.group for result in results] == ["all", "all"]


class TestBehaviorCorrelation:
    def test_quartile_subset(self):
        frame = _dm_table(n=10)
        low = quartile_subset(frame, "a", 0.25)
        high = quartile_subset(frame, "a", 0.25, high=True)
        assert len(low) == 2
        assert low["a"].max() <= frame["a"].nsmallest(2).max()
        assert high["a"].min() >= frame["a"].nlargest(2).min()

    def test_quartile_ties_broken_by_suite_id(self):
        frame = pd.DataFrame({"suite_id": ["s3", "s1", "s2", "s0"], "a": [1.0, 1.0, 1.0, 1.0]})
        assert list(quartile_subset(frame, "a", 0.5)["suite_id"]) == ["s0", "s1"]

    def test_all_suites(self):
        dm = _dm_table()
        results = rq4_dm_bd_correlation(
            dm, _bd_table(dm), "agent", "all", measures=["a"]
        )
        assert len(results) == 1
        result = results[0]
        assert result.agent_id == "agent"
        assert result.y_label == "bd"
        assert result.coefficient == pytest.approx(1.0)

    def test_low_dm_quartile(self):
        dm = _dm_table()
        results = rq4_dm_bd_correlation(dm, _bd_table(dm), "agent", "low_dm", measures=["a"])
        assert results[0].group == "low_dm"
        assert results[0].n == 5

    def test_by_length(self):
        dm = _dm_table(labels=("shortest", "longest"))
        results = rq4_dm_bd_correlation(dm, _bd_table(dm), "agent", "by_length", measures=["a"])
        assert [result.group for result in results] == ["by_length:longest", "by_length:shortest"]
        assert all(result.n == 10 for result in results)

    def test_small_subsets_are_skipped(self):
        dm = _dm_table(n=8)
        results = rq4_dm_bd_correlation(dm, _bd_table(dm), "agent", "high_bd", measures=["a"])
        assert results == []

    def test_other_agents_are_ignored(self):
        dm = _dm_table()
        bd = pd.concat([_bd_table(dm), _bd_table(dm, agent_id="other")])
        results = rq4_dm_bd_correlation(dm, bd, "other", "all", CorrelationConfig(), ["a"])
        assert results[0].n == 20

    def test_unknown_mode(self):
        dm = _dm_table()
        with pytest.raises(ValueError):
            rq4_dm_bd_correlation(dm, _bd_table(dm), "agent", "median")
