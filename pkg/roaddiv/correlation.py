"""
Correlation engine and the analyses built on it: pairwise DM agreement,
the effect of road length, and DM against behavioral diversity.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import pearsonr, shapiro, spearmanr

from .config import CorrelationConfig
from .exceptions import DegenerateInput
from .models import (
    CorrelationMethod,
    CorrelationResult,
    CorrelationStrength,
    Experiment,
    all_measures,
    classify_strength,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 3

RQ4_MODES: Dict[str, Experiment] = {
    "all": Experiment.RQ4A,
    "low_dm": Experiment.RQ4B,
    "high_dm": Experiment.RQ4B,
    "low_bd": Experiment.RQ4C,
    "high_bd": Experiment.RQ4C,
    "by_length": Experiment.RQ4D,
}

CORRELATION_COLUMNS = [
    "group",
    "agent_id",
    "x_label",
    "y_label",
    "method",
    "coefficient",
    "p_value",
    "strength",
    "n",
    "degenerate",
    "note",
]


def is_normal(values: np.ndarray, alpha: float = 0.05) -> bool:
    """Shapiro-Wilk: True when normality is not rejected at ``alpha``."""
    _, p_value = shapiro(values)
    return bool(p_value > alpha)


def _degenerate(
    x_label: str, y_label: str, n: int, note: str, group: str, agent_id: Optional[str]
) -> CorrelationResult:
    logger.warning("Correlation %s vs %s (%s) degenerate: %s", x_label, y_label, group, note)
    return CorrelationResult(
        x_label=x_label,
        y_label=y_label,
        method=CorrelationMethod.SPEARMAN,
        coefficient=0.0,
        p_value=1.0,
        strength=CorrelationStrength.SLIGHT,
        n=n,
        degenerate=True,
        group=group,
        agent_id=agent_id,
        note=note,
    )


def _as_samples(values: Iterable[float], label: str) -> np.ndarray:
    array = np.asarray(list(values), dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{label}: correlation inputs must be finite")
    return array


def correlate(
    xs: Sequence[float],
    ys: Sequence[float],
    alpha: float = 0.05,
    x_label: str = "x",
    y_label: str = "y",
    group: str = "all",
    agent_id: Optional[str] = None,
    strict: bool = False,
    normality: Optional[Tuple[bool, bool]] = None,
) -> CorrelationResult:
    """
    Pearson when both variables pass Shapiro-Wilk at ``alpha``, Spearman
    otherwise; two-sided p-value. Constant variables or fewer than three
    samples give a degenerate result (coefficient 0, p 1), or raise
    ``DegenerateInput`` with ``strict``. ``normality`` skips the Shapiro
    tests when the caller already ran them.
    """
    x = _as_samples(xs, x_label)
    y = _as_samples(ys, y_label)
    if len(x) != len(y):
        raise ValueError(f"{x_label} has {len(x)} samples, {y_label} has {len(y)}")

    note = None
    if len(x) < MIN_SAMPLES:
        note = f"fewer than {MIN_SAMPLES} samples"
    elif np.ptp(x) == 0:
        note = f"{x_label} is constant"
    elif np.ptp(y) == 0:
        note = f"{y_label} is constant"
    if note is not None:
        if strict:
            raise DegenerateInput(f"{x_label} vs {y_label}: {note}", x_label)
        return _degenerate(x_label, y_label, len(x), note, group, agent_id)

    if normality is None:
        normality = (is_normal(x, alpha), is_normal(y, alpha))
    if all(normality):
        method = CorrelationMethod.PEARSON
        coefficient, p_value = pearsonr(x, y)
    else:
        method = CorrelationMethod.SPEARMAN
        coefficient, p_value = spearmanr(x, y)
    coefficient, p_value = float(coefficient), float(p_value)
    if not math.isfinite(coefficient):
        note = "coefficient undefined"
        if strict:
            raise DegenerateInput(f"{x_label} vs {y_label}: {note}", x_label)
        return _degenerate(x_label, y_label, len(x), note, group, agent_id)

    coefficient = min(1.0, max(-1.0, coefficient))
    p_value = min(1.0, max(0.0, p_value)) if math.isfinite(p_value) else 1.0
    return CorrelationResult(
        x_label=x_label,
        y_label=y_label,
        method=method,
        coefficient=coefficient,
        p_value=p_value,
        strength=classify_strength(coefficient),
        n=len(x),
        group=group,
        agent_id=agent_id,
    )


def _alignment_groups(table: pd.DataFrame) -> List[Tuple[str, pd.DataFrame]]:
    """Split on the alignment column; prefixes are only used when both modes are present."""
    if "alignment" not in table.columns or table["alignment"].nunique() <= 1:
        return [("", table)]
    return [(f"{mode}:", part) for mode, part in table.groupby("alignment", sort=True)]


def _measure_columns(table: pd.DataFrame, measures: Optional[Sequence[str]]) -> List[str]:
    if measures is not None:
        return list(measures)
    return [measure.code for measure in all_measures() if measure.code in table.columns]


def _column_normality(frame: pd.DataFrame, columns: Sequence[str], alpha: float) -> Dict[str, bool]:
    normality = {}
    for column in columns:
        values = frame[column].dropna().to_numpy(dtype=float)
        normality[column] = len(values) >= MIN_SAMPLES and np.ptp(values) > 0 and is_normal(values, alpha)
    return normality


def rq2_pairwise_dm_correlation(
    dm_table: pd.DataFrame,
    config: Optional[CorrelationConfig] = None,
    measures: Optional[Sequence[str]] = None,
) -> List[CorrelationResult]:
    """
    Correlation of every pair of measures across suites, over all suites and
    per suite size. Each unordered pair is computed once; use
    ``correlation_matrix`` for the symmetric table.
    """
    config = config or CorrelationConfig()
    columns = _measure_columns(dm_table, measures)
    results: List[CorrelationResult] = []
    for prefix, table in _alignment_groups(dm_table):
        groups = [(f"{prefix}all", table)]
        groups += [(f"{prefix}size={size}", part) for size, part in table.groupby("suite_size", sort=True)]
        for group, frame in groups:
            normality = _column_normality(frame, columns, config.alpha)
            for i, left in enumerate(columns):
                for right in columns[i + 1 :]:
                    pair = frame[[left, right]].dropna()
                    # rows dropped for missing values invalidate the per-column tests
                    pair_normality = (
                        None if len(pair) < len(frame) else (normality[left], normality[right])
                    )
                    results.append(
                        correlate(
                            pair[left],
                            pair[right],
                            config.alpha,
                            left,
                            right,
                            group=group,
                            normality=pair_normality,
                        )
                    )
    return results


def correlation_matrix(results: Sequence[CorrelationResult], group: str = "all") -> pd.DataFrame:
    """Symmetric measure-by-measure coefficient table with a unit diagonal."""
    selected = [result for result in results if result.group == group]
    labels: List[str] = []
    for result in selected:
        for label in (result.x_label, result.y_label):
            if label not in labels:
                labels.append(label)
    table = pd.DataFrame(np.eye(len(labels)), index=labels, columns=labels)
    for result in selected:
        table.loc[result.x_label, result.y_label] = result.coefficient
        table.loc[result.y_label, result.x_label] = result.coefficient
    return table


def rq3_length_effect(
    dm_table: pd.DataFrame,
    config: Optional[CorrelationConfig] = None,
    measures: Optional[Sequence[str]] = None,
) -> List[CorrelationResult]:
    """
    Each measure against suite mean road length, over all suites and within
    each sampling label (all, shortest, longest).
    """
    config = config or CorrelationConfig()
    columns = _measure_columns(dm_table, measures)
    results = []
    for prefix, table in _alignment_groups(dm_table):
        groups = [(f"{prefix}all", table)]
        if table["label"].nunique() > 1:
            groups += [(f"{prefix}{label}", part) for label, part in table.groupby("label", sort=True)]
        for group, frame in groups:
            for column in columns:
                pair = frame[[column, "mean_length"]].dropna()
                results.append(
                    correlate(
                        pair[column],
                        pair["mean_length"],
                        config.alpha,
                        column,
                        "mean_length",
                        group=group,
                    )
                )
    return results


def quartile_subset(
    frame: pd.DataFrame, column: str, quartile: float = 0.25, high: bool = False
) -> pd.DataFrame:
    """
    The floor(N * quartile) rows with the lowest (or highest) ``column``
    values; ties are broken by suite id so the selection is stable.
    """
    count = int(math.floor(len(frame) * quartile))
    ordered = frame.sort_values(
        [column, "suite_id"], ascending=[not high, True], kind="mergesort"
    )
    return ordered.head(count)


def _merge_bd(dm_table: pd.DataFrame, bd_table: pd.DataFrame, agent_id: str) -> pd.DataFrame:
    bd = bd_table[bd_table["agent_id"] == agent_id][["suite_id", "bd"]]
    if bd.empty:
        logger.warning("No behavioral diversity rows for agent %s", agent_id)
    return dm_table.merge(bd, on="suite_id", how="inner", validate="many_to_one")


def rq4_dm_bd_correlation(
    dm_table: pd.DataFrame,
    bd_table: pd.DataFrame,
    agent_id: str,
    mode: str = "all",
    config: Optional[CorrelationConfig] = None,
    measures: Optional[Sequence[str]] = None,
) -> List[CorrelationResult]:
    """
    Each measure against one agent's behavioral diversity.

    ``low_dm``/``high_dm`` keep the bottom/top quartile of suites by the
    measure itself, ``low_bd``/``high_bd`` by behavioral diversity, and
    ``by_length`` correlates within each sampling label. Subsets with fewer
    than ``min_subset`` suites are logged and skipped.
    """
    if mode not in RQ4_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(RQ4_MODES)}")
    config = config or CorrelationConfig()
    columns = _measure_columns(dm_table, measures)
    merged = _merge_bd(dm_table, bd_table, agent_id)
    results = []
    for prefix, table in _alignment_groups(merged):
        for column in columns:
            rows = table[["suite_id", "label", column, "bd"]].dropna(subset=[column, "bd"])
            if mode == "by_length":
                strata = [(f"{prefix}by_length:{label}", part) for label, part in rows.groupby("label", sort=True)]
            elif mode == "all":
                strata = [(f"{prefix}all", rows)]
            else:
                conditioning = column if mode.endswith("_dm") else "bd"
                subset = quartile_subset(rows, conditioning, config.quartile, high=mode.startswith("high"))
                strata = [(f"{prefix}{mode}", subset)]
            for group, subset in strata:
                if len(subset) < config.min_subset:
                    logger.warning(
                        "Agent %s, %s, %s: %d suites below minimum %d; skipped",
                        agent_id,
                        column,
                        group,
                        len(subset),
                        config.min_subset,
                    )
                    continue
                results.append(
                    correlate(
                        subset[column],
                        subset["bd"],
                        config.alpha,
                        column,
                        "bd",
                        group=group,
                        agent_id=agent_id,
                    )
                )
    return results


def correlations_frame(results: Sequence[CorrelationResult]) -> pd.DataFrame:
    rows = [result.model_dump(mode="json") for result in results]
    return pd.DataFrame(rows, columns=CORRELATION_COLUMNS)
