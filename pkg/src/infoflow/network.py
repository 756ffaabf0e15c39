"""Network-level statistics over per-window adjacency matrices."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .granger import GcEdge

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Directed weighted network for one window.

    ``weights[i, j]`` is the significant influence strength of node i on
    node j (nats); zero diagonal.  ``excluded`` records columns that were
    dropped before estimation, as (label, reason) pairs.
    """

    window_id: int
    labels: tuple[str, ...]
    weights: np.ndarray
    alpha: float
    excluded: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError("node labels must be unique")
        w = np.asarray(self.weights, dtype=np.float64)
        n = len(labels)
        if w.shape != (n, n):
            raise ValueError("weights must be square and match the label count")
        if n and (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if n and np.diagonal(w).any():
            raise ValueError("diagonal must be zero")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)


def strengths(matrix: AdjacencyMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Out- and in-strengths: row sums and column sums of the weights."""
    return matrix.weights.sum(axis=1), matrix.weights.sum(axis=0)


def average_network(matrices: Sequence[AdjacencyMatrix]) -> AdjacencyMatrix:
    """Edge-wise mean network over windows.

    Each edge is averaged over the windows in which both endpoints are
    present, so late-listed assets are not biased toward zero.  The result
    carries the sentinel window id -1.
    """
    if not matrices:
        raise ValueError("need at least one matrix")
    labels = sorted(set().union(*(m.labels for m in matrices)))
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    totals = np.zeros((n, n))
    counts = np.zeros((n, n))
    for m in matrices:
        idx = np.array([index[lab] for lab in m.labels], dtype=int)
        totals[np.ix_(idx, idx)] += m.weights
        counts[np.ix_(idx, idx)] += 1
    with np.errstate(invalid="ignore"):
        mean = np.where(counts > 0, totals / np.maximum(counts, 1), 0.0)
    np.fill_diagonal(mean, 0.0)
    return AdjacencyMatrix(
        window_id=-1,
        labels=tuple(labels),
        weights=mean,
        alpha=matrices[0].alpha,
    )


@dataclass(frozen=True)
class WindowCorrelation:
    """Pairwise similarity of per-window networks.

    ``corr[h, k]`` is the Pearson correlation of the vectorized
    off-diagonal weights restricted to node pairs present in both windows;
    undefined entries (too little overlap, or a constant vector) are NaN.
    The diagonal is 1 by convention with a NaN p-value (self).
    """

    window_ids: tuple[int, ...]
    corr: np.ndarray
    pvalues: np.ndarray
    alpha: float = 0.01

    def significant(self) -> np.ndarray:
        """Mask of entries whose correlation is significant (p <= alpha)."""
        with np.errstate(invalid="ignore"):
            return np.asarray(self.pvalues <= self.alpha)


def _offdiag_common(a: AdjacencyMatrix, b: AdjacencyMatrix) -> tuple[np.ndarray, np.ndarray]:
    common = sorted(set(a.labels) & set(b.labels))
    if len(common) < 2:
        return np.empty(0), np.empty(0)
    ia = np.array([a.labels.index(lab) for lab in common])
    ib = np.array([b.labels.index(lab) for lab in common])
    sub_a = a.weights[np.ix_(ia, ia)]
    sub_b = b.weights[np.ix_(ib, ib)]
    mask = ~np.eye(len(common), dtype=bool)
    return sub_a[mask], sub_b[mask]


def window_correlation(
    matrices: Sequence[AdjacencyMatrix],
    alpha: float = 0.01,
    min_pairs: int = 10,
) -> WindowCorrelation:
    """Pearson correlation between every pair of window networks."""
    if len(matrices) < 2:
        raise ValueError("need at least two matrices")
    ordered = sorted(matrices, key=lambda m: m.window_id)
    n = len(ordered)
    corr = np.full((n, n), np.nan)
    pval = np.full((n, n), np.nan)
    np.fill_diagonal(corr, 1.0)
    for h in range(n):
        for k in range(h + 1, n):
            va, vb = _offdiag_common(ordered[h], ordered[k])
            if va.size < min_pairs:
                continue
            if va.std() == 0.0 or vb.std() == 0.0:
                continue
            r, p = stats.pearsonr(va, vb)
            corr[h, k] = corr[k, h] = float(r)
            pval[h, k] = pval[k, h] = float(p)
    return WindowCorrelation(
        window_ids=tuple(m.window_id for m in ordered),
        corr=corr,
        pvalues=pval,
        alpha=alpha,
    )


def _stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def age_strength_correlation(
    ages: Sequence[float],
    mean_k_in: Sequence[float],
    mean_k_out: Sequence[float],
) -> dict[str, tuple[float, float, str]]:
    """Spearman correlation of asset age with mean in/out strength.

    ``ages`` counts the windows each asset was active in.  Returns
    ``{"in": (rho, p, stars), "out": ...}`` with two-sided p-values and
    significance stars at 0.05 (*) and 0.01 (**); undefined correlations
    (constant ranks) are reported as NaN.
    """
    ages = np.asarray(ages, dtype=np.float64)
    if ages.size < 5:
        raise ValueError("need at least 5 assets")
    out: dict[str, tuple[float, float, str]] = {}
    for key, values in (("in", mean_k_in), ("out", mean_k_out)):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != ages.shape:
            raise ValueError("strength vector length must match ages")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rho, p = stats.spearmanr(ages, values)
        if not np.isfinite(rho):
            logger.warning("spearman correlation undefined for %s-strength (constant ranks)", key)
            rho, p = float("nan"), float("nan")
        out[key] = (float(rho), float(p), _stars(float(p)))
    return out


def _trailing_mean(series: list[float | None], width: int = 10) -> list[float | None]:
    out: list[float | None] = []
    for i in range(len(series)):
        window = [v for v in series[max(0, i - width + 1) : i + 1] if v is not None]
        out.append(sum(window) / len(window) if window else None)
    return out


def window_indicators(
    pair_stats: Mapping[int, Sequence[GcEdge]],
    multiplets: Sequence,
    volumes: Mapping[int, float],
    start_dates: Mapping[int, str] | None = None,
    n_max: int = 5,
    significant_only: bool = False,
    ma_width: int = 10,
) -> list[dict]:
    """Per-window summary rows: volume, mean strength, mean dO-info.

    ``mean_f`` averages over every evaluated ordered pair by default
    (set ``significant_only`` to restrict to significant ones);
    ``mean_redundancy``/``mean_synergy`` average the size-``n_max``
    multiplet values over targets.  Each indicator also gets a trailing
    ``ma_width``-window moving average.  Windows missing from an input get
    that field set to None.
    """
    window_ids = sorted(
        set(pair_stats) | set(volumes) | {m.window_id for m in multiplets}
    )
    by_window_kind: dict[tuple[int, str], list[float]] = {}
    for m in multiplets:
        if m.size == n_max:
            by_window_kind.setdefault((m.window_id, m.kind), []).append(m.value)

    def _mean(vals: list[float]) -> float | None:
        return sum(vals) / len(vals) if vals else None

    rows: list[dict] = []
    cols = ("total_volume", "mean_f", "mean_redundancy", "mean_synergy")
    for w in window_ids:
        edges = pair_stats.get(w)
        if edges is not None:
            pool = [e.f_value for e in edges if e.significant or not significant_only]
            mean_f = _mean(pool)
        else:
            mean_f = None
        rows.append(
            {
                "window": w,
                "start_date": start_dates.get(w) if start_dates else None,
                "total_volume": volumes.get(w),
                "mean_f": mean_f,
                "mean_redundancy": _mean(by_window_kind.get((w, "redundant"), [])),
                "mean_synergy": _mean(by_window_kind.get((w, "synergistic"), [])),
            }
        )
    for col in cols:
        ma = _trailing_mean([row[col] for row in rows], ma_width)
        for row, value in zip(rows, ma):
            row[f"ma10_{col}"] = value
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_strengths_csv(path, matrix: AdjacencyMatrix) -> None:
    k_out, k_in = strengths(matrix)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("ticker,k_in,k_out\n")
        for lab, ki, ko in zip(matrix.labels, k_in, k_out):
            fh.write(f"{lab},{ki!r},{ko!r}\n")


def read_strengths_csv(path) -> dict[str, tuple[float, float]]:
    out: dict[str, tuple[float, float]] = {}
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("ticker,"):
            raise ValueError(f"{path}: unexpected strengths header")
        for line in fh:
            lab, ki, ko = line.rstrip("\n").split(",")
            out[lab] = (float(ki), float(ko))
    return out


def write_window_corr_csv(path_corr, path_p, wc: WindowCorrelation) -> None:
    header = "window," + ",".join(str(w) for w in wc.window_ids) + "\n"
    for path, table in ((path_corr, wc.corr), (path_p, wc.pvalues)):
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(header)
            for w, row in zip(wc.window_ids, table):
                cells = ",".join("" if not np.isfinite(v) else repr(float(v)) for v in row)
                fh.write(f"{w},{cells}\n")


def write_indicators_csv(path, rows: Sequence[dict]) -> None:
    cols = (
        "window",
        "start_date",
        "total_volume",
        "mean_f",
        "mean_redundancy",
        "mean_synergy",
        "ma10_total_volume",
        "ma10_mean_f",
        "ma10_mean_redundancy",
        "ma10_mean_synergy",
    )
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")


def write_matrix_csv(path, matrix: AdjacencyMatrix) -> None:
    """Dense adjacency with a ticker header row/column."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("ticker," + ",".join(matrix.labels) + "\n")
        for lab, row in zip(matrix.labels, matrix.weights):
            fh.write(lab + "," + ",".join(repr(float(v)) for v in row) + "\n")


def write_age_correlation_csv(path, result: dict[str, tuple[float, float, str]]) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("direction,spearman_rho,p_value,stars\n")
        for key in ("in", "out"):
            rho, p, stars_ = result[key]
            fh.write(f"{key},{_fmt(rho)},{_fmt(p)},{stars_}\n")
