"""Pairwise linear Granger causality.

Implements lag embedding, BIC model-order selection, reduced/full
autoregressive fits by ordinary least squares, the log-variance-ratio
strength statistic with its asymptotic chi-square significance test, and
the Gaussian transfer-entropy cross-check.  Strengths are in nats.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConsistencyError, DegenerateDataError
from .gaussian import DEFAULT_RIDGE, RidgePolicy, conditional_mi, estimate_covariance
from .validation import as_series, check_labels, usable_columns, zscore

logger = logging.getLogger(__name__)

# Finite-sample OLS can produce strength estimates this far below zero
# before we call it an internal inconsistency rather than rounding.
_NEG_STRENGTH_TOL = 1e-9


@dataclass(frozen=True)
class VarFit:
    """One fitted autoregressive model (reduced or full).

    ``coefficients`` holds the target-lag weights followed by the
    source-lag weights; the fitted intercept is not included.
    ``residual_variance`` is the maximum-likelihood estimate (RSS / N).
    """

    target: str
    sources: tuple[str, ...]
    order_p: int
    order_q: int
    coefficients: np.ndarray
    residual_variance: float
    sample_count: int

    def __post_init__(self):
        if self.residual_variance <= 0:
            raise DegenerateDataError(
                f"deterministic fit for target {self.target!r}: zero residual variance"
            )
        expected = self.order_p + self.order_q * len(self.sources)
        if len(self.coefficients) != expected:
            raise ValueError("coefficient count does not match model orders")


@dataclass(frozen=True)
class GcEdge:
    """Directed Granger result for one ordered pair."""

    source: str
    target: str
    f_value: float
    p_value: float
    order_p: int
    order_q: int
    significant: bool


def embed(series, lags: int) -> np.ndarray:
    """Lag-embed a series: row t holds (x[t-1], ..., x[t-lags]).

    The output has shape (T - lags, lags) and row i is aligned with the
    future value ``series[lags + i]``; column m holds lag m+1.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if lags < 1:
        raise ValueError("lags must be >= 1")
    if x.size <= lags:
        raise ValueError(f"series of length {x.size} cannot be embedded at lag {lags}")
    return np.column_stack([x[lags - m : x.size - m] for m in range(1, lags + 1)])


def _design(y: np.ndarray, p: int, x: np.ndarray | None, q: int, trim: int):
    """Future vector and [intercept | y-lags | x-lags] design on a common sample."""
    T = y.size
    n = T - trim
    y_fut = y[trim:]
    blocks = [np.ones((n, 1)), embed(y, p)[trim - p :]]
    if x is not None:
        blocks.append(embed(x, q)[trim - q :])
    return y_fut, np.hstack(blocks)


def fit_var(
    y,
    p: int,
    x=None,
    q: int = 0,
    target: str = "y",
    source: str = "x",
    trim: int | None = None,
) -> VarFit:
    """Fit one autoregressive model by OLS with intercept.

    With ``x`` given, the model regresses the target future on ``p`` of its
    own lags plus ``q`` source lags; ``trim`` fixes the common sample start
    so that nested models can be compared on identical rows.
    """
    y = as_series(y, min_length=p + 2, name="target")
    if x is None:
        q = 0
    else:
        x = as_series(x, min_length=q + 2, name="source")
        if x.size != y.size:
            raise ValueError("source and target must have equal length")
        if q < 1:
            raise ValueError("q must be >= 1 when a source is given")
    if trim is None:
        trim = max(p, q)
    if trim < max(p, q):
        raise ValueError("trim must be >= max(p, q)")
    if y.size <= trim:
        raise DegenerateDataError("series too short for the requested lags")

    y_fut, Z = _design(y, p, x, q, trim)
    beta, _, rank, _ = np.linalg.lstsq(Z, y_fut, rcond=None)
    resid = y_fut - Z @ beta
    n = y_fut.size
    sigma2 = float(resid @ resid) / n
    return VarFit(
        target=target,
        sources=(source,) if x is not None else (),
        order_p=p,
        order_q=q if x is not None else 0,
        coefficients=beta[1:],
        residual_variance=sigma2,
        sample_count=n,
    )


def select_order_bic(target, source=None, p_max: int = 20) -> int:
    """Pick the lag order in [1, p_max] minimizing the BIC.

    All candidate orders are scored on the same effective sample (trimmed
    at ``p_max``) so their criteria are comparable; with a source present
    the candidate models use equal target and source lag counts.  Ties go
    to the smaller order.
    """
    y = as_series(target, name="target")
    T = y.size
    if not 1 <= p_max < T / 4:
        raise ValueError(f"need 1 <= p_max < T/4, got p_max={p_max}, T={T}")
    y = zscore(y, "target")
    x = None
    if source is not None:
        x = zscore(as_series(source, name="source"), "source")
        if x.size != T:
            raise ValueError("source and target must have equal length")

    y_fut, Z = _design(y, p_max, x, p_max if x is not None else 0, p_max)
    n = y_fut.size
    gram = Z.T @ Z
    proj = Z.T @ y_fut
    yy = float(y_fut @ y_fut)
    log_n = math.log(n)

    best_order = None
    best_bic = math.inf
    for m in range(1, p_max + 1):
        cols = [0] + list(range(1, m + 1))
        if x is not None:
            cols += list(range(1 + p_max, 1 + p_max + m))
        idx = np.array(cols)
        sub = gram[np.ix_(idx, idx)]
        try:
            sol = np.linalg.solve(sub, proj[idx])
        except np.linalg.LinAlgError:
            continue
        rss = yy - float(proj[idx] @ sol)
        if not np.isfinite(rss) or rss <= 0:
            continue
        bic = n * math.log(rss / n) + len(cols) * log_n
        if bic < best_bic:
            best_bic = bic
            best_order = m
    if best_order is None:
        raise DegenerateDataError("all candidate orders produced degenerate fits")
    return best_order


def pairwise_gc(
    x,
    y,
    p: int,
    q: int,
    alpha: float = 0.01,
    source: str = "x",
    target: str = "y",
) -> GcEdge:
    """Granger strength of ``x`` toward ``y`` with its significance test.

    Both series are z-scored, the reduced (target-only, order p) and full
    (plus source, order q) models are fit by OLS on the common sample, and
    the strength is ``ln(reduced residual variance / full residual
    variance)`` floored at zero.  Under the no-influence null,
    ``N * strength`` is asymptotically chi-square with q degrees of
    freedom, which supplies the p-value.
    """
    xs = as_series(x, name="source")
    ys = as_series(y, name="target")
    if xs.size != ys.size:
        raise ValueError("source and target must have equal length")
    if ys.size <= max(p, q) + 10:
        raise DegenerateDataError("series too short for the requested lags")
    xs = zscore(xs, "source")
    ys = zscore(ys, "target")

    trim = max(p, q)
    reduced = fit_var(ys, p, target=target, trim=trim)
    full = fit_var(ys, p, xs, q, target=target, source=source, trim=trim)

    raw = math.log(reduced.residual_variance / full.residual_variance)
    if raw < -_NEG_STRENGTH_TOL:
        raise ConsistencyError(
            f"nested-model strength came out negative: {raw!r}"
        )
    f_value = max(0.0, raw)
    p_value = float(stats.chi2.sf(full.sample_count * f_value, df=q))
    return GcEdge(
        source=source,
        target=target,
        f_value=f_value,
        p_value=p_value,
        order_p=p,
        order_q=q,
        significant=bool(p_value < alpha),
    )


def transfer_entropy_gaussian(x, y, p: int, policy: RidgePolicy = DEFAULT_RIDGE) -> float:
    """Gaussian transfer entropy from ``x`` to ``y`` at lag order ``p``.

    The conditional mutual information between the target future and the
    source past given the target past, evaluated on the joint sample
    covariance of the embedded series.  Equals half the Granger strength
    when computed from the same sample.
    """
    xs = zscore(as_series(x, name="source"), "source")
    ys = zscore(as_series(y, name="target"), "target")
    if xs.size != ys.size:
        raise ValueError("source and target must have equal length")
    if ys.size <= 2 * p + 10:
        raise DegenerateDataError("series too short for the requested lag")

    y_fut = ys[p:]
    ylags = embed(ys, p)
    xlags = embed(xs, p)
    frame = np.column_stack([y_fut, xlags, ylags])
    x_names = tuple(f"x@-{m}" for m in range(1, p + 1))
    y_names = tuple(f"y@-{m}" for m in range(1, p + 1))
    cov = estimate_covariance(frame, ("y",) + x_names + y_names, policy=policy)
    return conditional_mi(cov, ("y",), x_names, y_names)


class GrangerNetwork(BaseEstimator):
    """Directed network of pairwise Granger strengths over panel columns.

    Parameters
    ----------
    alpha : float
        Significance level; only edges with p-value below it get weight.
    p_max : int
        Upper bound of the BIC lag-order search (per ordered pair).
    order : int, optional
        Fixed lag order; skips the BIC search when given.

    Attributes
    ----------
    labels_ : tuple of str
        Usable (finite, non-constant) column labels, in input order.
    weights_ : ndarray of shape (n, n)
        Thresholded strengths; entry (i, j) is the influence of node i on
        node j, zero when not significant.  Diagonal is zero.
    edges_ : list of GcEdge
        Raw statistics for every evaluated ordered pair, including
        non-significant ones.
    excluded_ : list of (label, reason)
        Columns dropped before estimation.
    """

    def __init__(self, alpha: float = 0.01, p_max: int = 20, order: int | None = None):
        self.alpha = alpha
        self.p_max = p_max
        self.order = order

    def fit(self, X, y=None, labels: Sequence[str] | None = None):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        X = check_array(X, dtype=np.float64, ensure_all_finite=False, ensure_min_samples=3)
        self.n_features_in_ = X.shape[1]
        all_labels = check_labels(labels, X.shape[1])

        usable, excluded = usable_columns(X, all_labels)
        self.excluded_ = excluded
        for lab, reason in excluded:
            logger.warning("column %s excluded from GC network: %s", lab, reason)
        self.labels_ = tuple(all_labels[j] for j in usable)

        n = len(usable)
        self.weights_ = np.zeros((n, n))
        self.edges_ = []
        if n < 2:
            logger.warning("fewer than 2 usable columns; empty network")
            return self

        cols = [X[:, j] for j in usable]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if self.order is not None:
                    p = int(self.order)
                else:
                    p = select_order_bic(cols[j], cols[i], p_max=self.p_max)
                edge = pairwise_gc(
                    cols[i],
                    cols[j],
                    p,
                    p,
                    alpha=self.alpha,
                    source=self.labels_[i],
                    target=self.labels_[j],
                )
                self.edges_.append(edge)
                if edge.significant:
                    self.weights_[i, j] = edge.f_value
        return self


def gc_matrix(panel, alpha: float = 0.01, p_max: int = 20, order: int | None = None):
    """Granger adjacency matrix over the active columns of a return panel.

    Returns an ``AdjacencyMatrix`` whose labels are the active,
    non-degenerate tickers; excluded columns are recorded on the result.
    """
    from .network import AdjacencyMatrix  # deferred: network imports GcEdge

    active_idx = np.flatnonzero(np.asarray(panel.active))
    values = panel.values[:, active_idx]
    labels = [panel.labels[j] for j in active_idx]
    est = GrangerNetwork(alpha=alpha, p_max=p_max, order=order)
    est.fit(values, labels=labels)
    matrix = AdjacencyMatrix(
        window_id=panel.window_id,
        labels=est.labels_,
        weights=est.weights_,
        alpha=alpha,
        excluded=tuple(est.excluded_),
    )
    return matrix, est.edges_


def write_edges_csv(path, window_id: int, edges: Sequence[GcEdge], significant_only: bool = True) -> None:
    """Write the per-window edge list: one row per ordered pair.

    With ``significant_only`` (the default) only pairs with nonzero
    thresholded weight appear, which is the published edge-list format;
    the full per-pair statistics file uses the same schema with
    ``significant_only=False``.
    """
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("window,source,target,f_value,p_value,order_p,order_q\n")
        for e in edges:
            if significant_only and not e.significant:
                continue
            fh.write(
                f"{window_id},{e.source},{e.target},{e.f_value!r},{e.p_value!r},{e.order_p},{e.order_q}\n"
            )


def read_edges_csv(path, alpha: float = 0.01) -> tuple[int | None, list[GcEdge]]:
    """Read an edge-list or pair-statistics CSV back into GcEdge records."""
    edges: list[GcEdge] = []
    window_id: int | None = None
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("window,"):
            raise ValueError(f"{path}: unexpected edge-list header")
        for line in fh:
            w, src, dst, f, pv, op, oq = line.rstrip("\n").split(",")
            window_id = int(w)
            p_value = float(pv)
            edges.append(
                GcEdge(
                    source=src,
                    target=dst,
                    f_value=float(f),
                    p_value=p_value,
                    order_p=int(op),
                    order_q=int(oq),
                    significant=bool(p_value < alpha),
                )
            )
    return window_id, edges
