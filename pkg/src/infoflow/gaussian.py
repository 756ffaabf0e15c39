"""Gaussian (linear) information-theoretic primitives.

All quantities are computed from log-determinants of a sample covariance
matrix and are expressed in nats.  The covariance carries labelled
variables so that entropies of arbitrary subsets can be requested by name.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, DegenerateDataError
from .validation import as_float_matrix, check_labels

LOG_2PIE = math.log(2.0 * math.pi * math.e)

# Nonnegative quantities this close to zero are rounding noise and clamp to 0;
# anything more negative is treated as an internal inconsistency.
NONNEG_TOL = 1e-10

# Tolerance for cross-checking algebraically equivalent formulas.
IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class RidgePolicy:
    """When and how to regularize a near-singular covariance.

    A diagonal ridge of ``lam * trace/d`` is added only when the condition
    number exceeds ``cond_threshold``.
    """

    lam: float = 1e-8
    cond_threshold: float = 1e10


DEFAULT_RIDGE = RidgePolicy()


@dataclass(frozen=True)
class CovModel:
    """A labelled sample covariance over a set of variables.

    Parameters
    ----------
    labels : tuple of str
        Unique variable names, one per row/column of ``matrix``.
    matrix : ndarray of shape (d, d)
        Symmetric covariance, positive definite after any ridge.
    sample_count : int
        Number of observations the covariance was estimated from.
    ridge_applied : float
        Diagonal increment that was added for conditioning (0.0 if none).
    """

    labels: tuple[str, ...]
    matrix: np.ndarray
    sample_count: int
    ridge_applied: float = 0.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError("covariance labels must be unique")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance matrix must be square")
        if m.shape[0] != len(labels):
            raise ValueError("label count does not match matrix dimension")
        scale = np.abs(m).max()
        if scale > 0 and np.abs(m - m.T).max() > 1e-12 * scale:
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @property
    def dim(self) -> int:
        return len(self.labels)

    def indices(self, subset: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self._index[lab] for lab in subset], dtype=int)
        except KeyError as err:
            raise KeyError(f"unknown variable {err.args[0]!r}") from None

    def submatrix(self, subset: Sequence[str]) -> np.ndarray:
        idx = self.indices(subset)
        return self.matrix[np.ix_(idx, idx)]


def estimate_covariance(
    values,
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> CovModel:
    """Column-mean-removed sample covariance (divisor T-1) with conditioning.

    Parameters
    ----------
    values : array-like of shape (T, d)
        Observations in rows, variables in columns; requires T > d.
    labels : sequence of str, optional
        Variable names; defaults to V0..V{d-1}.
    policy : RidgePolicy
        Governs the diagonal ridge added for ill-conditioned matrices.

    Raises
    ------
    DegenerateDataError
        If any column has zero variance (the caller must exclude it).
    """
    X = as_float_matrix(values, min_rows=2, name="values")
    T, d = X.shape
    if T <= d:
        raise ValueError(f"need more observations than variables, got T={T}, d={d}")
    labels = check_labels(labels, d)

    variances = X.var(axis=0, ddof=1)
    dead = np.flatnonzero(variances == 0.0)
    if dead.size:
        raise DegenerateDataError(
            "zero-variance column(s): " + ", ".join(labels[j] for j in dead)
        )

    cov = np.cov(X, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = (cov + cov.T) / 2.0

    ridge = 0.0
    if d > 1:
        cond = np.linalg.cond(cov)
        if not np.isfinite(cond) or cond > policy.cond_threshold:
            ridge = policy.lam * np.trace(cov) / d
            cov = cov + ridge * np.eye(d)
    return CovModel(labels=labels, matrix=cov, sample_count=T, ridge_applied=ridge)


def _logdet(cov: CovModel, subset: Sequence[str]) -> float:
    sub = cov.submatrix(subset)
    sign, logdet = np.linalg.slogdet(sub)
    if sign <= 0:
        raise DegenerateDataError(
            f"degenerate subset {tuple(subset)!r}: covariance not positive definite"
        )
    return float(logdet)


def _clamp_nonneg(value: float, what: str) -> float:
    if value >= 0.0:
        return value
    if value > -NONNEG_TOL:
        return 0.0
    raise ConsistencyError(f"{what} came out negative beyond tolerance: {value!r}")


def gaussian_entropy(cov: CovModel, subset: Sequence[str]) -> float:
    """Differential entropy of a variable subset, in nats.

    ``H(S) = 0.5 * ln((2*pi*e)^|S| * det(cov_S))``.
    """
    subset = tuple(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    return 0.5 * (len(subset) * LOG_2PIE + _logdet(cov, subset))


def mutual_information(cov: CovModel, a: Sequence[str], b: Sequence[str]) -> float:
    """Mutual information I(A; B) = H(A) + H(B) - H(A,B), in nats."""
    a, b = tuple(a), tuple(b)
    if not a or not b:
        raise ValueError("both subsets must be nonempty")
    if set(a) & set(b):
        raise ValueError("subsets must be disjoint")
    mi = gaussian_entropy(cov, a) + gaussian_entropy(cov, b) - gaussian_entropy(cov, a + b)
    return _clamp_nonneg(mi, "mutual information")


def conditional_mi(
    cov: CovModel,
    a: Sequence[str],
    b: Sequence[str],
    c: Sequence[str] = (),
) -> float:
    """Conditional mutual information I(A; B | C), in nats.

    Reduces to ``mutual_information`` when the conditioning set is empty.
    """
    a, b, c = tuple(a), tuple(b), tuple(c)
    if not c:
        return mutual_information(cov, a, b)
    if not a or not b:
        raise ValueError("A and B must be nonempty")
    sets = [set(a), set(b), set(c)]
    if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
        raise ValueError("A, B, C must be pairwise disjoint")
    cmi = (
        gaussian_entropy(cov, a + c)
        + gaussian_entropy(cov, b + c)
        - gaussian_entropy(cov, a + b + c)
        - gaussian_entropy(cov, c)
    )
    return _clamp_nonneg(cmi, "conditional mutual information")


def total_correlation(cov: CovModel, subset: Sequence[str]) -> float:
    """Total correlation of a subset: sum of marginal entropies minus joint."""
    subset = tuple(subset)
    if len(subset) < 2:
        raise ValueError("total correlation needs at least 2 variables")
    singles = sum(gaussian_entropy(cov, (lab,)) for lab in subset)
    tc = singles - gaussian_entropy(cov, subset)
    return _clamp_nonneg(tc, "total correlation")


def dual_total_correlation(cov: CovModel, subset: Sequence[str]) -> float:
    """Dual total correlation: joint entropy minus summed conditional entropies.

    Computed as ``sum_k H(S \\ k) - (n-1) * H(S)``.
    """
    subset = tuple(subset)
    n = len(subset)
    if n < 2:
        raise ValueError("dual total correlation needs at least 2 variables")
    joint = gaussian_entropy(cov, subset)
    loo = sum(
        gaussian_entropy(cov, subset[:k] + subset[k + 1 :]) for k in range(n)
    )
    dtc = loo - (n - 1) * joint
    return _clamp_nonneg(dtc, "dual total correlation")


def o_information(cov: CovModel, subset: Sequence[str]) -> float:
    """Balance of redundant vs. synergistic dependency in a subset, in nats.

    Positive values indicate redundancy-dominated, negative values
    synergy-dominated dependence; exactly 0 for any pair.  Two equivalent
    forms are evaluated and cross-checked before returning.
    """
    subset = tuple(subset)
    n = len(subset)
    if n < 2:
        raise ValueError("o_information needs at least 2 variables")
    primary = total_correlation(cov, subset) - dual_total_correlation(cov, subset)

    joint = gaussian_entropy(cov, subset)
    alt = (n - 2) * joint
    for k in range(n):
        alt += gaussian_entropy(cov, (subset[k],)) - gaussian_entropy(
            cov, subset[:k] + subset[k + 1 :]
        )
    if abs(primary - alt) > IDENTITY_TOL:
        raise ConsistencyError(
            f"o_information forms disagree: {primary!r} vs {alt!r}"
        )
    return primary
