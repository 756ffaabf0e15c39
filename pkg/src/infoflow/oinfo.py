"""Dynamic O-information toward a target and the best-multiplet search.

The search fixes a target column, scans all source pairs exhaustively,
then grows the most redundant (argmax) and most synergistic (argmin)
multiplets greedily one member at a time, keeping the nesting property.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .errors import ConsistencyError, DegenerateDataError
from .gaussian import (
    DEFAULT_RIDGE,
    CovModel,
    RidgePolicy,
    conditional_mi,
    estimate_covariance,
    mutual_information,
    o_information,
)
from .granger import embed
from .validation import check_labels, usable_columns, zscore

logger = logging.getLogger(__name__)

KINDS = ("redundant", "synergistic")

_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class MultipletResult:
    """Best source multiplet of one size for one target and kind.

    ``value`` is the dynamic O-information of the selected member set
    (in nats): the maximum over the candidates scanned for
    ``kind="redundant"``, the minimum for ``kind="synergistic"``.
    """

    window_id: int
    target: str
    kind: str
    size: int
    members: tuple[str, ...]
    value: float
    lag_p: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if len(set(self.members)) != len(self.members):
            raise ValueError("multiplet members must be distinct")
        if self.target in self.members:
            raise ValueError("target cannot be a member of its own multiplet")
        if self.size != len(self.members) or self.size < 2:
            raise ValueError("size must equal the member count and be >= 2")


def o_info_gain(cov: CovModel, sources: Sequence[str], target: str) -> float:
    """Change in O-information from adjoining ``target`` to ``sources``.

    ``(1 - n) * I(y; S) + sum_k I(y; S minus k)`` for ``n = |S|``; satisfies
    ``o_information(S + y) = o_information(S) + gain``, which is verified
    internally.
    """
    sources = tuple(sources)
    n = len(sources)
    if n < 2:
        raise ValueError("need at least 2 source variables")
    if target in sources:
        raise ValueError("target must not be one of the sources")

    gain = (1 - n) * mutual_information(cov, (target,), sources)
    for k in range(n):
        gain += mutual_information(cov, (target,), sources[:k] + sources[k + 1 :])

    joint = o_information(cov, sources + (target,))
    base = o_information(cov, sources)
    if abs(joint - (base + gain)) > _IDENTITY_TOL:
        raise ConsistencyError(
            f"o-information gain identity violated: {joint!r} vs {base + gain!r}"
        )
    return gain


class _TargetFrame:
    """Lag-embedded covariance for one target and a candidate source pool.

    Columns: target future, then one lag block per candidate, then the
    target's own lag block; all conditional MIs for the multiplet search
    are log-determinant ratios of this single covariance.
    """

    def __init__(
        self,
        values: np.ndarray,
        labels: Sequence[str],
        target: str,
        candidates: Sequence[str],
        p: int,
        policy: RidgePolicy = DEFAULT_RIDGE,
    ):
        if target in candidates:
            raise ValueError("target cannot be its own source candidate")
        col = {lab: i for i, lab in enumerate(labels)}
        T = values.shape[0]
        if T <= p * (len(candidates) + 1) + 10:
            raise DegenerateDataError(
                f"{T} samples are too few for lag {p} with {len(candidates)} sources"
            )
        self.target = target
        self.p = p
        self.candidates = tuple(candidates)

        ty = zscore(values[:, col[target]], target)
        blocks = [ty[p:, None]]
        names: list[str] = [target]
        self.lag_names: dict[str, tuple[str, ...]] = {}
        for lab in self.candidates:
            blocks.append(embed(zscore(values[:, col[lab]], lab), p))
            group = tuple(f"{lab}@-{m}" for m in range(1, p + 1))
            self.lag_names[lab] = group
            names.extend(group)
        blocks.append(embed(ty, p))
        self.past = tuple(f"{target}@-{m}" for m in range(1, p + 1))
        names.extend(self.past)
        self.cov = estimate_covariance(np.hstack(blocks), names, policy=policy)

    def _lags(self, members: Iterable[str]) -> tuple[str, ...]:
        out: tuple[str, ...] = ()
        for lab in members:
            out += self.lag_names[lab]
        return out

    def doinfo(self, members: Sequence[str]) -> float:
        """Dynamic O-information of a member set toward the target."""
        members = tuple(members)
        n = len(members)
        if n < 2:
            raise ValueError("need at least 2 sources")
        value = (1 - n) * conditional_mi(
            self.cov, (self.target,), self._lags(members), self.past
        )
        for k in range(n):
            rest = members[:k] + members[k + 1 :]
            value += conditional_mi(self.cov, (self.target,), self._lags(rest), self.past)
        return value


def _panel_arrays(panel, labels=None) -> tuple[np.ndarray, tuple[str, ...], int]:
    """Accept a ReturnPanel or a plain matrix; return active values + labels."""
    if hasattr(panel, "values") and hasattr(panel, "active"):
        idx = np.flatnonzero(np.asarray(panel.active))
        values = np.asarray(panel.values, dtype=np.float64)[:, idx]
        labs = tuple(panel.labels[j] for j in idx)
        return values, labs, panel.window_id
    values = np.asarray(panel, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("panel values must be 2-dimensional")
    return values, check_labels(labels, values.shape[1]), 0


def dynamic_o_information(
    panel,
    target: str,
    sources: Sequence[str],
    p: int = 1,
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> float:
    """Dynamic O-information from a source multiplet toward a target.

    Builds the joint covariance over the target future, the lagged blocks
    of each source (orders 1..p) and the target's own lagged block, then
    evaluates ``(1-n) * I(y; S_lags | Y_past) + sum_k I(y; S_lags minus k |
    Y_past)``.  Positive values indicate redundant, negative synergistic
    information flow.
    """
    values, labs, _ = _panel_arrays(panel, labels)
    sources = tuple(sources)
    frame = _TargetFrame(values, labs, target, sources, p, policy=policy)
    return frame.doinfo(sources)


def surrogate_doinfo(
    panel,
    target: str,
    sources: Sequence[str],
    p: int = 1,
    n_surrogates: int = 100,
    min_shift: int = 100,
    seed: int = 0,
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> np.ndarray:
    """Null distribution of the dynamic O-information via circular shifts.

    Each surrogate rolls every source column by an independent uniform
    offset of at least ``min_shift`` samples, preserving autocorrelation
    while destroying cross-dependence with the target.
    """
    values, labs, _ = _panel_arrays(panel, labels)
    sources = tuple(sources)
    col = {lab: i for i, lab in enumerate(labs)}
    T = values.shape[0]
    if T <= 2 * min_shift:
        raise ValueError("series too short for the requested minimum shift")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty(n_surrogates)
    for s in range(n_surrogates):
        shifted = values.copy()
        for lab in sources:
            offset = int(rng.integers(min_shift, T - min_shift))
            shifted[:, col[lab]] = np.roll(values[:, col[lab]], offset)
        frame = _TargetFrame(shifted, labs, target, sources, p, policy=policy)
        out[s] = frame.doinfo(sources)
    return out


def _better(kind: str, candidate: float, incumbent: float) -> bool:
    if kind == "redundant":
        return candidate > incumbent
    return candidate < incumbent


def _scan_pairs(frame: _TargetFrame, kind: str, window_id: int) -> MultipletResult:
    candidates = sorted(frame.candidates)
    if len(candidates) < 2:
        raise DegenerateDataError(
            f"target {frame.target!r} has fewer than 2 candidate sources"
        )
    best_members: tuple[str, ...] | None = None
    best_value = 0.0
    for pair in itertools.combinations(candidates, 2):
        value = frame.doinfo(pair)
        if best_members is None or _better(kind, value, best_value):
            best_members, best_value = pair, value
    return MultipletResult(
        window_id=window_id,
        target=frame.target,
        kind=kind,
        size=2,
        members=best_members,
        value=best_value,
        lag_p=frame.p,
    )


def _extend(frame: _TargetFrame, current: MultipletResult, kind: str) -> MultipletResult:
    remaining = sorted(set(frame.candidates) - set(current.members))
    if not remaining:
        raise DegenerateDataError("candidate pool exhausted; cannot extend multiplet")
    best_members: tuple[str, ...] | None = None
    best_value = 0.0
    for extra in remaining:
        members = tuple(sorted(current.members + (extra,)))
        value = frame.doinfo(members)
        if best_members is None or _better(kind, value, best_value):
            best_members, best_value = members, value
    return MultipletResult(
        window_id=current.window_id,
        target=current.target,
        kind=kind,
        size=current.size + 1,
        members=best_members,
        value=best_value,
        lag_p=current.lag_p,
    )


def best_pair(
    panel,
    target: str,
    p: int = 1,
    kind: str = "synergistic",
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> MultipletResult:
    """Exhaustive scan for the extremal source pair toward a target.

    Returns the argmax over all unordered pairs for ``kind="redundant"``
    and the argmin for ``kind="synergistic"``; ties break toward the
    lexicographically smallest member labels.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    values, labs, window_id = _panel_arrays(panel, labels)
    candidates = [lab for lab in labs if lab != target]
    frame = _TargetFrame(values, labs, target, candidates, p, policy=policy)
    return _scan_pairs(frame, kind, window_id)


def greedy_extend(
    panel,
    target: str,
    current: MultipletResult,
    kind: str | None = None,
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> MultipletResult:
    """Grow a multiplet by the extremal single extension (nesting kept)."""
    kind = current.kind if kind is None else kind
    if target != current.target:
        raise ValueError("target does not match the multiplet being extended")
    values, labs, _ = _panel_arrays(panel, labels)
    candidates = [lab for lab in labs if lab != target]
    frame = _TargetFrame(values, labs, target, candidates, current.lag_p, policy=policy)
    return _extend(frame, current, kind)


def multiplet_scan(
    panel,
    targets: Sequence[str] | None = None,
    p: int = 1,
    n_max: int = 5,
    labels: Sequence[str] | None = None,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> list[MultipletResult]:
    """Best multiplets of sizes 2..n_max, both kinds, for each target.

    Per-target failures are logged and skipped so one degenerate column
    cannot abort a whole window; results are ordered by
    (window, target, kind, size).
    """
    values, labs, window_id = _panel_arrays(panel, labels)
    usable, excluded = usable_columns(values, labs)
    for lab, reason in excluded:
        logger.warning("column %s excluded from multiplet scan: %s", lab, reason)
    pool = [labs[j] for j in usable]
    values = values[:, usable]
    if targets is None:
        targets = pool
    results: list[MultipletResult] = []
    for target in targets:
        if target not in pool:
            logger.warning("target %s unavailable (inactive or degenerate); skipped", target)
            continue
        candidates = [lab for lab in pool if lab != target]
        if len(candidates) < 2:
            logger.warning("target %s has fewer than 2 candidates; skipped", target)
            continue
        cap = min(n_max, len(candidates))
        if cap < n_max:
            logger.warning(
                "target %s: multiplet size capped at %d (only %d candidates)",
                target,
                cap,
                len(candidates),
            )
        try:
            frame = _TargetFrame(values, pool, target, candidates, p, policy=policy)
            for kind in KINDS:
                node = _scan_pairs(frame, kind, window_id)
                results.append(node)
                while node.size < cap:
                    node = _extend(frame, node, kind)
                    results.append(node)
        except (DegenerateDataError, ConsistencyError) as err:
            logger.warning("target %s failed: %s", target, err)
            continue
    results.sort(key=lambda r: (r.window_id, r.target, r.kind, r.size))
    return results


class MultipletSearch(BaseEstimator):
    """Greedy redundant/synergistic multiplet search over panel columns.

    Parameters
    ----------
    lag : int
        Embedding order used for every source and the target past.
    n_max : int
        Largest multiplet size to grow to (capped by the candidate count).
    targets : sequence of str, optional
        Restrict the scan to these targets; default is every usable column.

    Attributes
    ----------
    results_ : list of MultipletResult
    labels_ : tuple of str
    """

    def __init__(self, lag: int = 1, n_max: int = 5, targets: Sequence[str] | None = None):
        self.lag = lag
        self.n_max = n_max
        self.targets = targets

    def fit(self, X, y=None, labels: Sequence[str] | None = None):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        X = check_array(X, dtype=np.float64, ensure_all_finite=False, ensure_min_features=3)
        self.n_features_in_ = X.shape[1]
        self.labels_ = check_labels(labels, X.shape[1])
        self.results_ = multiplet_scan(
            X, targets=self.targets, p=self.lag, n_max=self.n_max, labels=self.labels_
        )
        return self


def membership_counts(
    results: Sequence[MultipletResult],
    meta: Mapping[str, object] | None = None,
) -> list[tuple[str, str, str, int]]:
    """Count how often each asset appears in stored best multiplets.

    Every appearance counts once per stored size level.  Rows are
    ``(kind, ticker, asset_class, count)`` sorted by kind, then count
    descending, then ticker; unregistered assets get class ``unknown``.
    """
    if not results:
        return []
    counts: dict[tuple[str, str], int] = {}
    for res in results:
        for member in res.members:
            key = (res.kind, member)
            counts[key] = counts.get(key, 0) + 1
    rows = []
    for (kind, ticker), count in counts.items():
        cls = _asset_class(ticker, meta)
        rows.append((kind, ticker, cls, count))
    rows.sort(key=lambda r: (r[0], -r[3], r[1]))
    return rows


def _asset_class(ticker: str, meta) -> str:
    if meta is not None and ticker in meta:
        entry = meta[ticker]
        return getattr(entry, "asset_class", entry if isinstance(entry, str) else "unknown")
    if meta is not None:
        logger.warning("asset %s missing from registry; classed as unknown", ticker)
    return "unknown"


CLASS_COLUMNS = ("coin", "token", "stablecoin", "fiat", "unknown")


def class_fractions(
    results: Sequence[MultipletResult],
    meta: Mapping[str, object] | None = None,
) -> list[tuple[str, int, dict[str, float]]]:
    """Mean class composition of best multiplets per (kind, size).

    For each result the member shares by class sum to one; the table
    reports the average share over all results of that kind and size.
    """
    if not results:
        return []
    acc: dict[tuple[str, int], list[dict[str, float]]] = {}
    for res in results:
        shares = {c: 0.0 for c in CLASS_COLUMNS}
        for member in res.members:
            shares[_asset_class(member, meta)] += 1.0 / res.size
        acc.setdefault((res.kind, res.size), []).append(shares)
    rows = []
    for (kind, size), share_list in sorted(acc.items()):
        mean = {
            c: sum(s[c] for s in share_list) / len(share_list) for c in CLASS_COLUMNS
        }
        rows.append((kind, size, mean))
    return rows


def write_multiplets_csv(path, results: Sequence[MultipletResult]) -> None:
    """One record per stored multiplet: window,target,kind,size,value,members."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("window,target,kind,size,value,members\n")
        for r in results:
            fh.write(
                f"{r.window_id},{r.target},{r.kind},{r.size},{r.value!r},{'|'.join(r.members)}\n"
            )


def read_multiplets_csv(path, lag_p: int = 1) -> list[MultipletResult]:
    results = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("window,"):
            raise ValueError(f"{path}: unexpected multiplet header")
        for line in fh:
            w, target, kind, size, value, members = line.rstrip("\n").split(",")
            results.append(
                MultipletResult(
                    window_id=int(w),
                    target=target,
                    kind=kind,
                    size=int(size),
                    members=tuple(members.split("|")),
                    value=float(value),
                    lag_p=lag_p,
                )
            )
    return results


def write_membership_csv(path, rows: Sequence[tuple[str, str, str, int]]) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("kind,ticker,class,count\n")
        for kind, ticker, cls, count in rows:
            fh.write(f"{kind},{ticker},{cls},{count}\n")


def write_class_fractions_csv(path, rows: Sequence[tuple[str, int, dict[str, float]]]) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("kind,size," + ",".join(CLASS_COLUMNS) + "\n")
        for kind, size, mean in rows:
            vals = ",".join(repr(mean[c]) for c in CLASS_COLUMNS)
            fh.write(f"{kind},{size},{vals}\n")
