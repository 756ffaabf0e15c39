"""Ground-truth generators and analytic oracles for validation.

Coupled VAR processes with closed-form Granger strength, planted
redundant/synergistic constructions, and the stationary covariance solved
from the discrete Lyapunov relation.  All generation uses the PCG64
generator so that seeds determine output across platforms; parallel
streams use its jump-ahead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import linalg

from .ingest import ReturnPanel

PRNG_NAME = "pcg64"
BURN_IN = 1000


@dataclass(frozen=True)
class CouplingSpec:
    """A linear VAR system: (source, target, lag) -> coefficient.

    ``noise_variances`` are the innovation variances per variable.  The
    spec must be stationary (companion spectral radius < 1).
    """

    n_vars: int
    couplings: Mapping[tuple[int, int, int], float]
    noise_variances: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "couplings", dict(self.couplings))
        if len(self.noise_variances) != self.n_vars:
            raise ValueError("need one noise variance per variable")
        if any(v <= 0 for v in self.noise_variances):
            raise ValueError("noise variances must be positive")
        for (src, tgt, lag) in self.couplings:
            if not (0 <= src < self.n_vars and 0 <= tgt < self.n_vars):
                raise ValueError(f"coupling ({src},{tgt},{lag}) out of range")
            if lag < 1:
                raise ValueError("coupling lags must be >= 1")

    @property
    def max_lag(self) -> int:
        return max((lag for (_, _, lag) in self.couplings), default=1)

    def lag_matrix(self, lag: int) -> np.ndarray:
        """A_lag with entry (target, source)."""
        A = np.zeros((self.n_vars, self.n_vars))
        for (src, tgt, l), coeff in self.couplings.items():
            if l == lag:
                A[tgt, src] = coeff
        return A

    def companion(self) -> np.ndarray:
        n, L = self.n_vars, self.max_lag
        comp = np.zeros((n * L, n * L))
        for l in range(1, L + 1):
            comp[:n, (l - 1) * n : l * n] = self.lag_matrix(l)
        if L > 1:
            comp[n:, : n * (L - 1)] = np.eye(n * (L - 1))
        return comp

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.companion())).max())


def stationary_covariance(spec: CouplingSpec) -> np.ndarray:
    """Zero-lag stationary covariance from the discrete Lyapunov relation."""
    if spec.spectral_radius() >= 1:
        raise ValueError("spec is not stationary")
    n, L = spec.n_vars, spec.max_lag
    F = spec.companion()
    Q = np.zeros((n * L, n * L))
    Q[:n, :n] = np.diag(spec.noise_variances)
    full = linalg.solve_discrete_lyapunov(F, Q)
    return full[:n, :n]


def gen_var(spec: CouplingSpec, T: int, window_id: int = 0) -> ReturnPanel:
    """Simulate a stationary VAR sample after a 1000-step burn-in."""
    if T < 1000:
        raise ValueError("need T >= 1000")
    radius = spec.spectral_radius()
    if radius >= 1:
        raise ValueError(f"spec is not stationary (spectral radius {radius:.3f})")
    n, L = spec.n_vars, spec.max_lag
    lag_mats = [spec.lag_matrix(l) for l in range(1, L + 1)]
    scales = np.sqrt(np.asarray(spec.noise_variances))

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    total = BURN_IN + T
    eps = rng.standard_normal((total, n)) * scales
    if not spec.couplings:
        values = eps[BURN_IN:]
    else:
        out = np.zeros((total, n))
        for t in range(total):
            x = eps[t].copy()
            for l, A in enumerate(lag_mats, start=1):
                if t - l >= 0:
                    x += A @ out[t - l]
            out[t] = x
        values = out[BURN_IN:]
    labels = tuple(f"V{i}" for i in range(n))
    return ReturnPanel(
        window_id=window_id,
        labels=labels,
        values=values,
        active=np.ones(n, dtype=bool),
    )


def gen_planted_highorder(
    kind: str,
    n_extra: int,
    T: int,
    seed: int = 0,
) -> tuple[ReturnPanel, tuple[str, ...], str]:
    """Panel with a planted high-order structure toward a target.

    ``synergistic``: the target's future is the sum of two independent
    source pasts plus small noise.  ``redundant``: two sources are noisy
    copies of a latent driver whose past drives the target.  ``n_extra``
    independent distractor columns are appended.  Returns the panel, the
    planted member labels and the target label.
    """
    if kind not in ("redundant", "synergistic"):
        raise ValueError("kind must be 'redundant' or 'synergistic'")
    if T < 10_000:
        raise ValueError("need T >= 10000")
    rng = np.random.Generator(np.random.PCG64(seed))

    if kind == "synergistic":
        raw1 = rng.standard_normal(T + 1)
        raw2 = rng.standard_normal(T + 1)
        x1 = raw1[1:]
        x2 = raw2[1:]
        y = raw1[:T] + raw2[:T] + 0.1 * rng.standard_normal(T)
    else:
        z = rng.standard_normal(T + 1)
        x1 = z[1:] + 0.5 * rng.standard_normal(T)
        x2 = z[1:] + 0.5 * rng.standard_normal(T)
        y = z[:T] + 0.5 * rng.standard_normal(T)

    columns = [y, x1, x2]
    labels = ["Y", "X1", "X2"]
    for k in range(n_extra):
        columns.append(rng.standard_normal(T))
        labels.append(f"D{k + 1}")
    panel = ReturnPanel(
        window_id=0,
        labels=tuple(labels),
        values=np.column_stack(columns),
        active=np.ones(len(labels), dtype=bool),
    )
    return panel, ("X1", "X2"), "Y"


def analytic_var_gc(spec: CouplingSpec, source: int, target: int) -> float:
    """Exact population Granger strength for the bivariate lag-1 family.

    Supported: two variables, the source white (no incoming couplings),
    couplings restricted to the source->target and target->target lag-1
    terms.  The reduced model's innovation variance is then
    ``b^2 * var_x + var_y``, giving ``ln((b^2 var_x + var_y) / var_y)``.
    """
    if spec.n_vars != 2 or source == target:
        raise ValueError("analytic form covers distinct variables of a bivariate spec")
    allowed = {(source, target, 1), (target, target, 1)}
    extra = set(spec.couplings) - allowed
    if extra:
        raise ValueError(
            f"spec outside the supported family (couplings {sorted(extra)}); "
            "estimate by Monte Carlo instead"
        )
    a = spec.couplings.get((target, target, 1), 0.0)
    if abs(a) >= 1:
        raise ValueError("target autoregression must be stationary")
    b = spec.couplings.get((source, target, 1), 0.0)
    var_x = spec.noise_variances[source]
    var_y = spec.noise_variances[target]
    return math.log((b * b * var_x + var_y) / var_y)
