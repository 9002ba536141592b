"""Cox proportional hazards with elastic-net regularization.

Partial likelihood and gradient use the Breslow convention: the risk set for
an event at time t is every patient with Y >= t, ties included. Censored
patients contribute only through risk sets. The fitter is proximal gradient
with a halving line search and soft-thresholding, so the penalized objective
never increases across accepted steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SurvivalLabels


@dataclass(frozen=True, eq=False)
class BaselineHazard:
    """Step-function cumulative baseline hazard at distinct event times."""

    times: np.ndarray
    cum_hazard: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        h = np.asarray(self.cum_hazard, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "cum_hazard", h)
        if t.shape != h.shape or t.ndim != 1:
            raise ValueError("times and cum_hazard must be aligned 1-d arrays")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("baseline times must be strictly increasing")
        if h.size and (h[0] < 0 or np.any(np.diff(h) < 0)):
            raise ValueError("cumulative hazard must be nonnegative and non-decreasing")


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    times: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.survival, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "survival", s)
        if t.shape != s.shape:
            raise ValueError("times and survival must be aligned")
        if s.size and (np.any(s < 0) or np.any(s > 1) or np.any(np.diff(s) > 1e-12)):
            raise ValueError("survival values must be non-increasing within [0, 1]")


@dataclass(frozen=True, eq=False)
class CoxModel:
    beta: np.ndarray
    baseline: BaselineHazard | None
    lam: float
    alpha: float

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", b)
        if not np.all(np.isfinite(b)):
            raise ValueError("coefficients must be finite")


class RiskSets:
    """Sorted views and tie-group bounds reused across likelihood calls.

    ``first``/``last`` give, for each sorted position, the bounds of its
    tie group, so suffix sums starting at ``first`` cover everyone with
    Y >= that time.
    """

    def __init__(self, labels: SurvivalLabels):
        if not np.any(labels.observed):
            raise ValueError("no observed events")
        y = labels.times
        order = np.argsort(y, kind="stable")
        self.n = y.size
        self.order = order
        self.y = y[order]
        self.events = labels.observed[order]
        self.first = np.searchsorted(self.y, self.y, side="left")
        self.last = np.searchsorted(self.y, self.y, side="right") - 1

    def nll(self, eta: np.ndarray) -> float:
        """Negative Cox partial log likelihood at linear predictor eta
        (original patient order).

        Suffix logsumexps are computed max-shifted with a stable running
        accumulation; a plain shifted cumsum can underflow to zero for
        events far below the maximum, which would poison a line search
        with a spurious -inf objective.
        """
        es = np.asarray(eta, dtype=float)[self.order]
        c = es.max()
        acc = np.logaddexp.accumulate((es - c)[::-1])[::-1]
        lse = acc[self.first] + c
        return float(np.sum(lse[self.events]) - np.sum(es[self.events]))

    def eta_gradient(self, eta: np.ndarray) -> np.ndarray:
        """Gradient of nll with respect to eta, in original patient order."""
        es = np.asarray(eta, dtype=float)[self.order]
        c = es.max()
        e = np.exp(es - c)
        s0 = np.cumsum(e[::-1])[::-1]
        s0 = np.maximum(s0, np.finfo(float).tiny)  # guard suffix underflow
        inc = np.where(self.events, 1.0 / s0[self.first], 0.0)
        cum = np.cumsum(inc)
        g_sorted = e * cum[self.last] - self.events.astype(float)
        g = np.empty_like(g_sorted)
        g[self.order] = g_sorted
        return g


def cox_nll(beta: np.ndarray, Z: np.ndarray, labels: SurvivalLabels) -> float:
    """Sum over observed events of (-beta.z_i + log sum_{Y_j >= Y_i} exp(beta.z_j))."""
    Z = np.asarray(Z, dtype=float)
    return RiskSets(labels).nll(Z @ np.asarray(beta, dtype=float))


def cox_gradient(beta: np.ndarray, Z: np.ndarray, labels: SurvivalLabels) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    rs = RiskSets(labels)
    return Z.T @ rs.eta_gradient(Z @ np.asarray(beta, dtype=float))


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def elastic_net_penalty(beta: np.ndarray, lam: float, alpha: float) -> float:
    beta = np.asarray(beta, dtype=float)
    return lam * (alpha * float(np.abs(beta).sum())
                  + 0.5 * (1.0 - alpha) * float(beta @ beta))


def fit_elastic_net_cox(
    Z: np.ndarray,
    labels: SurvivalLabels,
    lam: float,
    alpha: float,
    tol: float = 1e-9,
    *,
    beta0: np.ndarray | None = None,
    max_iter: int = 10000,
    gtol: float | None = None,
    fit_baseline: bool = True,
) -> CoxModel:
    """Minimize cox_nll + lam * (alpha*||b||_1 + (1-alpha)/2*||b||_2^2).

    Proximal gradient: the ridge part rides with the smooth term, the L1
    part is handled by soft-thresholding. A step is accepted only when the
    quadratic majorization holds and the penalized objective does not
    increase. Stops on relative objective change below ``tol`` (or the
    prox-gradient norm below ``gtol`` when given).
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    Z = np.asarray(Z, dtype=float)
    rs = RiskSets(labels)
    k = Z.shape[1]
    beta = np.zeros(k) if beta0 is None else np.array(beta0, dtype=float)
    ridge = lam * (1.0 - alpha)
    l1 = lam * alpha

    def smooth(b):
        return rs.nll(Z @ b) + 0.5 * ridge * float(b @ b)

    def smooth_grad(b):
        return Z.T @ rs.eta_gradient(Z @ b) + ridge * b

    f = smooth(beta)
    F = f + l1 * float(np.abs(beta).sum())
    step = 1.0
    for _ in range(max_iter):
        g = smooth_grad(beta)
        s = step
        accepted = False
        halved = False
        for _ in range(100):
            cand = _soft_threshold(beta - s * g, s * l1)
            diff = cand - beta
            with np.errstate(over="ignore"):
                f_c = smooth(cand)
            bound = f + float(g @ diff) + float(diff @ diff) / (2.0 * s)
            if np.isfinite(f_c) and f_c <= bound + 1e-12 * max(1.0, abs(bound)):
                F_c = f_c + l1 * float(np.abs(cand).sum())
                if F_c <= F:  # strict monotonicity of the penalized objective
                    accepted = True
                    break
            s *= 0.5
            halved = True
            if s < 1e-20:
                break
        if not accepted:
            raise RuntimeError("line search diverged in elastic-net Cox fit")
        drop = F - F_c
        opt_norm = float(np.abs(diff).max()) / s if diff.size else 0.0
        beta, f, F = cand, f_c, F_c
        step = s if halved else min(s * 1.5, 1e8)
        if gtol is not None:
            # prox-gradient norm is the sole stopping rule when requested;
            # objective differences bottom out at float resolution first
            if opt_norm <= gtol:
                break
        elif drop <= tol * max(abs(F), 1e-12):
            break
    baseline = breslow_baseline(beta, Z, labels) if fit_baseline else None
    return CoxModel(beta, baseline, float(lam), float(alpha))


def breslow_baseline(beta: np.ndarray, Z: np.ndarray, labels: SurvivalLabels) -> BaselineHazard:
    """Cumulative baseline hazard: at each distinct event time, the number
    of events there divided by the risk set's total exp(beta.z)."""
    rs = RiskSets(labels)
    Z = np.asarray(Z, dtype=float)
    es = (Z @ np.asarray(beta, dtype=float))[rs.order]
    c = es.max()
    log_s0 = np.logaddexp.accumulate((es - c)[::-1])[::-1] + c
    event_pos = np.flatnonzero(rs.events)
    t_event = rs.y[event_pos]
    times, start = np.unique(t_event, return_index=True)
    d_e = np.bincount(np.searchsorted(times, t_event), minlength=times.size).astype(float)
    inc = np.exp(np.log(d_e) - log_s0[rs.first[event_pos[start]]])
    return BaselineHazard(times, np.cumsum(inc))


def predict_median(model: CoxModel, z: np.ndarray) -> tuple[float, bool]:
    """Smallest baseline time where predicted survival drops to <= 0.5.

    If the survival curve never reaches 0.5, returns the largest baseline
    time with the saturated flag set.
    """
    base = model.baseline
    if base is None or base.times.size == 0:
        raise ValueError("model has no baseline hazard")
    eta = float(np.dot(model.beta, np.asarray(z, dtype=float)))
    with np.errstate(over="ignore"):
        surv = np.exp(-base.cum_hazard * np.exp(eta))
    hit = np.flatnonzero(surv <= 0.5)
    if hit.size:
        return float(base.times[hit[0]]), False
    return float(base.times[-1]), True


def kaplan_meier(labels: SurvivalLabels) -> tuple[SurvivalCurve, float, bool]:
    """Product-limit estimator; returns (curve, median, saturated_flag).

    The median is the smallest event time with survival <= 0.5; when the
    curve never reaches 0.5 the largest time is returned flagged.
    """
    if len(labels) == 0:
        raise ValueError("empty labels")
    y = labels.times
    r = labels.observed
    times, d_at = np.unique(y[r], return_counts=True)
    if times.size == 0:
        return SurvivalCurve(times, times.astype(float)), float(y.max()), True
    y_sorted = np.sort(y)
    n_at = y.size - np.searchsorted(y_sorted, times, side="left")
    surv = np.cumprod(1.0 - d_at / n_at)
    hit = np.flatnonzero(surv <= 0.5)
    if hit.size:
        return SurvivalCurve(times, surv), float(times[hit[0]]), False
    return SurvivalCurve(times, surv), float(times[-1]), True
