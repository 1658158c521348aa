"""ARIMA(p, d, q) estimation by conditional sum of squares, plus order search.

The differenced series w follows

    w_t = delta + phi_1 w_{t-1} + ... + phi_p w_{t-p}
            + theta_1 e_{t-1} + ... + theta_q e_{t-q} + e_t

Residuals are computed recursively with presample residuals set to zero,
conditioning on the first p observations; the CSS objective is the sum of
squared residuals from t = p on.  Estimation is Nelder-Mead from the fixed
start (phi=0, theta=0, delta=mean(w)), which makes every fit deterministic.
``auto_arima`` picks d by a variance/autocorrelation heuristic, then searches
the (p, q) grid exhaustively and selects by AIC (BIC is reported alongside).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Forecast, ModelId, TimeSeries
from .optim import nelder_mead

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

__all__ = [
    "ArimaModel",
    "difference",
    "integrate",
    "css_loss",
    "fit_arima",
    "auto_arima",
    "forecast_arima",
]


def difference(values, d: int) -> np.ndarray:
    """Apply the first-difference operator d times (output length n - d)."""
    values = np.asarray(values, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be >= 0")
    if len(values) <= d:
        raise ValueError(f"need more than d={d} points, got {len(values)}")
    if d == 0:
        return values.copy()
    return np.diff(values, n=d)


def integrate(anchors, diffs, d: int) -> np.ndarray:
    """Invert d-fold differencing.

    ``anchors`` are the d trailing values of the original series immediately
    before the stretch covered by ``diffs``; the result is that stretch on the
    original scale, so integrate(x[i-d:i], difference(x, d)[i-d:], d) == x[i:].
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    if len(anchors) != d:
        raise ValueError(f"need exactly d={d} anchors, got {len(anchors)}")
    if d == 0:
        return diffs.copy()
    inner = integrate(np.diff(anchors), diffs, d - 1)
    return anchors[-1] + np.cumsum(inner)


# ---------------------------------------------------------------------------
# Residual recursion
# ---------------------------------------------------------------------------

def _residuals_py(w, phi, theta, delta):
    n = len(w)
    p = len(phi)
    q = len(theta)
    e = np.zeros(n)
    for t in range(p, n):
        pred = delta
        for i in range(p):
            pred += phi[i] * w[t - 1 - i]
        for j in range(q):
            idx = t - 1 - j
            if idx >= 0:
                pred += theta[j] * e[idx]
        e[t] = w[t] - pred
    return e


if _HAVE_NUMBA:
    _residuals_jit = njit(cache=True)(_residuals_py)
else:  # pragma: no cover
    _residuals_jit = _residuals_py


def _residuals(w: np.ndarray, phi: np.ndarray, theta: np.ndarray, delta: float) -> np.ndarray:
    return _residuals_jit(
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(phi, dtype=np.float64),
        np.ascontiguousarray(theta, dtype=np.float64),
        float(delta),
    )


def css_loss(params: dict, w, p: int, q: int) -> float:
    """Conditional sum of squares for ``params = {"phi", "theta", "delta"}``."""
    w = np.asarray(w, dtype=np.float64)
    if len(w) <= max(p, q):
        raise ValueError("series too short for the requested orders")
    phi = np.asarray(params.get("phi", ()), dtype=np.float64)
    theta = np.asarray(params.get("theta", ()), dtype=np.float64)
    if len(phi) != p or len(theta) != q:
        raise ValueError("parameter count does not match orders")
    e = _residuals(w, phi, theta, float(params.get("delta", 0.0)))
    return float(np.sum(e[p:] ** 2))


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArimaModel:
    p: int
    d: int
    q: int
    phi: tuple[float, ...]
    theta: tuple[float, ...]
    delta: float
    sigma2: float
    aic: float
    bic: float
    n_effective: int
    css: float
    warnings: tuple[str, ...] = ()

    @property
    def order(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "d": self.d, "q": self.q,
            "phi": list(self.phi), "theta": list(self.theta),
            "delta": self.delta, "sigma2": self.sigma2,
            "aic": self.aic, "bic": self.bic,
            "n_effective": self.n_effective, "css": self.css,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaModel":
        return cls(
            p=int(d["p"]), d=int(d["d"]), q=int(d["q"]),
            phi=tuple(float(v) for v in d["phi"]),
            theta=tuple(float(v) for v in d["theta"]),
            delta=float(d["delta"]), sigma2=float(d["sigma2"]),
            aic=float(d["aic"]), bic=float(d["bic"]),
            n_effective=int(d["n_effective"]), css=float(d["css"]),
            warnings=tuple(d.get("warnings", ())),
        )


def _min_root_modulus(coeffs_ascending: np.ndarray) -> float:
    # coeffs_ascending: polynomial c0 + c1 z + ... ; roots must lie outside
    # the unit circle for a stationary AR / invertible MA.
    roots = np.roots(coeffs_ascending[::-1])
    if len(roots) == 0:
        return np.inf
    return float(np.min(np.abs(roots)))


def _boundary_violation(coefs: np.ndarray, sign: float) -> float:
    """Distance inside the (non)stationarity boundary; 0 when safely outside.

    ``sign`` is -1 for the AR polynomial 1 - phi_1 z - ..., +1 for the MA
    polynomial 1 + theta_1 z + ....  Small coefficient sums are a sufficient
    stationarity condition, which skips the root computation for most of the
    search space.
    """
    if len(coefs) == 0 or float(np.sum(np.abs(coefs))) < 0.999:
        return 0.0
    poly = np.concatenate(([1.0], sign * coefs))
    return max(0.0, 1.001 - _min_root_modulus(poly))


def _ar_roots_stationary(phi: np.ndarray) -> bool:
    if len(phi) == 0:
        return True
    return _min_root_modulus(np.concatenate(([1.0], -phi))) > 1.0


def fit_arima(series: TimeSeries, p: int, d: int, q: int) -> ArimaModel:
    """Estimate an ARIMA(p, d, q) by minimizing the CSS objective.

    sigma2 is CSS / n_effective with n_effective = len(w) - p; AIC/BIC use
    the Gaussian-CSS surrogate n_eff * ln(sigma2) + penalty * (p + q + 1).
    Degenerate fits floor sigma2 at 1e-12 and flag it rather than fail.
    """
    values = series.values
    if len(values) - d <= p + q + 1:
        raise ValueError(
            f"series of length {len(values)} too short for ARIMA({p},{d},{q})"
        )
    w = difference(values, d)
    n_eff = len(w) - p
    # The CSS recursion is an unstable filter outside the stationary /
    # invertible region, where it can shrink in-sample residuals by pushing
    # error past the sample end; a continuous boundary penalty keeps the
    # search inside.
    scale = float(np.sum((w - np.mean(w)) ** 2)) + 1e-12

    def objective(x: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            e = _residuals(w, x[:p], x[p : p + q], x[-1])
            css = float(np.sum(e[p:] ** 2))
        if not math.isfinite(css):
            return 1e300
        viol = _boundary_violation(x[:p], -1.0) + _boundary_violation(x[p : p + q], 1.0)
        return css + scale * 100.0 * viol

    x0 = np.zeros(p + q + 1)
    x0[-1] = float(np.mean(w))
    result = nelder_mead(objective, x0)

    phi = tuple(float(v) for v in result.x[:p])
    theta = tuple(float(v) for v in result.x[p : p + q])
    delta = float(result.x[-1])
    css = css_loss({"phi": phi, "theta": theta, "delta": delta}, w, p, q)

    warnings: list[str] = []
    if not result.converged:
        warnings.append("non_convergence")
    sigma2 = css / n_eff
    if sigma2 < 1e-12:
        sigma2 = 1e-12
        warnings.append("sigma2_floored")
    if not _ar_roots_stationary(np.asarray(phi)):
        warnings.append("non_stationary")

    k = p + q + 1
    aic = n_eff * math.log(sigma2) + 2.0 * k
    bic = n_eff * math.log(sigma2) + math.log(n_eff) * k
    return ArimaModel(
        p=p, d=d, q=q, phi=phi, theta=theta, delta=delta,
        sigma2=float(sigma2), aic=float(aic), bic=float(bic),
        n_effective=n_eff, css=float(css), warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Automatic order selection
# ---------------------------------------------------------------------------

def _acf1(w: np.ndarray) -> float:
    w = w - np.mean(w)
    denom = float(np.sum(w * w))
    if denom == 0.0:
        return 0.0
    return float(np.sum(w[:-1] * w[1:]) / denom)


def select_d(values: np.ndarray, max_d: int = 2) -> int:
    """Smallest d whose differenced series looks stationary.

    d is accepted when the lag-1 autocorrelation is below 0.99, or when one
    more difference would not shrink the sample variance (differencing
    stationary noise inflates variance; only trend-like structure deflates
    it).  Rejecting only when both signs point at nonstationarity keeps
    ordinary positively-autocorrelated series at d=0 while a linear trend,
    whose variance collapses under differencing, is forced to d>=1.
    """
    values = np.asarray(values, dtype=np.float64)
    for d in range(max_d + 1):
        if len(values) <= d + 1:
            break
        w = difference(values, d)
        if len(w) < 2:
            break
        a1 = _acf1(w)
        var_now = float(np.var(w))
        var_next = float(np.var(np.diff(w)))
        if a1 < 0.99 or var_next >= var_now:
            return d
    return max_d


def _model_min_root(model: ArimaModel) -> float:
    out = np.inf
    if model.p:
        out = min(out, _min_root_modulus(np.concatenate(([1.0], -np.asarray(model.phi)))))
    if model.q:
        out = min(out, _min_root_modulus(np.concatenate(([1.0], np.asarray(model.theta)))))
    return out


def _has_common_factors(model: ArimaModel, tol: float = 0.1) -> bool:
    # An AR root sitting on an MA root means the factors nearly cancel: the
    # model is a redundant reparametrization of a smaller one that happened
    # to soak up sample noise.
    if model.p == 0 or model.q == 0:
        return False
    ar_roots = np.roots(np.concatenate(([1.0], -np.asarray(model.phi)))[::-1])
    ma_roots = np.roots(np.concatenate(([1.0], np.asarray(model.theta)))[::-1])
    for r in ar_roots:
        if np.min(np.abs(ma_roots - r)) < tol:
            return True
    return False


def auto_arima(
    series: TimeSeries, max_p: int = 5, max_d: int = 2, max_q: int = 5
) -> ArimaModel:
    """Exhaustive (p, q) search at the heuristically chosen d, ranked by AIC.

    Candidates whose fitted AR or MA roots sit within 1.01 of the unit
    circle, or whose AR and MA factors nearly cancel, are discarded (both
    are spurious-fit shapes, not real structure) unless nothing else
    survives.  Ties within 1e-9 of the best AIC break toward fewer
    parameters (smaller p + q, then smaller p).  Raises only if every
    candidate fit fails.
    """
    d = select_d(series.values, max_d)
    candidates: list[ArimaModel] = []
    failures: list[str] = []
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                candidates.append(fit_arima(series, p, d, q))
            except (ValueError, FloatingPointError) as exc:
                failures.append(f"({p},{d},{q}): {exc}")
    if not candidates:
        raise ValueError("all candidate fits failed: " + "; ".join(failures))
    clear = [
        m for m in candidates
        if _model_min_root(m) >= 1.01 and not _has_common_factors(m)
    ]
    pool = clear or candidates
    best_aic = min(m.aic for m in pool)
    eligible = [m for m in pool if m.aic <= best_aic + 1e-9]
    eligible.sort(key=lambda m: (m.p + m.q, m.p, m.q))
    return eligible[0]


def forecast_arima(model: ArimaModel, history: TimeSeries, k: int) -> Forecast:
    """Iterate the recursion past the end of ``history``.

    Future innovations take their mean (zero); in-sample residuals feed the
    moving-average terms of the first steps.  Differenced-scale forecasts are
    integrated back through the d trailing observed values.
    """
    if k < 1:
        raise ValueError("horizon must be >= 1")
    values = history.values
    if len(values) < max(model.p, model.q) + model.d or len(values) <= model.d:
        raise ValueError("history too short for this model")
    w = difference(values, model.d)
    phi = np.asarray(model.phi)
    theta = np.asarray(model.theta)
    e = _residuals(w, phi, theta, model.delta)

    ext_w = list(w)
    ext_e = list(e)
    preds = []
    for _ in range(k):
        t = len(ext_w)
        pred = model.delta
        for i in range(model.p):
            pred += phi[i] * ext_w[t - 1 - i]
        for j in range(model.q):
            idx = t - 1 - j
            if idx >= 0:
                pred += theta[j] * ext_e[idx]
        preds.append(pred)
        ext_w.append(pred)
        ext_e.append(0.0)

    anchors = values[len(values) - model.d :] if model.d > 0 else np.empty(0)
    out = integrate(anchors, np.asarray(preds), model.d)
    return Forecast(
        origin_timestamp=history.end_timestamp,
        horizon=k,
        values=tuple(float(v) for v in out),
        model_id=ModelId.AutoARIMA,
    )
