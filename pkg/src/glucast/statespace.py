"""BATS and TBATS: Box-Cox + level/trend smoothing with ARMA errors.

Both models run the same transformed-space recursion.  With disturbance
d_t = y_t - (level + phi_d * trend + seasonal) and innovation
e_t = d_t - (ARMA prediction of d_t):

    level <- level + phi_d * trend + alpha * d_t
    trend <- phi_d * trend + beta * d_t
    seasonal states corrected by gamma * d_t

BATS keeps one state per phase of each integer period (the phase value is
reused every m steps); TBATS replaces that with K harmonic pairs per period
rotating at angles 2*pi*j/m, which shrinks the state for long periods.
Parameters minimize the in-sample one-step SSE (sum of squared innovations)
in transformed space via Nelder-Mead with fixed deterministic starts; this is
a sum-of-squares simplification of the usual Gaussian likelihood, kept
because it is directly testable through fixed points.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import Forecast, ModelId, TimeSeries
from .optim import nelder_mead

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

__all__ = [
    "BatsConfig",
    "BatsModel",
    "box_cox",
    "inv_box_cox",
    "select_lambda",
    "bats_fit",
    "tbats_fit",
    "forecast_bats",
    "bats_advance",
]

LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))
_LAMBDA_BLOCK = 24  # block length for the variance-stabilization criterion


# ---------------------------------------------------------------------------
# Box-Cox
# ---------------------------------------------------------------------------

def box_cox(x, lam: float):
    """Power transform: ln(x) at lambda 0, else (x^lambda - 1) / lambda."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("Box-Cox requires strictly positive inputs")
    if lam == 0.0:
        out = np.log(arr)
    else:
        out = (arr**lam - 1.0) / lam
    return float(out) if np.isscalar(x) else out


def inv_box_cox(z, lam: float, _clamped: list | None = None):
    """Inverse transform; out-of-domain values (1 + lambda*z <= 0) clamp to
    the domain edge.  Pass a list as ``_clamped`` to learn whether that
    happened."""
    arr = np.asarray(z, dtype=np.float64)
    if lam == 0.0:
        out = np.exp(arr)
    else:
        inner = 1.0 + lam * arr
        bad = inner <= 0.0
        if np.any(bad):
            if _clamped is not None:
                _clamped.append(True)
            inner = np.where(bad, 1e-12, inner)
        out = inner ** (1.0 / lam)
    return float(out) if np.isscalar(z) else out


def select_lambda(series: TimeSeries, grid=LAMBDA_GRID) -> float:
    """Pick the lambda that most stabilizes block-wise spread.

    The series is cut into blocks of 24 points; for each candidate lambda the
    ratio std_i / mean_i^(1 - lambda) is computed per block, and the lambda
    with the smallest coefficient of variation of those ratios wins (ties go
    to the larger lambda).  Fewer than two blocks returns 1.0 with a warning.
    """
    values = series.values
    if np.any(values <= 0):
        raise ValueError("lambda selection requires positive values")
    n_blocks = len(values) // _LAMBDA_BLOCK
    if n_blocks < 2:
        _warnings.warn("series too short for lambda selection; using 1.0")
        return 1.0
    blocks = values[: n_blocks * _LAMBDA_BLOCK].reshape(n_blocks, _LAMBDA_BLOCK)
    means = blocks.mean(axis=1)
    stds = blocks.std(axis=1)  # population convention

    best_lam, best_score = 1.0, float("inf")
    for lam in grid:
        ratios = stds / means ** (1.0 - lam)
        mean_r = float(np.mean(ratios))
        score = 0.0 if mean_r == 0.0 else float(np.std(ratios)) / mean_r
        if score <= best_score:
            best_lam, best_score = lam, score
    return best_lam


# ---------------------------------------------------------------------------
# Configuration and model state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BatsConfig:
    """Structure switches for a BATS/TBATS fit.

    ``harmonics`` distinguishes the two: None means integer-period seasonal
    states (BATS); a per-period harmonic count K makes it TBATS.  ``arma_p``
    / ``arma_q`` of None trigger AIC selection over orders 0..2.
    ``box_cox_lambda`` of None triggers :func:`select_lambda`.
    """

    use_box_cox: bool = False
    use_trend: bool = True
    use_damping: bool = False
    arma_p: int | None = 0
    arma_q: int | None = 0
    seasonal_periods: tuple[int, ...] = ()
    harmonics: tuple[int, ...] | None = None
    box_cox_lambda: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "seasonal_periods", tuple(self.seasonal_periods))
        if self.harmonics is not None:
            object.__setattr__(self, "harmonics", tuple(self.harmonics))
            if len(self.harmonics) != len(self.seasonal_periods):
                raise ValueError("need one harmonic count per seasonal period")
            for k, m in zip(self.harmonics, self.seasonal_periods):
                if k < 1:
                    raise ValueError("harmonic count must be >= 1")
                if k > m // 2:
                    raise ValueError(f"harmonics {k} exceeds floor({m}/2)")
        for m in self.seasonal_periods:
            if m < 2:
                raise ValueError("seasonal periods must be >= 2")
        for o in (self.arma_p, self.arma_q):
            if o is not None and not (0 <= o <= 2):
                raise ValueError("ARMA error orders are capped at 2")

    @property
    def is_trigonometric(self) -> bool:
        return self.harmonics is not None

    def to_dict(self) -> dict:
        return {
            "use_box_cox": self.use_box_cox,
            "use_trend": self.use_trend,
            "use_damping": self.use_damping,
            "arma_p": self.arma_p,
            "arma_q": self.arma_q,
            "seasonal_periods": list(self.seasonal_periods),
            "harmonics": None if self.harmonics is None else list(self.harmonics),
            "box_cox_lambda": self.box_cox_lambda,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BatsConfig":
        return cls(
            use_box_cox=bool(d["use_box_cox"]),
            use_trend=bool(d["use_trend"]),
            use_damping=bool(d["use_damping"]),
            arma_p=d["arma_p"],
            arma_q=d["arma_q"],
            seasonal_periods=tuple(int(m) for m in d["seasonal_periods"]),
            harmonics=None if d["harmonics"] is None else tuple(int(k) for k in d["harmonics"]),
            box_cox_lambda=d["box_cox_lambda"],
        )


@dataclass(frozen=True)
class BatsModel:
    """A fitted BATS/TBATS: parameters, initial and terminal states, fit stats.

    Initial states are kept so the recursion can be re-run over a longer
    history with frozen parameters (``bats_advance``), which is how the
    backtest advances the forecast origin without refitting.
    """

    config: BatsConfig
    lam: float
    alpha: float
    beta: float
    phi_d: float
    gammas: tuple[tuple[float, ...], ...]  # per period: (g,) for BATS, (g1, g2) for TBATS
    arma_phi: tuple[float, ...]
    arma_theta: tuple[float, ...]
    init_level: float
    init_trend: float
    init_seas: tuple[tuple[float, ...], ...]       # per period (phase values / harmonic s)
    init_seas_star: tuple[tuple[float, ...], ...]  # TBATS only; empty tuples for BATS
    level: float
    trend: float
    seas: tuple[tuple[float, ...], ...]
    seas_star: tuple[tuple[float, ...], ...]
    d_tail: tuple[float, ...]  # last p disturbances
    e_tail: tuple[float, ...]  # last q innovations
    n_seen: int                # steps consumed so far (phase position for BATS)
    sse: float
    sigma2: float
    aic: float
    n_obs: int
    n_params: int
    warnings: tuple[str, ...]
    origin_timestamp: int
    interval_s: int

    @property
    def model_id(self) -> ModelId:
        return ModelId.TBATS if self.config.is_trigonometric else ModelId.BATS

    @property
    def state_dimension(self) -> int:
        seas = sum(len(s) + len(ss) for s, ss in zip(self.seas, self.seas_star))
        return 2 + seas + len(self.arma_phi) + len(self.arma_theta)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "lam": self.lam, "alpha": self.alpha, "beta": self.beta,
            "phi_d": self.phi_d,
            "gammas": [list(g) for g in self.gammas],
            "arma_phi": list(self.arma_phi), "arma_theta": list(self.arma_theta),
            "init_level": self.init_level, "init_trend": self.init_trend,
            "init_seas": [list(s) for s in self.init_seas],
            "init_seas_star": [list(s) for s in self.init_seas_star],
            "level": self.level, "trend": self.trend,
            "seas": [list(s) for s in self.seas],
            "seas_star": [list(s) for s in self.seas_star],
            "d_tail": list(self.d_tail), "e_tail": list(self.e_tail),
            "n_seen": self.n_seen,
            "sse": self.sse, "sigma2": self.sigma2, "aic": self.aic,
            "n_obs": self.n_obs, "n_params": self.n_params,
            "warnings": list(self.warnings),
            "origin_timestamp": self.origin_timestamp, "interval_s": self.interval_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BatsModel":
        return cls(
            config=BatsConfig.from_dict(d["config"]),
            lam=float(d["lam"]), alpha=float(d["alpha"]), beta=float(d["beta"]),
            phi_d=float(d["phi_d"]),
            gammas=tuple(tuple(float(x) for x in g) for g in d["gammas"]),
            arma_phi=tuple(float(x) for x in d["arma_phi"]),
            arma_theta=tuple(float(x) for x in d["arma_theta"]),
            init_level=float(d["init_level"]), init_trend=float(d["init_trend"]),
            init_seas=tuple(tuple(float(x) for x in s) for s in d["init_seas"]),
            init_seas_star=tuple(tuple(float(x) for x in s) for s in d["init_seas_star"]),
            level=float(d["level"]), trend=float(d["trend"]),
            seas=tuple(tuple(float(x) for x in s) for s in d["seas"]),
            seas_star=tuple(tuple(float(x) for x in s) for s in d["seas_star"]),
            d_tail=tuple(float(x) for x in d["d_tail"]),
            e_tail=tuple(float(x) for x in d["e_tail"]),
            n_seen=int(d["n_seen"]),
            sse=float(d["sse"]), sigma2=float(d["sigma2"]), aic=float(d["aic"]),
            n_obs=int(d["n_obs"]), n_params=int(d["n_params"]),
            warnings=tuple(d["warnings"]),
            origin_timestamp=int(d["origin_timestamp"]), interval_s=int(d["interval_s"]),
        )


# ---------------------------------------------------------------------------
# Recursion kernels (numba-jitted when available)
# ---------------------------------------------------------------------------

def _bats_kernel(y, alpha, beta, use_trend, phi_d, level0, trend0,
                 seas0, periods, offsets, gammas, arphi, artheta):
    n = len(y)
    n_periods = len(periods)
    p = len(arphi)
    q = len(artheta)
    seas = seas0.copy()
    level = level0
    trend = trend0
    d = np.zeros(n)
    e = np.zeros(n)
    for t in range(n):
        seas_pred = 0.0
        for ip in range(n_periods):
            seas_pred += seas[offsets[ip] + t % periods[ip]]
        base = level + phi_d * trend + seas_pred
        dhat = 0.0
        for i in range(p):
            if t - 1 - i >= 0:
                dhat += arphi[i] * d[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                dhat += artheta[j] * e[t - 1 - j]
        dt = y[t] - base
        d[t] = dt
        e[t] = dt - dhat
        level = level + phi_d * trend + alpha * dt
        if use_trend:
            trend = phi_d * trend + beta * dt
        for ip in range(n_periods):
            seas[offsets[ip] + t % periods[ip]] += gammas[ip] * dt
    return e, d, level, trend, seas


def _tbats_kernel(y, alpha, beta, use_trend, phi_d, level0, trend0,
                  s0, sstar0, cosw, sinw, gamma1_per_state, gamma2_per_state,
                  arphi, artheta):
    n = len(y)
    n_states = len(s0)
    p = len(arphi)
    q = len(artheta)
    s = s0.copy()
    sstar = sstar0.copy()
    level = level0
    trend = trend0
    d = np.zeros(n)
    e = np.zeros(n)
    for t in range(n):
        seas_pred = 0.0
        for k in range(n_states):
            seas_pred += s[k]
        base = level + phi_d * trend + seas_pred
        dhat = 0.0
        for i in range(p):
            if t - 1 - i >= 0:
                dhat += arphi[i] * d[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                dhat += artheta[j] * e[t - 1 - j]
        dt = y[t] - base
        d[t] = dt
        e[t] = dt - dhat
        level = level + phi_d * trend + alpha * dt
        if use_trend:
            trend = phi_d * trend + beta * dt
        for k in range(n_states):
            sk = s[k]
            stk = sstar[k]
            s[k] = sk * cosw[k] + stk * sinw[k] + gamma1_per_state[k] * dt
            sstar[k] = -sk * sinw[k] + stk * cosw[k] + gamma2_per_state[k] * dt
    return e, d, level, trend, s, sstar


if _HAVE_NUMBA:
    _bats_kernel = njit(cache=True)(_bats_kernel)
    _tbats_kernel = njit(cache=True)(_tbats_kernel)


class _Structure:
    """Packed arrays for one fit: transform, initial states, kernel plumbing."""

    def __init__(self, config: BatsConfig, y: np.ndarray):
        self.config = config
        self.y = y
        n = len(y)
        t_idx = np.arange(n, dtype=np.float64)
        if config.use_trend and n > 1:
            # Global least-squares slope: a local (first differences) estimate
            # is dominated by noise, and any error in it both skews the
            # seasonal warm start and gets extrapolated over the horizon.
            tc = t_idx - t_idx.mean()
            self.trend0 = float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
        else:
            self.trend0 = 0.0
        # Detrended intercept at t=0; the stored level is one trend step
        # behind it because the recursion predicts with level + trend before
        # the first update (keeps exact data an exact fixed point).
        intercept = float(np.mean(y)) - self.trend0 * float(np.mean(t_idx))
        self.level0 = intercept - self.trend0
        z = y - (intercept + self.trend0 * t_idx)

        periods = config.seasonal_periods
        if config.is_trigonometric:
            s0, sstar0, cosw, sinw = [], [], [], []
            self.harm_offsets = []
            off = 0
            for m, big_k in zip(periods, config.harmonics):
                self.harm_offsets.append(off)
                for j in range(1, big_k + 1):
                    w = 2.0 * math.pi * j / m
                    if 2 * j == m:  # Nyquist term: half normalization, no sine
                        a = float(np.mean(z * np.cos(w * t_idx)))
                        b = 0.0
                    else:
                        a = 2.0 * float(np.mean(z * np.cos(w * t_idx)))
                        b = 2.0 * float(np.mean(z * np.sin(w * t_idx)))
                    s0.append(a)
                    sstar0.append(b)
                    cosw.append(math.cos(w))
                    sinw.append(math.sin(w))
                off += big_k
            self.s0 = np.asarray(s0)
            self.sstar0 = np.asarray(sstar0)
            self.cosw = np.asarray(cosw)
            self.sinw = np.asarray(sinw)
        else:
            seas0 = []
            self.offsets = []
            off = 0
            for m in periods:
                self.offsets.append(off)
                phase_means = np.array([float(np.mean(z[r::m])) for r in range(m)])
                phase_means -= phase_means.mean()
                seas0.extend(phase_means)
                off += m
            self.seas0 = np.asarray(seas0, dtype=np.float64)
            self.offsets_arr = np.asarray(self.offsets, dtype=np.int64)
            self.periods_arr = np.asarray(periods, dtype=np.int64)

    def run(self, params: "_Params", y: np.ndarray | None = None):
        y = self.y if y is None else y
        cfg = self.config
        if cfg.is_trigonometric:
            g1, g2 = [], []
            for (gamma1, gamma2), big_k in zip(params.gammas, cfg.harmonics):
                g1.extend([gamma1] * big_k)
                g2.extend([gamma2] * big_k)
            return _tbats_kernel(
                y, params.alpha, params.beta, cfg.use_trend, params.phi_d,
                self.level0, self.trend0, self.s0, self.sstar0,
                self.cosw, self.sinw,
                np.asarray(g1, dtype=np.float64), np.asarray(g2, dtype=np.float64),
                np.asarray(params.arma_phi), np.asarray(params.arma_theta),
            )
        gam = np.asarray([g[0] for g in params.gammas], dtype=np.float64)
        if len(cfg.seasonal_periods) == 0:
            gam = np.zeros(0)
        e, d, level, trend, seas = _bats_kernel(
            y, params.alpha, params.beta, cfg.use_trend, params.phi_d,
            self.level0, self.trend0,
            self.seas0 if len(cfg.seasonal_periods) else np.zeros(0),
            self.periods_arr if len(cfg.seasonal_periods) else np.zeros(0, dtype=np.int64),
            self.offsets_arr if len(cfg.seasonal_periods) else np.zeros(0, dtype=np.int64),
            gam, np.asarray(params.arma_phi), np.asarray(params.arma_theta),
        )
        return e, d, level, trend, seas, None


@dataclass
class _Params:
    alpha: float
    beta: float
    phi_d: float
    gammas: list[tuple[float, ...]]
    arma_phi: np.ndarray
    arma_theta: np.ndarray


def _pack_spec(config: BatsConfig, arma_p: int, arma_q: int):
    """Parameter vector layout + bounds + deterministic start."""
    names: list[str] = ["alpha"]
    starts: list[float] = [0.1]
    bounds: list[tuple[float | None, float | None]] = [(0.0, 1.0)]
    if config.use_trend:
        names.append("beta")
        starts.append(0.05)
        bounds.append((0.0, 1.0))
    if config.use_damping:
        names.append("phi_d")
        starts.append(0.98)
        bounds.append((0.8, 1.0))
    per_period = 2 if config.is_trigonometric else 1
    for i in range(len(config.seasonal_periods)):
        for g in range(per_period):
            names.append(f"gamma{g + 1}_{i}")
            starts.append(0.001)
            bounds.append((0.0, 1.0))
    for i in range(arma_p):
        names.append(f"ar{i + 1}")
        starts.append(0.0)
        bounds.append((-3.0, 3.0))
    for i in range(arma_q):
        names.append(f"ma{i + 1}")
        starts.append(0.0)
        bounds.append((-3.0, 3.0))
    return names, np.asarray(starts), bounds


def _unpack(x: np.ndarray, config: BatsConfig, arma_p: int, arma_q: int) -> _Params:
    i = 0
    alpha = float(x[i]); i += 1
    beta = 0.0
    if config.use_trend:
        beta = float(x[i]); i += 1
    phi_d = 1.0
    if config.use_damping:
        phi_d = float(x[i]); i += 1
    gammas: list[tuple[float, ...]] = []
    per_period = 2 if config.is_trigonometric else 1
    for _ in range(len(config.seasonal_periods)):
        gammas.append(tuple(float(v) for v in x[i : i + per_period]))
        i += per_period
    arma_phi = np.asarray(x[i : i + arma_p], dtype=np.float64); i += arma_p
    arma_theta = np.asarray(x[i : i + arma_q], dtype=np.float64); i += arma_q
    return _Params(alpha, beta, phi_d, gammas, arma_phi, arma_theta)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _fit_one(series: TimeSeries, config: BatsConfig, arma_p: int, arma_q: int) -> BatsModel:
    values = series.values
    warn: list[str] = []
    if config.use_box_cox:
        if np.any(values <= 0):
            raise ValueError("Box-Cox requires positive data")
        lam = (
            config.box_cox_lambda
            if config.box_cox_lambda is not None
            else select_lambda(series)
        )
        y = box_cox(values, lam)
    else:
        lam = 1.0
        y = values.copy()

    structure = _Structure(config, y)
    _, x0, bounds = _pack_spec(config, arma_p, arma_q)

    def objective(x: np.ndarray) -> float:
        params = _unpack(x, config, arma_p, arma_q)
        e = structure.run(params)[0]
        return float(np.dot(e, e))

    result = nelder_mead(objective, x0, bounds=bounds)
    if not result.converged:
        warn.append("non_convergence")
    params = _unpack(result.x, config, arma_p, arma_q)
    e, d, level, trend, seas, seas_star = structure.run(params)

    n = len(y)
    sse = float(np.dot(e, e))
    sigma2 = sse / n
    if sigma2 < 1e-12:
        sigma2 = 1e-12
        warn.append("sigma2_floored")
    n_params = len(result.x)
    aic = n * math.log(sigma2) + 2.0 * n_params

    # Split packed seasonal arrays back out per period.
    init_seas, init_star, fin_seas, fin_star = [], [], [], []
    if config.is_trigonometric:
        off = 0
        for big_k in config.harmonics:
            init_seas.append(tuple(structure.s0[off : off + big_k]))
            init_star.append(tuple(structure.sstar0[off : off + big_k]))
            fin_seas.append(tuple(seas[off : off + big_k]))
            fin_star.append(tuple(seas_star[off : off + big_k]))
            off += big_k
    else:
        off = 0
        for m in config.seasonal_periods:
            init_seas.append(tuple(structure.seas0[off : off + m]))
            init_star.append(())
            fin_seas.append(tuple(seas[off : off + m]))
            fin_star.append(())
            off += m

    p_tail = len(params.arma_phi)
    q_tail = len(params.arma_theta)
    return BatsModel(
        config=replace(config, arma_p=arma_p, arma_q=arma_q),
        lam=float(lam),
        alpha=params.alpha, beta=params.beta, phi_d=params.phi_d,
        gammas=tuple(params.gammas),
        arma_phi=tuple(float(v) for v in params.arma_phi),
        arma_theta=tuple(float(v) for v in params.arma_theta),
        init_level=structure.level0, init_trend=structure.trend0,
        init_seas=tuple(init_seas), init_seas_star=tuple(init_star),
        level=float(level), trend=float(trend),
        seas=tuple(fin_seas), seas_star=tuple(fin_star),
        d_tail=tuple(float(v) for v in d[n - p_tail :]) if p_tail else (),
        e_tail=tuple(float(v) for v in e[n - q_tail :]) if q_tail else (),
        n_seen=n,
        sse=sse, sigma2=sigma2, aic=float(aic),
        n_obs=n, n_params=n_params,
        warnings=tuple(warn),
        origin_timestamp=series.end_timestamp,
        interval_s=series.interval_s,
    )


def _fit(series: TimeSeries, config: BatsConfig) -> BatsModel:
    min_len = 2 * (max(config.seasonal_periods) if config.seasonal_periods else 10)
    if len(series) < min_len:
        raise ValueError(f"need at least {min_len} points for this configuration")
    p_grid = range(3) if config.arma_p is None else (config.arma_p,)
    q_grid = range(3) if config.arma_q is None else (config.arma_q,)
    candidates = [_fit_one(series, config, p, q) for p in p_grid for q in q_grid]
    best_aic = min(m.aic for m in candidates)
    eligible = [m for m in candidates if m.aic <= best_aic + 1e-9]
    eligible.sort(key=lambda m: (m.config.arma_p + m.config.arma_q, m.config.arma_p))
    return eligible[0]


def bats_fit(series: TimeSeries, config: BatsConfig) -> BatsModel:
    """Fit with integer-period seasonal states (one per phase)."""
    if config.is_trigonometric:
        raise ValueError("config has harmonics; use tbats_fit")
    return _fit(series, config)


def tbats_fit(series: TimeSeries, config: BatsConfig) -> BatsModel:
    """Fit with trigonometric seasonal states (K harmonic pairs per period)."""
    if not config.is_trigonometric:
        raise ValueError("config lacks harmonics; use bats_fit or set harmonics")
    return _fit(series, config)


# ---------------------------------------------------------------------------
# Forecasting / state advance
# ---------------------------------------------------------------------------

def forecast_bats(model: BatsModel, k: int) -> Forecast:
    """Iterate the recursion with future innovations at zero.

    The ARMA disturbance prediction decays through the forecast steps; the
    inverse Box-Cox is applied last, clamping (with a warning) where a
    transformed value leaves the inverse's domain.
    """
    if k < 1:
        raise ValueError("horizon must be >= 1")
    cfg = model.config
    level, trend = model.level, model.trend
    seas = [list(s) for s in model.seas]
    seas_star = [list(s) for s in model.seas_star]
    dd = list(model.d_tail)
    ee = list(model.e_tail)
    p, q = len(model.arma_phi), len(model.arma_theta)

    preds = []
    for h in range(k):
        if cfg.is_trigonometric:
            seas_pred = sum(sum(s) for s in seas)
        else:
            seas_pred = sum(
                seas[ip][(model.n_seen + h) % m]
                for ip, m in enumerate(cfg.seasonal_periods)
            )
        dhat = 0.0
        for i in range(p):
            idx = len(dd) - 1 - i
            if idx >= 0:
                dhat += model.arma_phi[i] * dd[idx]
        for j in range(q):
            idx = len(ee) - 1 - j
            if idx >= 0:
                dhat += model.arma_theta[j] * ee[idx]
        base = level + model.phi_d * trend + seas_pred
        preds.append(base + dhat)

        # Advance states with the expected disturbance.
        level = level + model.phi_d * trend + model.alpha * dhat
        if cfg.use_trend:
            trend = model.phi_d * trend + model.beta * dhat
        if cfg.is_trigonometric:
            for ip, big_k in enumerate(cfg.harmonics):
                g1, g2 = model.gammas[ip]
                m = cfg.seasonal_periods[ip]
                for j in range(big_k):
                    w = 2.0 * math.pi * (j + 1) / m
                    s_old, st_old = seas[ip][j], seas_star[ip][j]
                    seas[ip][j] = s_old * math.cos(w) + st_old * math.sin(w) + g1 * dhat
                    seas_star[ip][j] = -s_old * math.sin(w) + st_old * math.cos(w) + g2 * dhat
        else:
            for ip, m in enumerate(cfg.seasonal_periods):
                g = model.gammas[ip][0]
                seas[ip][(model.n_seen + h) % m] += g * dhat
        dd.append(dhat)
        ee.append(0.0)

    z = np.asarray(preds)
    if cfg.use_box_cox:
        clamped: list = []
        out = inv_box_cox(z, model.lam, _clamped=clamped)
        if clamped:
            _warnings.warn("forecast clamped at the Box-Cox domain edge")
    else:
        out = z
    return Forecast(
        origin_timestamp=model.origin_timestamp,
        horizon=k,
        values=tuple(float(v) for v in out),
        model_id=model.model_id,
    )


def bats_advance(model: BatsModel, history: TimeSeries) -> BatsModel:
    """Re-run the recursion over ``history`` with frozen parameters.

    ``history`` must start at the same point as the fitted series (it is the
    fitted series plus newer observations); only the state, not the
    parameters, changes.  Used by the rolling-origin backtest.
    """
    cfg = model.config
    values = history.values
    y = box_cox(values, model.lam) if cfg.use_box_cox else values.copy()
    structure = _Structure(cfg, y)
    # Keep the original warm start rather than one re-derived from the
    # longer history, so advancing is exactly online continuation.
    structure.level0 = model.init_level
    structure.trend0 = model.init_trend
    if cfg.is_trigonometric:
        structure.s0 = np.asarray([v for s in model.init_seas for v in s])
        structure.sstar0 = np.asarray([v for s in model.init_seas_star for v in s])
    elif cfg.seasonal_periods:
        structure.seas0 = np.asarray([v for s in model.init_seas for v in s])
    params = _Params(
        model.alpha, model.beta, model.phi_d, list(model.gammas),
        np.asarray(model.arma_phi), np.asarray(model.arma_theta),
    )
    e, d, level, trend, seas, seas_star = structure.run(params)
    n = len(y)
    fin_seas, fin_star = [], []
    if cfg.is_trigonometric:
        off = 0
        for big_k in cfg.harmonics:
            fin_seas.append(tuple(seas[off : off + big_k]))
            fin_star.append(tuple(seas_star[off : off + big_k]))
            off += big_k
    else:
        off = 0
        for m in cfg.seasonal_periods:
            fin_seas.append(tuple(seas[off : off + m]))
            fin_star.append(())
            off += m
    p, q = len(model.arma_phi), len(model.arma_theta)
    return replace(
        model,
        level=float(level), trend=float(trend),
        seas=tuple(fin_seas), seas_star=tuple(fin_star),
        d_tail=tuple(float(v) for v in d[n - p :]) if p else (),
        e_tail=tuple(float(v) for v in e[n - q :]) if q else (),
        n_seen=n,
        origin_timestamp=history.end_timestamp,
    )
