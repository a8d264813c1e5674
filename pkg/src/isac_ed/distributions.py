"""Scalar special functions and distribution primitives.

Gamma CDF and quantile, Kummer's confluent hypergeometric function, the
density and CDF of a sum of two independent Gamma variables, Gaussian
CDF/quantile and the Gaussian Kullback-Leibler divergence.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

_EPS = 2.220446049250313e-16
_TINY = 1e-300
_MAX_SERIES = 100_000
_LOG_MAX = 709.0


class ConvergenceError(ArithmeticError):
    """Raised when an iterative routine fails to converge.

    Attributes:
        estimate: Best value reached before giving up.
        error: Achieved error estimate (absolute), if known.
    """

    def __init__(self, message: str, estimate: float = math.nan, error: float = math.nan):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class QuadratureError(ConvergenceError):
    """Adaptive quadrature could not reach the requested tolerance."""


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class GammaParams:
    """Shape/scale pair of a Gamma law.

    Attributes:
        shape: Shape k, strictly positive.
        scale: Scale theta in watts, strictly positive.
    """

    shape: float
    scale: float

    def __post_init__(self):
        k = _check_finite("shape", self.shape)
        t = _check_finite("scale", self.scale)
        if k <= 0 or t <= 0:
            raise ValueError(f"Gamma parameters must be positive, got k={k}, theta={t}")


@dataclass(frozen=True)
class GaussianMoments:
    """Mean and variance of a Gaussian-approximated statistic."""

    mean: float
    variance: float

    def __post_init__(self):
        _check_finite("mean", self.mean)
        v = _check_finite("variance", self.variance)
        if v < 0:
            raise ValueError(f"variance must be nonnegative, got {v}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class SumGammaParams:
    """Parameters of S = G1 + G2 with independent Gamma components."""

    first: GammaParams
    second: GammaParams

    @property
    def mean(self) -> float:
        return self.first.shape * self.first.scale + self.second.shape * self.second.scale

    @property
    def variance(self) -> float:
        return (self.first.shape * self.first.scale ** 2
                + self.second.shape * self.second.scale ** 2)


# ---------------------------------------------------------------------------
# Regularized incomplete gamma


def _log_prefactor(k: float, x: float) -> float:
    return k * math.log(x) - x - math.lgamma(k)


def _lower_series(k: float, x: float) -> float:
    """P(k, x) by the ascending series, valid for x < k + 1."""
    term = 1.0 / k
    total = term
    for n in range(1, _MAX_SERIES):
        term *= x / (k + n)
        total += term
        if term < total * _EPS:
            return min(1.0, total * math.exp(_log_prefactor(k, x)))
    raise ConvergenceError(f"incomplete gamma series did not converge (k={k}, x={x})")


def _upper_fraction(k: float, x: float) -> float:
    """Q(k, x) by the modified Lentz continued fraction, valid for x >= k + 1."""
    b = x + 1.0 - k
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_SERIES):
        an = -i * (i - k)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return min(1.0, math.exp(_log_prefactor(k, x)) * h)
    raise ConvergenceError(f"incomplete gamma fraction did not converge (k={k}, x={x})")


def regularized_gamma(k: float, x: float) -> tuple[float, float]:
    """Lower and upper regularized incomplete gamma functions.

    Uses the series for x < k + 1 and the continued fraction otherwise, so
    whichever tail is small is computed directly rather than as 1 - other.

    Args:
        k: Shape, positive.
        x: Argument, nonnegative.

    Returns:
        Tuple (P, Q) with P + Q = 1.
    """
    if x <= 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < k + 1.0:
        p = _lower_series(k, x)
        return p, 1.0 - p
    q = _upper_fraction(k, x)
    return 1.0 - q, q


def _validate_threshold(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError(f"threshold must be finite, got {lam}")
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    return lam


def gamma_cdf(lam: float, p: GammaParams) -> float:
    """CDF of Gamma(k, theta) at ``lam``: gamma(k, lam/theta) / Gamma(k)."""
    lam = _validate_threshold(lam)
    return regularized_gamma(p.shape, lam / p.scale)[0]


def gamma_sf(lam: float, p: GammaParams) -> float:
    """Survival function 1 - CDF, computed without cancellation."""
    lam = _validate_threshold(lam)
    return regularized_gamma(p.shape, lam / p.scale)[1]


def gamma_pdf(lam: float, p: GammaParams) -> float:
    """Gamma density at ``lam`` (per watt)."""
    lam = _validate_threshold(lam)
    x = lam / p.scale
    if x == 0.0:
        if p.shape < 1:
            return math.inf
        return 1.0 / p.scale if p.shape == 1 else 0.0
    return math.exp((p.shape - 1.0) * math.log(x) - x - math.lgamma(p.shape)) / p.scale


def gamma_moments(p: GammaParams) -> tuple[float, float]:
    """Mean k*theta and variance k*theta^2."""
    return p.shape * p.scale, p.shape * p.scale ** 2


def _standard_gamma_quantile(x: float, k: float, max_iter: int = 200) -> float:
    """Quantile of Gamma(k, 1): Wilson-Hilferty start, Newton, bisection fallback."""
    upper = x > 0.5
    target = 1.0 - x if upper else x

    def residual(t: float) -> float:
        lo, hi = regularized_gamma(k, t)
        return (target - hi) if upper else (lo - target)

    z = NormalDist().inv_cdf(x)
    c = 1.0 / (9.0 * k)
    t = k * (1.0 - c + z * math.sqrt(c)) ** 3
    if not t > 0.0:
        # small-t expansion P(k, t) ~ t^k / Gamma(k + 1)
        t = math.exp((math.log(x) + math.lgamma(k + 1.0)) / k)

    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        r = residual(t)
        if r < 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        if abs(r) <= 1e-14 * max(target, 1e-300) or abs(r) <= 1e-300:
            return t
        dens = math.exp((k - 1.0) * math.log(t) - t - math.lgamma(k)) if t > 0 else 0.0
        step = r / dens if dens > 0 else math.inf
        t_new = t - step
        if not (lo < t_new < hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(t, 1.0)
        if abs(t_new - t) <= 4 * _EPS * t:
            return t_new
        t = t_new
    raise ConvergenceError(f"gamma quantile did not converge (x={x}, k={k})", estimate=t)


def gamma_inv_cdf(x: float, p: GammaParams) -> float:
    """Threshold lam with gamma_cdf(lam, p) = x.

    The scale is factored out so F^-1(x|k, theta) = theta * F^-1(x|k, 1)
    holds exactly.

    Raises:
        ValueError: if x is not strictly inside (0, 1).
        ConvergenceError: if the root search fails.
    """
    x = _check_finite("x", x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {x}")
    return p.scale * _standard_gamma_quantile(x, p.shape)


# ---------------------------------------------------------------------------
# Kummer 1F1


def _is_nonpositive_integer(b: float) -> bool:
    return b <= 0 and float(b).is_integer()


def _series_log(a: float, b: float, z: float) -> tuple[float, float]:
    """log|1F1| and sign from the ascending series, summed with scaling."""
    logs = [0.0]
    signs = [1.0]
    log_t, sign = 0.0, 1.0
    peak = 0.0
    for n in range(_MAX_SERIES):
        num = (a + n) * z
        if num == 0.0:
            break
        ratio = num / ((b + n) * (n + 1.0))
        log_t += math.log(abs(ratio))
        sign *= 1.0 if ratio > 0 else -1.0
        logs.append(log_t)
        signs.append(sign)
        peak = max(peak, log_t)
        # stop once terms shrink and are negligible against the largest one
        if abs(ratio) < 1.0 and log_t < peak - 40.0 and n > abs(z):
            break
    else:
        raise ConvergenceError(f"1F1 series did not converge (a={a}, b={b}, z={z})")
    lg = np.asarray(logs)
    sg = np.asarray(signs)
    m = lg.max()
    total = float(np.sum(sg * np.exp(lg - m)))
    if total == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(total)), math.copysign(1.0, total)


def log_kummer_1f1(a: float, b: float, z: float) -> tuple[float, float]:
    """Logarithm of |1F1(a; b; z)| together with its sign.

    Negative arguments are mapped through Kummer's transformation
    1F1(a; b; z) = e^z 1F1(b - a; b; -z) whenever that gives a series of
    positive terms, which avoids the cancellation of an alternating sum.
    """
    a = _check_finite("a", a)
    b = _check_finite("b", b)
    z = _check_finite("z", z)
    if _is_nonpositive_integer(b):
        raise ValueError(f"b must not be a nonpositive integer, got {b}")
    if z == 0.0:
        return 0.0, 1.0
    if z < 0 and b > 0 and b - a >= 0:
        log_v, sign = _series_log(b - a, b, -z)
        return log_v + z, sign
    return _series_log(a, b, z)


def kummer_1f1(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric function 1F1(a; b; z) for real arguments.

    Raises:
        ValueError: if b is a nonpositive integer or an input is not finite.
        OverflowError: if the value exceeds double range; use
            :func:`log_kummer_1f1` in that case.
    """
    log_v, sign = log_kummer_1f1(a, b, z)
    if log_v > _LOG_MAX:
        raise OverflowError(f"1F1({a}; {b}; {z}) overflows (log value {log_v:.1f})")
    return sign * math.exp(log_v)


_LGAMMA = np.vectorize(math.lgamma, otypes=[float])


def _log_1f1_positive(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """Vectorized log 1F1(a; b; z) for a, b > 0 and z >= 0 (positive terms).

    Sums a window of terms around the largest one; the window is widened
    until both edges are negligible.
    """
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    pos = z > 0
    if not np.any(pos):
        return out
    zp = z[pos]
    # index of the largest term: root of (b+n)(n+1) = (a+n) z
    q = b + 1.0 - zp
    n_star = np.maximum(0.0, 0.5 * (-q + np.sqrt(q * q - 4.0 * (b - a * zp))))
    half = 12.0 * np.sqrt(n_star + 1.0) + 40.0
    while True:
        lo = np.maximum(0, np.floor(n_star - half)).astype(np.int64)
        hi = np.ceil(n_star + half).astype(np.int64)
        width = int((hi - lo).max()) + 1
        n_top = int(hi.max()) + 1
        grid = np.arange(n_top + 1, dtype=float)
        table = _LGAMMA(a + grid) - math.lgamma(a) - _LGAMMA(b + grid) + math.lgamma(b) - _LGAMMA(grid + 1.0)
        idx = lo[:, None] + np.arange(width)[None, :]
        valid = idx <= hi[:, None]
        idx = np.minimum(idx, n_top)
        log_terms = table[idx] + idx * np.log(zp)[:, None]
        log_terms = np.where(valid, log_terms, -np.inf)
        peak = log_terms.max(axis=1)
        first = log_terms[:, 0]
        last = np.take_along_axis(log_terms, (hi - lo)[:, None], axis=1)[:, 0]
        ok_lo = (lo == 0) | (first < peak - 45.0)
        ok_hi = last < peak - 45.0
        if np.all(ok_lo & ok_hi):
            break
        half = half * 2.0
    out[pos] = peak + np.log(np.sum(np.exp(log_terms - peak[:, None]), axis=1))
    return out


# ---------------------------------------------------------------------------
# Sum of two Gamma variables


def sum_gamma_log_pdf(s, p: SumGammaParams) -> np.ndarray:
    """Log density of G1 + G2, vectorized over ``s``.

    The standard form s^{k1+k2-1} e^{-s/theta2} 1F1(k1; k1+k2; (1/theta2 - 1/theta1) s)
    is evaluated entirely in the log domain. When the 1F1 argument is
    negative the roles of the two components are swapped, which is the
    same as applying Kummer's transformation, so the series has positive
    terms.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(~np.isfinite(s)):
        raise ValueError("sum-Gamma density needs finite s >= 0")
    g1, g2 = p.first, p.second
    if g1.scale < g2.scale:
        g1, g2 = g2, g1
    k1, t1, k2, t2 = g1.shape, g1.scale, g2.shape, g2.scale
    kk = k1 + k2
    with np.errstate(divide="ignore"):
        log_s = np.log(s)
    base = ((kk - 1.0) * log_s - s / t2 - k1 * math.log(t1) - k2 * math.log(t2)
            - math.lgamma(kk))
    rate = 1.0 / t2 - 1.0 / t1
    if rate == 0.0:
        return base
    return base + _log_1f1_positive(k1, kk, rate * s)


def sum_gamma_pdf(s, p: SumGammaParams):
    """Density of G1 + G2 (per watt). Scalar in, scalar out."""
    scalar = np.ndim(s) == 0
    if scalar and float(s) < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    out = np.exp(sum_gamma_log_pdf(np.atleast_1d(s), p))
    return float(out[0]) if scalar else out


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _breakpoints(lam_max: float, p: SumGammaParams) -> np.ndarray:
    mu = p.mean
    sd = math.sqrt(p.variance)
    offsets = np.concatenate([-(2.0 ** np.arange(-2, 8)), [0.0], 2.0 ** np.arange(-2, 8)])
    pts = mu + sd * offsets
    pts = np.concatenate([[0.0, lam_max], np.linspace(0.0, lam_max, 17), pts])
    pts = pts[(pts >= 0) & (pts <= lam_max)]
    return np.unique(pts)


def _integrate_panels(edges: np.ndarray, p: SumGammaParams, tol: float, max_panels: int):
    """Adaptive GK15 over the given panels; returns per-panel integrals."""
    total_width = edges[-1] - edges[0]
    a, b = edges[:-1], edges[1:]
    done_a, done_b, done_val = [], [], []
    err_total = 0.0
    while a.size:
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        f = np.exp(sum_gamma_log_pdf(x.ravel(), p)).reshape(x.shape)
        k15 = half * (f @ _W15)
        g7 = half * (f @ _W7)
        err = np.abs(k15 - g7)
        ok = err <= tol * (b - a) / total_width
        done_a.append(a[ok])
        done_b.append(b[ok])
        done_val.append(k15[ok])
        err_total += float(err[ok].sum())
        a, b = a[~ok], b[~ok]
        if a.size:
            m = 0.5 * (a + b)
            a, b = np.concatenate([a, m]), np.concatenate([m, b])
            n_done = sum(x.size for x in done_a)
            if n_done + a.size > max_panels or np.any((b - a) < 1e-15 * total_width):
                est = float(np.concatenate(done_val).sum()) if done_val else math.nan
                raise QuadratureError("sum-Gamma CDF quadrature did not converge",
                                      estimate=est, error=float(err.sum()))
    a = np.concatenate(done_a)
    order = np.argsort(a)
    return a[order], np.concatenate(done_b)[order], np.concatenate(done_val)[order], err_total


def sum_gamma_cdf(lam, p: SumGammaParams, tol: float = 1e-8, max_panels: int = 200_000):
    """CDF of G1 + G2 by adaptive Gauss-Kronrod quadrature of the density.

    Accepts a scalar or an array of thresholds. For arrays the integral is
    accumulated panel by panel over the sorted thresholds, so the result is
    monotone in ``lam`` (all Kronrod weights are positive).

    Args:
        lam: Threshold(s), nonnegative.
        p: Sum-of-Gammas parameters.
        tol: Absolute error target for the integral.
        max_panels: Bound on the number of panels before giving up.

    Raises:
        QuadratureError: carrying the achieved error estimate.
    """
    scalar = np.ndim(lam) == 0
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    for v in lams:
        _validate_threshold(v)
    top = float(lams.max())
    if top == 0.0:
        out = np.zeros_like(lams)
        return float(out[0]) if scalar else out
    edges = np.unique(np.concatenate([_breakpoints(top, p), lams[lams > 0]]))
    a, b, val, _ = _integrate_panels(edges, p, tol, max_panels)
    cum = np.concatenate([[0.0], np.cumsum(val)])
    ends = np.concatenate([[0.0], b])
    idx = np.searchsorted(ends, lams, side="right") - 1
    out = np.clip(cum[idx], 0.0, 1.0)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Gaussian helpers

_STD_NORMAL = NormalDist()


def gaussian_cdf(x: float, m: GaussianMoments) -> float:
    """Normal CDF with the given moments (step function when variance is 0)."""
    if m.variance == 0:
        return 1.0 if x >= m.mean else 0.0
    return 0.5 * math.erfc(-(x - m.mean) / (m.std * math.sqrt(2.0)))


def gaussian_sf(x: float, m: GaussianMoments) -> float:
    """Normal upper tail 1 - CDF, without cancellation."""
    if m.variance == 0:
        return 0.0 if x >= m.mean else 1.0
    return 0.5 * math.erfc((x - m.mean) / (m.std * math.sqrt(2.0)))


def gaussian_inv_cdf(p: float, m: GaussianMoments) -> float:
    """Normal quantile with the given moments."""
    p = _check_finite("p", p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if m.variance <= 0:
        raise ValueError("quantile needs a positive variance")
    return m.mean + m.std * _STD_NORMAL.inv_cdf(p)


def kld_gaussian(h0: GaussianMoments, h1: GaussianMoments) -> float:
    """Kullback-Leibler divergence D(N0 || N1) in nats.

    ln(s1/s0) + (s0^2 + (m0 - m1)^2) / (2 s1^2) - 1/2, with the variance
    part written as (r - 1 - ln r)/2 for r = s0^2/s1^2 so that equal
    moments give exactly zero.
    """
    if h0.variance <= 0 or h1.variance <= 0:
        raise ValueError("KLD needs strictly positive variances")
    r = h0.variance / h1.variance
    u = r - 1.0
    if abs(u) < 1e-4:
        var_part = u * u * (0.5 - u / 3.0 + u * u / 4.0)
    else:
        var_part = u - math.log(r)
    return max(0.0, 0.5 * var_part + (h0.mean - h1.mean) ** 2 / (2.0 * h1.variance))
