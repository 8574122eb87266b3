"""Self-contained statistical kernels.

Everything the model needs from "a stats library" lives here so the
package carries no dependency beyond numpy: log-gamma/log-beta, the
standard normal CDF/quantile pair, a stable expit, the Shapiro-Wilk
normality test (Royston's AS R94 recipe) and the two-sample
Kolmogorov-Smirnov test with the asymptotic p-value.  Accuracy fixtures
for all of them are recorded in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "TestResult",
    "log_gamma",
    "log_beta",
    "normal_cdf",
    "normal_pdf",
    "normal_quantile",
    "expit",
    "shapiro_wilk",
    "ks_two_sample",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float


# ---------------------------------------------------------------------------
# log-gamma / log-beta
# ---------------------------------------------------------------------------

# Lanczos approximation, g = 7, 9 coefficients.  Relative accuracy is about
# 1e-14 over the positive axis, comfortably inside the 1e-12 budget the
# Bayes-factor arithmetic assumes.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)


def _log_gamma_positive(x: np.ndarray) -> np.ndarray:
    # valid for x >= 0.5
    series = np.full_like(x, _LANCZOS_COEF[0])
    for k in range(1, 9):
        series = series + _LANCZOS_COEF[k] / (x + (k - 1.0))
    t = x + _LANCZOS_G - 0.5
    return _LN_SQRT_2PI + (x - 0.5) * np.log(t) - t + np.log(series)


def log_gamma(x):
    """Natural log of the gamma function for positive arguments.

    Accepts scalars or arrays; arguments in (0, 0.5) are handled through
    the reflection formula.
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or np.any(arr <= 0.0)):
        raise DomainError("log_gamma requires finite positive arguments")
    small = arr < 0.5
    if not small.any():
        out = _log_gamma_positive(arr)
    else:
        out = np.empty_like(arr)
        big = ~small
        out[big] = _log_gamma_positive(arr[big])
        xs = arr[small]
        out[small] = (
            math.log(math.pi)
            - np.log(np.sin(math.pi * xs))
            - _log_gamma_positive(1.0 - xs)
        )
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b), for a, b > 0."""
    return log_gamma(a) + log_gamma(b) - log_gamma(np.asarray(a) + np.asarray(b))


# ---------------------------------------------------------------------------
# standard normal CDF / quantile
# ---------------------------------------------------------------------------

_vec_erfc = np.frompyfunc(math.erfc, 1, 1)


def normal_cdf(z):
    """Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2."""
    if isinstance(z, np.ndarray):
        return 0.5 * _vec_erfc(-z / _SQRT2).astype(float)
    return 0.5 * math.erfc(-float(z) / _SQRT2)


def normal_pdf(z):
    """Standard normal density."""
    if isinstance(z, np.ndarray):
        return np.exp(-0.5 * z * z) / _SQRT_2PI
    z = float(z)
    return math.exp(-0.5 * z * z) / _SQRT_2PI


# Acklam's rational approximation for the inverse normal CDF; one Newton
# step against the exact CDF below pushes the absolute error from ~1e-9
# to machine precision.
_ACK_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
          1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACK_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
          6.680131188771972e01, -1.328068155288572e01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
          -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
          3.754408661907416e00)
_ACK_LOW = 0.02425


def normal_quantile(q: float) -> float:
    """Inverse standard normal CDF for q in (0, 1)."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"normal_quantile requires q in (0, 1), got {q!r}")
    a, b, c, d = _ACK_A, _ACK_B, _ACK_C, _ACK_D
    if q < _ACK_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) / \
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0)
    elif q <= 1.0 - _ACK_LOW:
        r = q - 0.5
        s = r * r
        x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r / \
            (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0)
    else:
        r = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) / \
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0)
    # Newton polish; skipped in the extreme tails where exp(x^2/2) overflows
    # and the raw approximation is already adequate in absolute terms.
    if abs(x) < 37.0:
        err = normal_cdf(x) - q
        x -= err * _SQRT_2PI * math.exp(0.5 * x * x)
    return x


def expit(z):
    """Logistic function 1 / (1 + exp(-z)), stable for large |z|."""
    if isinstance(z, np.ndarray):
        out = np.empty(z.shape, dtype=float)
        pos = z >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    z = float(z)
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's AS R94 recipe, uncensored samples, 3 <= n <= 5000)
# ---------------------------------------------------------------------------

# polynomial coefficients from Royston (1995), highest degree first
_SW_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
_SW_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_SW_C3 = (-0.0006714, 0.025054, -0.39978, 0.5440)
_SW_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_SW_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_SW_C6 = (0.0030302, -0.082676, -0.4803)
_SW_G = (0.459, -2.273)


def _polyval(coefs, x):
    acc = 0.0
    for c in coefs:
        acc = acc * x + c
    return acc


_BLOM_CACHE: dict[int, np.ndarray] = {}


def _blom_scores(n: int) -> np.ndarray:
    """Expected normal order statistics, cached per sample size."""
    m = _BLOM_CACHE.get(n)
    if m is None:
        m = np.array([normal_quantile((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
        _BLOM_CACHE[n] = m
    return m


def shapiro_wilk(sample) -> TestResult:
    """Shapiro-Wilk W test of normality.

    Returns the W statistic and its upper-tail p-value.  Requires
    3 <= n <= 5000 and a non-constant sample; a constant sample raises
    DomainError (callers that rank p-values map it to 0).
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3 or n > 5000:
        raise DomainError(f"shapiro_wilk requires 3 <= n <= 5000, got n={n}")
    if not np.all(np.isfinite(x)):
        raise InputError("shapiro_wilk requires finite values")
    if x[-1] - x[0] <= 0.0:
        raise DomainError("shapiro_wilk is undefined for a constant sample")

    # expected normal order statistics (Blom scores) and the weight vector
    m = _blom_scores(n)
    ss_m = float(np.dot(m, m))
    rsn = 1.0 / math.sqrt(n)
    w_vec = m / math.sqrt(ss_m)
    if n > 3:
        a_n = w_vec[-1] + _polyval(_SW_C1, rsn)
        if n > 5:
            a_n1 = w_vec[-2] + _polyval(_SW_C2, rsn)
            phi = (ss_m - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / \
                  (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2)
            w_vec = m / math.sqrt(phi)
            w_vec[-2], w_vec[1] = a_n1, -a_n1
        else:
            phi = (ss_m - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
            w_vec = m / math.sqrt(phi)
        w_vec[-1], w_vec[0] = a_n, -a_n

    xc = x - x.mean()
    w_stat = float(np.dot(w_vec, x)) ** 2 / float(np.dot(xc, xc))
    w_stat = min(w_stat, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w_stat)) - math.asin(math.sqrt(0.75)))
        return TestResult(w_stat, min(max(p, 0.0), 1.0))

    if n <= 11:
        gamma = _polyval(_SW_G, float(n))
        arg = gamma - math.log(1.0 - w_stat)
        if arg <= 0.0:
            return TestResult(w_stat, 0.0)
        y = -math.log(arg)
        mu = _polyval(_SW_C3, float(n))
        sigma = math.exp(_polyval(_SW_C4, float(n)))
    else:
        ln_n = math.log(float(n))
        y = math.log(1.0 - w_stat)
        mu = _polyval(_SW_C5, ln_n)
        sigma = math.exp(_polyval(_SW_C6, ln_n))

    p = 1.0 - normal_cdf((y - mu) / sigma)
    return TestResult(w_stat, min(max(p, 0.0), 1.0))


# ---------------------------------------------------------------------------
# two-sample Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


def _kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        # theta-function form, rapidly convergent for small arguments
        total = 0.0
        f = -math.pi * math.pi / (8.0 * lam * lam)
        for k in range(1, 20):
            t = math.exp(f * (2 * k - 1) ** 2)
            total += t
            if t < 1e-18:
                break
        return min(max(1.0 - _SQRT_2PI / lam * total, 0.0), 1.0)
    total, sign = 0.0, 1.0
    for k in range(1, 101):
        t = math.exp(-2.0 * k * k * lam * lam)
        total += sign * t
        sign = -sign
        if t < 1e-18:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_two_sample(a, b) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test.

    D is the exact sup-distance between the two empirical CDFs; the
    p-value is the asymptotic one at effective size n_a n_b / (n_a + n_b).
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise InputError("ks_two_sample requires two non-empty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    return TestResult(d, _kolmogorov_sf(math.sqrt(n_eff) * d))
