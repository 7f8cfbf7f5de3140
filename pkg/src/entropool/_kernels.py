"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is the default.  Set ``ENTROPOOL_NUMBA=0`` in the environment
to force the numpy implementations (useful on platforms without a working
JIT, and for the benchmark in ``benchmarks/bench_kernels.py`` which times
both paths side by side).

Every kernel exists in two variants, ``<name>_numpy`` and ``<name>_numba``
(the latter is ``None`` when numba is unavailable or disabled); the public
unsuffixed name is bound to the selected variant at import time.
"""

import math
import os

import numpy as np

EXP_CLAMP = 700.0

_flag = os.environ.get("ENTROPOOL_NUMBA", "1").strip().lower()
_numba_wanted = _flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def exp_primal_numpy(log_p, coeffs_t, multipliers):
    """Exponential-family primal map x_j = exp(log p_j - 1 - (A' y)_j).

    ``coeffs_t`` is the J x M transpose of the stacked constraint matrix and
    ``multipliers`` the length-M stacked multiplier vector.  Exponents are
    clamped to +-EXP_CLAMP before exponentiation; the count of clamped
    entries is returned alongside x.
    """
    exponent = log_p - 1.0 - coeffs_t @ multipliers
    n_clamped = int(np.count_nonzero(np.abs(exponent) > EXP_CLAMP))
    np.clip(exponent, -EXP_CLAMP, EXP_CLAMP, out=exponent)
    return np.exp(exponent), n_clamped


def straddle_price_numpy(spot, vol, strike, maturity, rate):
    """Same-strike call+put price for arrays of spots and vols."""
    sqrt_t = math.sqrt(maturity)
    d1 = (np.log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / (vol * sqrt_t)
    d2 = d1 - vol * sqrt_t
    # Phi(d) - Phi(-d) = erf(d / sqrt(2))
    from scipy.special import erf

    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    return spot * erf(d1 * inv_sqrt2) - strike * math.exp(-rate * maturity) * erf(d2 * inv_sqrt2)


def weighted_mean_var_numpy(values, weights):
    """Single-pass probability-weighted mean and variance of one column."""
    m = float(weights @ values)
    d = values - m
    return m, float(weights @ (d * d))


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

exp_primal_numba = None
straddle_price_numba = None
weighted_mean_var_numba = None

if _numba_wanted:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _numba_wanted = False
    else:
        @njit(cache=True)
        def _exp_primal_jit(log_p, coeffs_t, multipliers):
            j_count = log_p.shape[0]
            m_count = multipliers.shape[0]
            x = np.empty(j_count)
            n_clamped = 0
            for j in range(j_count):
                e = log_p[j] - 1.0
                for i in range(m_count):
                    e -= coeffs_t[j, i] * multipliers[i]
                if e > EXP_CLAMP:
                    e = EXP_CLAMP
                    n_clamped += 1
                elif e < -EXP_CLAMP:
                    e = -EXP_CLAMP
                    n_clamped += 1
                x[j] = math.exp(e)
            return x, n_clamped

        @njit(cache=True)
        def _straddle_price_jit(spot, vol, strike, maturity, rate):
            sqrt_t = math.sqrt(maturity)
            inv_sqrt2 = 1.0 / math.sqrt(2.0)
            disc = strike * math.exp(-rate * maturity)
            out = np.empty(spot.shape[0])
            for j in range(spot.shape[0]):
                d1 = (math.log(spot[j] / strike) + (rate + 0.5 * vol[j] * vol[j]) * maturity) / (vol[j] * sqrt_t)
                d2 = d1 - vol[j] * sqrt_t
                out[j] = spot[j] * math.erf(d1 * inv_sqrt2) - disc * math.erf(d2 * inv_sqrt2)
            return out

        @njit(cache=True)
        def _weighted_mean_var_jit(values, weights):
            m = 0.0
            for j in range(values.shape[0]):
                m += weights[j] * values[j]
            v = 0.0
            for j in range(values.shape[0]):
                d = values[j] - m
                v += weights[j] * d * d
            return m, v

        def exp_primal_numba(log_p, coeffs_t, multipliers):
            x, n_clamped = _exp_primal_jit(log_p, coeffs_t, multipliers)
            return x, int(n_clamped)

        def straddle_price_numba(spot, vol, strike, maturity, rate):
            return _straddle_price_jit(spot, vol, strike, maturity, rate)

        def weighted_mean_var_numba(values, weights):
            m, v = _weighted_mean_var_jit(values, weights)
            return float(m), float(v)


USING_NUMBA = _numba_wanted and exp_primal_numba is not None

if USING_NUMBA:
    exp_primal = exp_primal_numba
    straddle_price = straddle_price_numba
    weighted_mean_var = weighted_mean_var_numba
else:
    exp_primal = exp_primal_numpy
    straddle_price = straddle_price_numpy
    weighted_mean_var = weighted_mean_var_numpy
