"""Confluent hypergeometric machinery behind the kernel profile functions.

The even/odd profile functions evaluated here are the building blocks of the
scale-space kernel family: an even profile ``lambda_profile(p, x, 'even')``
and an odd one, both defined through Kummer's confluent hypergeometric
function M(a, b, z) at z = -x^2/2.  Evaluation is split into three regimes:

* small |z|: a transformed power series whose terms are eventually
  one-signed, so no catastrophic cancellation (the raw series at z < 0
  alternates and loses all precision near x ~ 15 in double precision);
* integer orders matched to the parity: the transformed series terminates
  and is exact (these profiles are Gaussian derivatives up to constants);
* large |z|: an asymptotic expansion in inverse powers of |z|, truncated
  at its smallest term.

All functions are pure and accept scalars or numpy arrays for ``x``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)

# |z| above which lambda_profile switches from series to asymptotics.  Both
# branches agree to ~1e-9 relative here for the order range of interest.
SERIES_CROSSOVER = 30.0

# exp(z) underflows below roughly -745; stay clear of the subnormal range.
SERIES_Z_LIMIT = 700.0

DEFAULT_MAX_TERMS = 10_000

_INT_TOL = 1e-12


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0.5 and abs(v - round(v)) < _INT_TOL


def gamma(x: float) -> float:
    """Gamma function; raises DomainError at the poles 0, -1, -2, ..."""
    if _is_nonpositive_integer(x):
        raise DomainError(f"gamma pole at x={x}")
    return math.gamma(x)


def _raw_series(a: float, b: float, z, tol: float, max_terms: int):
    """Power-series sum of M(a, b, z); z may be an array.  Safe for z >= 0."""
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    zmax = float(np.max(np.abs(z), initial=0.0))
    for n in range(max_terms):
        term = term * ((a + n) / (b + n)) * z / (n + 1)
        total = total + term
        if n >= zmax and np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)):
            return total
    raise ConvergenceError(
        f"hypergeometric series did not converge in {max_terms} terms (a={a}, b={b})"
    )


def _transformed_series(a: float, b: float, z, tol: float, max_terms: int):
    """M(a, b, z) for z <= 0 via M(a,b,z) = e^z M(b-a, b, -z).

    The e^z factor is folded into the initial term so every partial result
    stays in range even for z near -700.  The reflected series has at most
    finitely many sign changes in its terms, so the summation is stable.
    """
    z = np.asarray(z, dtype=float)
    zp = -z
    term = np.exp(z)
    total = term.copy()
    ba = b - a
    zmax = float(np.max(zp, initial=0.0))
    for n in range(max_terms):
        term = term * ((ba + n) / (b + n)) * zp / (n + 1)
        total = total + term
        if np.all(term == 0.0):
            return total
        if n >= zmax and np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)):
            return total
    raise ConvergenceError(
        f"transformed hypergeometric series did not converge in {max_terms} terms "
        f"(a={a}, b={b})"
    )


def _terminating_log_series(a: float, b: float, z):
    """Terminating case (b - a a nonpositive integer) for very negative z.

    Sums the finite reflected polynomial without the e^z scale, then applies
    exp(z) in log space so the product survives even when e^z alone would
    underflow.
    """
    z = np.asarray(z, dtype=float)
    zp = -z
    nterms = int(round(a - b))  # -(b - a)
    term = np.ones_like(z)
    poly = np.ones_like(z)
    ba = b - a
    for n in range(nterms):
        term = term * ((ba + n) / (b + n)) * zp / (n + 1)
        poly = poly + term
    out = np.zeros_like(z)
    nz = poly != 0.0
    with np.errstate(divide="ignore"):
        logs = z[nz] + np.log(np.abs(poly[nz]))
    out[nz] = np.sign(poly[nz]) * np.exp(logs)
    return out


def kummer_m(a: float, b: float, z: float, tol: float = 1e-15,
             max_terms: int = DEFAULT_MAX_TERMS) -> float:
    """Kummer's confluent hypergeometric function M(a, b, z).

    For z < 0 the evaluation goes through the reflection
    M(a,b,z) = e^z M(b-a, b, -z) whose series does not suffer the
    catastrophic cancellation of the raw alternating sum.

    Raises DomainError when b is a nonpositive integer or z is beyond the
    double-precision series range, ConvergenceError past the term cap.
    """
    if _is_nonpositive_integer(b):
        raise DomainError(f"M(a, b, z) undefined for nonpositive integer b={b}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if z >= 0:
        return float(_raw_series(a, b, float(z), tol, max_terms))
    if _is_nonpositive_integer(b - a):
        return float(_terminating_log_series(a, b, float(z)))
    if z < -SERIES_Z_LIMIT:
        raise DomainError(
            f"z={z} beyond the series range (|z| <= {SERIES_Z_LIMIT}); "
            "use kummer_m_asymptotic"
        )
    return float(_transformed_series(a, b, float(z), tol, max_terms))


def kummer_m_asymptotic(a: float, b: float, z: float,
                        crossover: float = SERIES_CROSSOVER) -> float:
    """Leading large-|z| behaviour of M(a, b, z) for z < 0.

    Returns Gamma(b)/Gamma(b-a) * (-z)^(-a).  Requires z <= -crossover and
    b - a not a nonpositive integer (the gamma factor has poles there).
    """
    if _is_nonpositive_integer(b - a):
        raise DomainError(
            f"asymptotic form undefined: b-a={b - a} is a nonpositive integer"
        )
    if z > -crossover:
        raise DomainError(f"asymptotic form needs z <= -{crossover}, got z={z}")
    return gamma(b) / gamma(b - a) * (-z) ** (-a)


def _asymptotic_series(a: float, b: float, z, max_terms: int = 20):
    """Corrected asymptotic expansion of M(a,b,z) for very negative z.

    Sums Gamma(b)/Gamma(b-a) (-z)^(-a) * sum_n (a)_n (a-b+1)_n / (n! (-z)^n),
    truncating each entry at its smallest term (the series is divergent).
    Vectorized over z; caller guarantees z <= -SERIES_CROSSOVER.
    """
    z = np.asarray(z, dtype=float)
    mz = -z
    coef = math.gamma(b) / math.gamma(b - a)
    term = np.ones_like(z)
    total = np.ones_like(z)
    frozen = np.zeros(z.shape, dtype=bool)
    prev = np.abs(term)
    for n in range(max_terms):
        term = term * ((a + n) * (a - b + 1 + n)) / ((n + 1) * mz)
        grew = np.abs(term) >= prev
        frozen |= grew
        total = np.where(frozen, total, total + term)
        prev = np.abs(term)
        if np.all(frozen):
            break
    return coef * mz ** (-a) * total


def _profile_params(p: float, parity: str):
    if parity == "even":
        return (p + 1.0) / 2.0, 0.5
    if parity == "odd":
        return (p + 2.0) / 2.0, 1.5
    raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def _validate_order(p: float, parity: str) -> None:
    if parity == "even":
        if p < 0:
            raise DomainError(f"even profile needs order p >= 0, got p={p}")
    elif parity == "odd":
        if p <= 0:
            raise DomainError(f"odd profile needs order p > 0, got p={p}")
    else:
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def _profile_terminates(p: float, parity: str) -> bool:
    # The reflected series terminates when b - a is a nonpositive integer:
    # even orders for the even profile, odd orders for the odd profile.
    a, b = _profile_params(p, parity)
    return _is_nonpositive_integer(b - a)


def _m_factor(p: float, parity: str, z, crossover: float, tol: float,
              max_terms: int):
    """M(a, b, z) on an array of z <= 0 with regime dispatch."""
    a, b = _profile_params(p, parity)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    if _profile_terminates(p, parity):
        near = z >= -SERIES_Z_LIMIT
        if np.any(near):
            out[near] = _transformed_series(a, b, z[near], tol, max_terms)
        if np.any(~near):
            out[~near] = _terminating_log_series(a, b, z[~near])
        return out
    series = z >= -crossover
    if np.any(series):
        out[series] = _transformed_series(a, b, z[series], tol, max_terms)
    if np.any(~series):
        out[~series] = _asymptotic_series(a, b, z[~series])
    return out


def lambda_profile(p: float, x, parity: str = "even",
                   crossover: float = SERIES_CROSSOVER, tol: float = 1e-15,
                   max_terms: int = DEFAULT_MAX_TERMS):
    """Even or odd kernel profile of fractional order p at x.

    even:  M((p+1)/2, 1/2, -x^2/2) / sqrt(2 pi)
    odd:   x * M((p+2)/2, 3/2, -x^2/2) / sqrt(2 pi)

    The result is exactly even (resp. odd) in x since only x^2 enters the
    hypergeometric factor.  Scalar in, scalar out; array in, array out.
    """
    _validate_order(p, parity)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("x must be finite")
    z = -0.5 * x_arr * x_arr
    m = _m_factor(p, parity, z, crossover, tol, max_terms)
    if parity == "even":
        out = m / SQRT_2PI
    else:
        out = x_arr * m / SQRT_2PI
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(out)
    return out


def lambda_derivative(p: float, x, parity: str = "even",
                      crossover: float = SERIES_CROSSOVER):
    """First derivative of the profile via the closed shift recurrences.

    d/dx even_p = -(p+1) * odd_{p+1};  d/dx odd_p = even_{p+1}.
    Never uses numeric differencing.
    """
    _validate_order(p, parity)
    if parity == "even":
        return -(p + 1.0) * lambda_profile(p + 1.0, x, "odd", crossover)
    return lambda_profile(p + 1.0, x, "even", crossover)


def profile_tail_coefficient(p: float, parity: str = "even") -> float:
    """Coefficient C of the algebraic tail C * x^(-p-1) as x -> +inf.

    Zero for parity-matched integer orders (Gaussian-derivative profiles
    decay faster than any power).  Pinned through the gamma-ratio form of
    the large-|z| limit and verified against the series in the test suite.
    """
    _validate_order(p, parity)
    if _profile_terminates(p, parity):
        return 0.0
    a, b = _profile_params(p, parity)
    scale = math.gamma(b) / math.gamma(b - a) * 2.0 ** a
    return scale / SQRT_2PI
