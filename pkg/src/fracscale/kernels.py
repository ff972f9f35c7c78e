"""The maximal scale-space kernel family and its Fourier multipliers.

A kernel is a mixture ``alpha * even + beta * odd`` of scaled profile
functions of fractional order p with gauge a and bandwidth rho.  The
normalization convention fixes the frequency response to

    G_hat(omega, rho) = [alpha + i beta sign(omega)] |omega/a|^p
                        * exp(-omega^2 / (2 (a rho)^2))

so that p=0, alpha=1 is exactly the unit-mass Gaussian response
exp(-omega^2/(2 rho^2)).  ``kernel_value`` and ``kernel_multiplier`` form an
exact Fourier pair under this convention; all tree constructions are
invariant under the overall scale this pins down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureError
from .specfun import SQRT_2PI, lambda_profile, profile_tail_coefficient


@dataclass(frozen=True)
class KernelSpec:
    """One member of the kernel family.

    p: fractional order >= 0 (the p=0 member is the Gaussian itself)
    a: gauge, nonzero; enters only through |a| (rescales x and omega)
    alpha, beta: even/odd mixing coefficients, not both zero
    normalize: divide values and multiplier by the L2 norm
    """

    p: float
    a: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    normalize: bool = False

    def __post_init__(self):
        if not (self.p >= 0):
            raise DomainError(f"order p must be >= 0, got {self.p}")
        if self.a == 0:
            raise DomainError("gauge a must be nonzero")
        if self.alpha == 0 and self.beta == 0:
            raise DomainError("mixing coefficients (alpha, beta) must not both be zero")
        if self.beta != 0 and self.p == 0:
            raise DomainError("odd component requires p > 0 (the order-0 odd "
                              "profile is not integrable)")


def gaussian_value(x, rho: float):
    """The bandwidth-parameterized Gaussian rho/sqrt(2 pi) exp(-(x rho)^2/2)."""
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    x = np.asarray(x, dtype=float)
    return rho / SQRT_2PI * np.exp(-0.5 * (x * rho) ** 2)


@lru_cache(maxsize=256)
def _transform_constant(p: float, parity: str) -> float:
    """Exact Fourier amplitude of the unit profile of order p.

    The transform of the even profile is  c_e |omega|^p exp(-omega^2/2)
    with c_e = sqrt(2 pi) / (2^((p+1)/2) Gamma((p+1)/2)); the odd profile
    transforms to c_o i sign(omega) |omega|^p exp(-omega^2/2) with
    c_o = -sqrt(2 pi) / (2^((p+2)/2) Gamma((p+2)/2)).  Pinned by evaluating
    the inverse transform (and its derivative) at x = 0.
    """
    if parity == "even":
        return SQRT_2PI / (2.0 ** ((p + 1.0) / 2.0) * math.gamma((p + 1.0) / 2.0))
    return -SQRT_2PI / (2.0 ** ((p + 2.0) / 2.0) * math.gamma((p + 2.0) / 2.0))


def kernel_value(spec: KernelSpec, x, rho: float):
    """Spatial kernel samples at bandwidth rho; vectorized over x."""
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    aa = abs(spec.a)
    u = np.asarray(x, dtype=float) * (aa * rho)
    scale = rho ** (spec.p + 1.0)
    out = np.zeros_like(u)
    if spec.alpha != 0:
        ce = _transform_constant(spec.p, "even")
        out = out + (spec.alpha * aa / ce) * scale * lambda_profile(spec.p, u, "even")
    if spec.beta != 0:
        co = _transform_constant(spec.p, "odd")
        out = out + (spec.beta * aa / co) * scale * lambda_profile(spec.p, u, "odd")
    if spec.normalize:
        out = out / l2_norm(spec, rho)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def kernel_multiplier(spec: KernelSpec, omega, rho: float):
    """Frequency response at bandwidth rho; vectorized over omega.

    At omega = 0 the response is alpha for p = 0 and 0 for p > 0 (the
    continuous limit of |omega|^p; note 0^0 = 1 covers the p = 0 case).
    """
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    aa = abs(spec.a)
    w = np.asarray(omega, dtype=float)
    power = (np.abs(w) / aa) ** spec.p
    envelope = np.exp(-(w * w) / (2.0 * (aa * rho) ** 2))
    out = (spec.alpha + 1j * spec.beta * np.sign(w)) * power * envelope
    if spec.normalize:
        out = out / l2_norm(spec, rho)
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return complex(out)
    return out


def _unit_l2_integral(p: float, a: float, rho: float) -> float:
    """Integral of the squared unit-coefficient even kernel (alpha=1)."""
    base = KernelSpec(p=p, a=a, alpha=1.0, beta=0.0, normalize=False)

    def integrand(x):
        return kernel_value(base, x, rho) ** 2

    val, err = quad(integrand, 0.0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-11)
    if not np.isfinite(val) or err > 1e-7 * max(abs(val), 1e-30):
        raise QuadratureError(
            f"L2 quadrature did not converge (p={p}, rho={rho}): value {val}, "
            f"error estimate {err}"
        )
    return 2.0 * val


@lru_cache(maxsize=256)
def _unit_l2_cached(p: float, a: float, rho: float) -> float:
    return _unit_l2_integral(p, a, rho)


def l2_norm(spec: KernelSpec, rho: float) -> float:
    """L2 norm sqrt(integral g^2 dx), by adaptive spatial quadrature.

    The even/odd cross term integrates to zero by parity and the two pure
    parts carry equal energy (their multipliers have equal magnitude), so
    the norm factors as hypot(alpha, beta) times the unit-kernel norm.
    That keeps coefficient scaling exact: doubling alpha doubles the norm.
    """
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    unit = _unit_l2_cached(spec.p, abs(spec.a), rho)
    return math.hypot(spec.alpha, spec.beta) * math.sqrt(unit)


def l2_norm_spectral(spec: KernelSpec, rho: float) -> float:
    """Independent Parseval route: (1/2 pi) integral |G_hat|^2 domega."""
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    aa = abs(spec.a)
    amp2 = spec.alpha ** 2 + spec.beta ** 2

    def integrand(w):
        return (w / aa) ** (2.0 * spec.p) * math.exp(-(w * w) / ((aa * rho) ** 2))

    val, err = quad(integrand, 0.0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-11)
    if not np.isfinite(val) or err > 1e-7 * max(abs(val), 1e-30):
        raise QuadratureError(f"spectral L2 quadrature did not converge (p={spec.p})")
    return math.sqrt(amp2 * 2.0 * val / (2.0 * math.pi))


def l1_norm(spec: KernelSpec, rho: float, radius: float = 60.0) -> float:
    """Numeric L1 norm: quadrature out to ``radius``/rho plus an algebraic
    tail bound from the large-x form of the profiles.

    Finite for p > 0 and for the p = 0 even kernel; this is the stability
    property that keeps convolution well defined on bounded signals.
    """
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    cut = radius / rho

    def integrand(x):
        return abs(kernel_value(spec, x, rho))

    core_pos, _ = quad(integrand, 0.0, cut, limit=400)
    core_neg, _ = quad(integrand, -cut, 0.0, limit=400)
    tail = tail_coefficient(spec)
    if tail > 0:
        if spec.p <= 0:
            raise QuadratureError("L1 tail diverges for p <= 0 with an odd component")
        # integral of C x^(-p-1) from cut to infinity, both sides
        tail_mass = 2.0 * tail * cut ** (-spec.p) / spec.p
    else:
        tail_mass = 0.0
    return core_pos + core_neg + tail_mass


def tail_coefficient(spec: KernelSpec) -> float:
    """Coefficient K of the |x|^(-p-1) spatial tail of the kernel.

    Zero when both mixture parts are Gaussian-derivative profiles
    (parity-matched integer orders).  Used for padding and truncation
    estimates; bandwidth-free because the rho^(p+1) scaling cancels.
    """
    aa = abs(spec.a)
    k = 0.0
    if spec.alpha != 0:
        ce = _transform_constant(spec.p, "even")
        k += abs(spec.alpha / ce * profile_tail_coefficient(spec.p, "even")) * aa ** (-spec.p)
    if spec.beta != 0:
        co = _transform_constant(spec.p, "odd")
        k += abs(spec.beta / co * profile_tail_coefficient(spec.p, "odd")) * aa ** (-spec.p)
    return k


def spec_to_text(spec: KernelSpec) -> str:
    """Serialize to the plain-text record (exact decimal round-trip)."""
    lines = [
        f"p={spec.p!r}",
        f"a={spec.a!r}",
        f"alpha={spec.alpha!r}",
        f"beta={spec.beta!r}",
        f"normalize={'true' if spec.normalize else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> KernelSpec:
    """Parse the plain-text record produced by spec_to_text."""
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"bad kernel record line: {line!r}")
        key, _, val = line.partition("=")
        fields[key.strip()] = val.strip()
    unknown = set(fields) - {"p", "a", "alpha", "beta", "normalize"}
    if unknown:
        raise DomainError(f"unknown kernel record keys: {sorted(unknown)}")
    try:
        return KernelSpec(
            p=float(fields["p"]),
            a=float(fields.get("a", "1.0")),
            alpha=float(fields.get("alpha", "1.0")),
            beta=float(fields.get("beta", "0.0")),
            normalize=fields.get("normalize", "false").lower() in ("true", "1", "yes"),
        )
    except KeyError as exc:
        raise DomainError(f"kernel record missing key: {exc}") from exc


def with_normalize(spec: KernelSpec, normalize: bool) -> KernelSpec:
    return replace(spec, normalize=normalize)
