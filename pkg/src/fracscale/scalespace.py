"""Scale-space fields of sampled 1-D signals via Fourier multipliers.

A field is the convolution phi(x, rho) = (f * g)(x) of a signal with a
kernel-family member, evaluated on a grid of bandwidths rho.  Rows are
computed in the frequency domain: FFT of the zero-padded signal, pointwise
multiplication by the kernel's closed-form frequency response, inverse FFT.
Signals are treated as identically zero outside their sampled window, and
the padding is sized so that periodic wrap-around of the kernel tails stays
below a configurable level.

Partial derivatives phi_x, phi_xx and phi_rho are produced spectrally (the
rho-derivative from the analytic derivative of the multiplier, never by
differencing rows), which keeps the heat-type identity
phi_xx = -a^2 rho^3 phi_rho exact to rounding for unnormalized kernels.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DomainError
from .kernels import KernelSpec, kernel_multiplier, tail_coefficient

TWO_PI = 2.0 * np.pi

# Periodic wrap-around target for padded convolutions, relative to the
# kernel peak.  1e-8 keeps oracle comparisons at 1e-6 comfortable; tree
# construction is insensitive and may relax it.
DEFAULT_WRAP_REL = 1e-8

MAX_PAD_LEN = 1 << 22


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real signal, zero outside the sampled window."""

    samples: np.ndarray
    dx: float
    x0: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 8:
            raise DomainError("signal needs at least 8 samples in one dimension")
        if not np.all(np.isfinite(arr)):
            raise DomainError("signal samples must be finite")
        if not (self.dx > 0):
            raise DomainError(f"sample spacing must be positive, got {self.dx}")
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def span(self) -> float:
        return self.dx * (self.n - 1)


@dataclass(frozen=True)
class ScaleGrid:
    """Strictly increasing bandwidths; x grid is bound when a field is built."""

    rho_values: np.ndarray
    x_values: np.ndarray | None = None

    def __post_init__(self):
        rho = np.asarray(self.rho_values, dtype=float)
        if rho.ndim != 1 or rho.size == 0:
            raise DomainError("rho_values must be a nonempty 1-D array")
        if not np.all(rho > 0) or not np.all(np.diff(rho) > 0):
            raise DomainError("rho_values must be positive and strictly increasing")
        object.__setattr__(self, "rho_values", rho)
        if self.x_values is not None:
            object.__setattr__(self, "x_values",
                               np.asarray(self.x_values, dtype=float))


def default_grid(signal: Signal, count: int = 64, rho_min: float | None = None,
                 rho_max: float | None = None) -> ScaleGrid:
    """Geometric bandwidth ladder covering the signal's resolvable band.

    Defaults span four times the fundamental up to half Nyquist; below that
    band the field is flat, above it aliased.
    """
    if count < 2:
        raise DomainError("grid needs at least 2 bandwidths")
    window = signal.n * signal.dx
    lo = rho_min if rho_min is not None else 4.0 * TWO_PI / window
    hi = rho_max if rho_max is not None else 0.5 * np.pi / signal.dx
    if not (0 < lo < hi):
        raise DomainError(f"bad bandwidth range [{lo}, {hi}]")
    return ScaleGrid(np.geomspace(lo, hi, count))


def padded_length(signal: Signal, spec: KernelSpec | None, rho_min: float,
                  wrap_rel: float = DEFAULT_WRAP_REL) -> int:
    """Power-of-two FFT length (>= 2n) keeping kernel wrap below wrap_rel.

    Accounts for the Gaussian spread at the coarsest bandwidth and, for
    fractional orders, the algebraic |x|^(-p-1) kernel tail.
    """
    n = signal.n
    spread = 8.0 / rho_min
    if spec is not None:
        k_tail = tail_coefficient(spec)
        if k_tail > 0:
            spread = max(spread, (k_tail / wrap_rel) ** (1.0 / (spec.p + 1.0)))
    m = 1 << int(np.ceil(np.log2(max(2 * n, n + 2.0 * spread / signal.dx))))
    if m > MAX_PAD_LEN:
        warnings.warn(
            f"padded length capped at {MAX_PAD_LEN} (requested {m}); "
            "wrap-around may exceed the target", RuntimeWarning)
        m = MAX_PAD_LEN
    return m


def padded_x(signal: Signal, n_pad: int) -> np.ndarray:
    """x coordinates of the centered zero-padded grid of length n_pad."""
    left = (n_pad - signal.n) // 2
    return signal.x0 - left * signal.dx + signal.dx * np.arange(n_pad)


def _embed(signal: Signal, n_pad: int) -> np.ndarray:
    left = (n_pad - signal.n) // 2
    out = np.zeros(n_pad)
    out[left:left + signal.n] = signal.samples
    return out


def _omega(n_pad: int, dx: float) -> np.ndarray:
    return np.fft.fftfreq(n_pad, d=dx) * TWO_PI


def _apply_multiplier(spectrum: np.ndarray, mult: np.ndarray) -> np.ndarray:
    out = np.fft.ifft(spectrum * mult)
    real = out.real
    resid = np.max(np.abs(out.imag))
    if resid > 1e-9 * max(np.max(np.abs(real)), 1e-300):
        raise FloatingPointError(
            f"imaginary residue {resid:.3e} exceeds tolerance; "
            "multiplier breaks Hermitian symmetry")
    return real


def convolve_freq(signal: Signal, spec: KernelSpec, rho: float,
                  n_pad: int | None = None,
                  wrap_rel: float = DEFAULT_WRAP_REL) -> np.ndarray:
    """One field row phi(., rho) on the padded x grid (see padded_x)."""
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    m = n_pad if n_pad is not None else padded_length(signal, spec, rho, wrap_rel)
    if m < 2 * signal.n:
        raise DomainError(f"padding factor must be >= 2 (n_pad {m} < 2n)")
    spectrum = np.fft.fft(_embed(signal, m))
    mult = kernel_multiplier(spec, _omega(m, signal.dx), rho)
    return _apply_multiplier(spectrum, mult)


def convolve_direct(signal: Signal, spec: KernelSpec, rho: float,
                    n_pad: int | None = None,
                    wrap_rel: float = DEFAULT_WRAP_REL,
                    tail_rel: float = 1e-12,
                    max_radius: float | None = None) -> np.ndarray:
    """Oracle convolution: trapezoid quadrature against exact kernel samples.

    Computes the plain (non-circular) discrete convolution on the same
    padded grid as convolve_freq.  The quadrature range per output point is
    the signal support intersected with the radius where the kernel tail
    falls below tail_rel of its peak; transient signals bound it anyway.
    Raises DomainError when that radius exceeds max_radius (slow tails at
    small p).
    """
    from .kernels import kernel_value

    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    m = n_pad if n_pad is not None else padded_length(signal, spec, rho, wrap_rel)
    n = signal.n
    k_tail = tail_coefficient(spec)
    peak = max(abs(kernel_value(spec, 0.0, rho)),
               abs(kernel_value(spec, 0.5 / rho, rho)))
    needed = (m - 1) * signal.dx
    if k_tail > 0:
        radius = (k_tail / (tail_rel * peak)) ** (1.0 / (spec.p + 1.0))
    else:
        radius = needed
    if max_radius is not None and min(radius, needed) > max_radius:
        raise DomainError(
            f"truncation radius {min(radius, needed):.3g} exceeds cap {max_radius:.3g}")
    radius = min(radius, needed)
    left = (m - n) // 2
    # lags from -(left+n-1) to (m-1-left) cover every (output, input) pair
    lags = (np.arange(m + n - 1) - (left + n - 1)) * signal.dx
    kv = kernel_value(spec, lags, rho)
    kv[np.abs(lags) > radius] = 0.0
    full = np.convolve(signal.samples, kv)
    return full[n - 1:n - 1 + m] * signal.dx


@dataclass
class ScaleSpaceField:
    """phi (and optional derivatives) on the padded (x, rho) grid.

    core_slice marks the columns of the original signal window; columns
    outside valid_slice are close enough to the periodic seam that contours
    touching them are treated as padding artifacts.
    """

    phi: np.ndarray
    x_values: np.ndarray
    rho_values: np.ndarray
    spec: KernelSpec | None
    signal: Signal
    phi_x: np.ndarray | None = None
    phi_xx: np.ndarray | None = None
    phi_rho: np.ndarray | None = None
    core_slice: slice = dataclass_field(default=slice(None))
    valid_slice: slice = dataclass_field(default=slice(None))

    @property
    def grid(self) -> ScaleGrid:
        return ScaleGrid(self.rho_values, self.x_values)

    @property
    def has_derivatives(self) -> bool:
        return self.phi_xx is not None and self.phi_rho is not None

    def row(self, i: int) -> np.ndarray:
        return self.phi[i]


def _valid_slice(n_pad: int, left: int, n: int, dx: float, rho_min: float) -> slice:
    # keep the core window plus a margin for smoothing spill-over, but stay
    # clear of the periodic seam by at least a quarter of each pad side
    margin_x = 4.0 / rho_min
    margin = int(min(margin_x / dx, 0.75 * left))
    lo = max(0, left - margin)
    hi = min(n_pad, left + n + margin)
    return slice(lo, hi)


def _rho_mult_derivative(spec: KernelSpec, omega: np.ndarray, rho: float,
                         mult: np.ndarray) -> np.ndarray:
    """Analytic d/drho of the multiplier (normalization-aware)."""
    core = (omega * omega) / (abs(spec.a) ** 2 * rho ** 3)
    if spec.normalize:
        # the L2 norm scales as rho^(p+1/2); its log-derivative is exact
        return (core - (spec.p + 0.5) / rho) * mult
    return core * mult


def build_field(signal: Signal, spec: KernelSpec, grid: ScaleGrid,
                with_derivatives: bool = False, threads: int = 1,
                wrap_rel: float = DEFAULT_WRAP_REL,
                n_pad: int | None = None) -> ScaleSpaceField:
    """Fill the field row by row through the frequency domain.

    Rows are independent; with threads > 1 they are computed concurrently
    and written to disjoint slices, so the result is identical for any
    thread count.
    """
    rho_values = grid.rho_values
    m = n_pad if n_pad is not None else padded_length(
        signal, spec, float(rho_values[0]), wrap_rel)
    spectrum = np.fft.fft(_embed(signal, m))
    omega = _omega(m, signal.dx)
    shape = (rho_values.size, m)
    phi = np.empty(shape)
    phi_x = np.empty(shape) if with_derivatives else None
    phi_xx = np.empty(shape) if with_derivatives else None
    phi_rho = np.empty(shape) if with_derivatives else None

    def fill(i: int) -> None:
        rho = float(rho_values[i])
        mult = kernel_multiplier(spec, omega, rho)
        base = spectrum * mult
        phi[i] = _apply_multiplier(spectrum, mult)
        if with_derivatives:
            phi_x[i] = np.fft.ifft(base * (1j * omega)).real
            phi_xx[i] = np.fft.ifft(base * -(omega * omega)).real
            dmult = _rho_mult_derivative(spec, omega, rho, mult)
            phi_rho[i] = np.fft.ifft(spectrum * dmult).real

    indices = range(rho_values.size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, indices))
    else:
        for i in indices:
            fill(i)

    left = (m - signal.n) // 2
    core = slice(left, left + signal.n)
    valid = _valid_slice(m, left, signal.n, signal.dx, float(rho_values[0]))
    return ScaleSpaceField(
        phi=phi, x_values=padded_x(signal, m), rho_values=rho_values,
        spec=spec, signal=signal, phi_x=phi_x, phi_xx=phi_xx, phi_rho=phi_rho,
        core_slice=core, valid_slice=valid)


def build_field_from_multiplier(signal: Signal, grid: ScaleGrid, multiplier_fn,
                                n_pad: int | None = None) -> ScaleSpaceField:
    """Field for an arbitrary multiplier function(omega, rho) -> complex array.

    Meant for negative controls outside the kernel family; phi_rho comes
    from central differences across rows since no closed form exists.
    """
    rho_values = grid.rho_values
    if rho_values.size < 3:
        raise DomainError("multiplier fields need at least 3 rows for phi_rho")
    m = n_pad if n_pad is not None else 1 << int(np.ceil(np.log2(2 * signal.n)))
    spectrum = np.fft.fft(_embed(signal, m))
    omega = _omega(m, signal.dx)
    rows = []
    rows_xx = []
    for rho in rho_values:
        mult = np.asarray(multiplier_fn(omega, float(rho)))
        base = spectrum * mult
        rows.append(np.fft.ifft(base).real)
        rows_xx.append(np.fft.ifft(base * -(omega * omega)).real)
    phi = np.stack(rows)
    phi_xx = np.stack(rows_xx)
    phi_rho = np.gradient(phi, rho_values, axis=0)
    left = (m - signal.n) // 2
    core = slice(left, left + signal.n)
    return ScaleSpaceField(
        phi=phi, x_values=padded_x(signal, m), rho_values=rho_values,
        spec=None, signal=signal, phi_x=None, phi_xx=phi_xx, phi_rho=phi_rho,
        core_slice=core, valid_slice=core)


def fractional_derivative(signal: Signal, p: float, parity: str = "even",
                          n_pad: int | None = None,
                          wrap_rel: float = DEFAULT_WRAP_REL,
                          energy_threshold: float = 0.01) -> np.ndarray:
    """Order-p derivative of the signal on the padded grid.

    Applies the kernel multiplier with the Gaussian envelope removed
    (|omega|^p for even parity, i sign(omega) |omega|^p for odd), i.e. the
    large-rho limit of the field rows.  With this convention the even
    p = 2 result is -f'' and p = 0 returns the signal itself.

    Warns when too much of the weighted spectrum sits in the top octave:
    the sampled signal is then too rough for the requested order (heuristic
    stand-in for an unverifiable smoothness hypothesis).
    """
    if parity not in ("even", "odd"):
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")
    if p < 0 or (parity == "odd" and p == 0):
        raise DomainError(f"order p={p} invalid for parity {parity!r}")
    ref_spec = KernelSpec(p=max(p, 1e-9), a=1.0, alpha=1.0, beta=0.0)
    m = n_pad if n_pad is not None else padded_length(
        signal, ref_spec if p > 0 else None, 1.0, wrap_rel)
    spectrum = np.fft.fft(_embed(signal, m))
    omega = _omega(m, signal.dx)
    weight = np.abs(omega) ** (2.0 * p) * np.abs(spectrum) ** 2
    total = float(np.sum(weight))
    if total > 0:
        nyq = np.pi / signal.dx
        top = np.abs(omega) >= 0.5 * nyq
        frac = float(np.sum(weight[top])) / total
        if frac > energy_threshold:
            warnings.warn(
                f"top-octave energy fraction {frac:.2e} exceeds "
                f"{energy_threshold:.1e}; spectrum decays too slowly for "
                f"order p={p}", RuntimeWarning)
    power = np.abs(omega) ** p
    if parity == "even":
        mult = power.astype(complex)
    else:
        mult = 1j * np.sign(omega) * power
    return _apply_multiplier(spectrum, mult)


@dataclass(frozen=True)
class CausalityReport:
    """Grid points violating the monotonicity sign condition."""

    strong: np.ndarray          # (k, 2) row/col indices
    weak: np.ndarray            # subset near sign changes of phi_x
    tau: float
    points_checked: int

    @property
    def strong_count(self) -> int:
        return int(self.strong.shape[0])

    @property
    def weak_count(self) -> int:
        return int(self.weak.shape[0])


def check_causality(field: ScaleSpaceField, tau_rel: float = 1e-8) -> CausalityReport:
    """Scan for phi_rho * phi_xx >= 0 above the noise floor.

    The strong condition demands a negative product wherever either factor
    is materially nonzero; the weak variant restricts to neighborhoods of
    sign changes of phi_x along each row.  The floor tau screens points
    where both factors sit at rounding-noise level.
    """
    if not field.has_derivatives:
        raise DomainError("field was built without derivatives")
    pr, pxx = field.phi_rho, field.phi_xx
    tau = tau_rel * float(np.max(np.abs(pxx)))
    product = pr * pxx
    material = np.maximum(np.abs(pr), np.abs(pxx)) > tau
    bad = (product >= 0) & material
    strong = np.argwhere(bad)

    if field.phi_x is not None:
        px = field.phi_x
    else:
        px = np.gradient(field.phi, field.x_values, axis=1)
    sign_flip = np.zeros_like(bad)
    flips = np.sign(px[:, :-1]) * np.sign(px[:, 1:]) < 0
    sign_flip[:, :-1] |= flips
    sign_flip[:, 1:] |= flips
    weak = np.argwhere(bad & sign_flip)
    return CausalityReport(strong=strong, weak=weak, tau=tau,
                           points_checked=int(product.size))


def sign_change_count(values: np.ndarray, floor_rel: float = 1e-9) -> int:
    """Count sign alternations, ignoring entries below a relative floor."""
    v = np.asarray(values, dtype=float)
    peak = float(np.max(np.abs(v), initial=0.0))
    if peak == 0.0:
        return 0
    s = np.sign(v)
    s[np.abs(v) < floor_rel * peak] = 0
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.sum(s[:-1] != s[1:]))


@dataclass(frozen=True)
class PsiView:
    """The field reparameterized by scale sigma = 1/rho (ascending).

    Row 0 corresponds to the finest computed scale; psi_sigma is the exact
    chain-rule image -rho^2 phi_rho, so sigma * psi_xx == psi_sigma holds
    wherever the field satisfies the heat-type identity.
    """

    sigma_values: np.ndarray
    psi: np.ndarray
    psi_xx: np.ndarray | None
    psi_sigma: np.ndarray | None
    x_values: np.ndarray


def psi_view(field: ScaleSpaceField) -> PsiView:
    order = slice(None, None, -1)
    sigma = 1.0 / field.rho_values[order]
    psi = field.phi[order]
    psi_xx = field.phi_xx[order] if field.phi_xx is not None else None
    if field.phi_rho is not None:
        rho_col = field.rho_values[order][:, None]
        psi_sigma = -(rho_col ** 2) * field.phi_rho[order]
    else:
        psi_sigma = None
    return PsiView(sigma_values=sigma, psi=psi, psi_xx=psi_xx,
                   psi_sigma=psi_sigma, x_values=field.x_values)
