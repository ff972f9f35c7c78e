"""Deterministic synthetic signals used by the demos, tests, and verify run.

Everything here is reproducible from fixed parameters or an explicit seed.
Bump sums are smooth and effectively band-limited (Gaussian spectra), and
transient by construction, which is what the zero-padded convolution model
assumes.
"""

from __future__ import annotations

import numpy as np

from .scalespace import ScaleGrid, Signal


def bump_sum(amps, centers, widths, n: int = 512, dx: float = 0.08,
             x0: float | None = None) -> Signal:
    """Sum of Gaussian bumps amps[k] * exp(-((x-centers[k])/widths[k])^2)."""
    if x0 is None:
        x0 = -0.5 * dx * (n - 1)
    x = x0 + dx * np.arange(n)
    f = np.zeros(n)
    for a, c, w in zip(amps, centers, widths):
        f += a * np.exp(-(((x - c) / w) ** 2))
    return Signal(f, dx, x0)


def two_bump(n: int = 512, dx: float = 0.08) -> Signal:
    """The bundled two-bump demo fixture."""
    return bump_sum([1.0, 0.65], [-4.0, 5.0], [1.2, 0.9], n=n, dx=dx)


def two_bump_grid(n: int = 512, dx: float = 0.08, count: int = 64) -> ScaleGrid:
    return ScaleGrid(np.geomspace(0.15, 12.0, count))


def smooth_default(n: int = 1024, span: float = 40.0) -> Signal:
    """Smooth three-bump fixture on [-span/2, span/2] (verify, oracles)."""
    dx = span / n
    return bump_sum([1.3, 0.9, -0.7], [-6.0, 3.0, 9.0], [2.0, 1.5, 2.5],
                    n=n, dx=dx, x0=-0.5 * span)


def random_band_limited(seed: int, n: int = 256, dx: float = 0.15,
                        max_bumps: int = 4) -> Signal:
    """Seeded random bump sum, normalized to unit peak.

    Centers stay in the middle 60% of the window and widths span a couple
    of octaves, so the signals are smooth, transient, and structurally
    varied.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, max_bumps + 1))
    span = n * dx
    centers = rng.uniform(-0.3 * span, 0.3 * span, size=k)
    widths = rng.uniform(0.02 * span, 0.08 * span, size=k)
    amps = rng.uniform(0.35, 1.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    sig = bump_sum(amps, centers, widths, n=n, dx=dx)
    peak = float(np.max(np.abs(sig.samples)))
    return Signal(sig.samples / peak, sig.dx, sig.x0)


def unit_impulse(n: int = 64, dx: float = 0.5) -> Signal:
    """Unit-mass discrete impulse at the window center."""
    f = np.zeros(n)
    f[n // 2] = 1.0 / dx
    return Signal(f, dx, -0.5 * dx * (n - 1))


def boxcar_multiplier(omega, rho):
    """Ideal low-pass response; not in the kernel family (negative control)."""
    return (np.abs(np.asarray(omega)) <= rho).astype(complex)


# Frozen pair for the fractional-distinguishability experiment: identical
# interval and nesting trees at p in {0, 1, 2}, different trees at p = 1.35
# (bifurcation orders straddle 1.35).  Found by the parameter search in
# demos/05_search_distinguishable_pair.py and pinned here.
GOLDEN_PAIR_PARAMS: dict = {}


def golden_pair():
    """The committed signal pair plus the bandwidth grid they are judged on."""
    if not GOLDEN_PAIR_PARAMS:
        raise NotImplementedError("golden pair parameters not frozen yet")
    pa = GOLDEN_PAIR_PARAMS["a"]
    pb = GOLDEN_PAIR_PARAMS["b"]
    g = GOLDEN_PAIR_PARAMS["grid"]
    n = GOLDEN_PAIR_PARAMS["n"]
    dx = GOLDEN_PAIR_PARAMS["dx"]
    sig_a = bump_sum(pa["amps"], pa["centers"], pa["widths"], n=n, dx=dx)
    sig_b = bump_sum(pb["amps"], pb["centers"], pb["widths"], n=n, dx=dx)
    grid = ScaleGrid(np.geomspace(g["rho_min"], g["rho_max"], g["count"]))
    return sig_a, sig_b, grid


def named_fixture(name: str, seed: int = 0) -> Signal:
    """Resolve a fixture by name (CLI 'fixture:NAME' inputs)."""
    if name == "two_bump":
        return two_bump()
    if name == "smooth":
        return smooth_default()
    if name == "golden_a":
        return golden_pair()[0]
    if name == "golden_b":
        return golden_pair()[1]
    if name == "random_band":
        return random_band_limited(seed)
    if name == "impulse":
        return unit_impulse()
    raise KeyError(f"unknown fixture {name!r}; available: two_bump, smooth, "
                   "golden_a, golden_b, random_band, impulse")
