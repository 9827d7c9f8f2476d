"""Kernel profiles a(r), their integrals, and Orlicz-norm machinery.

The main construction: given a kernel profile with A(r) = int_0^r a(t)/t dt
finite, exponents N and p, the Young function Phi is defined through its
inverse

    Phi^{-1}(r) = int_0^r A(t^{-1/N}) t^{-1/p'} dt.

Swapping the order of the double integral collapses this to two single
integrals that cumulative quadrature handles well:

    Phi^{-1}(r) = p r^{1/p} A(r^{-1/N}) + p B(r^{-1/N}),
    B(s) = int_s^inf a(w) w^{-N/p-1} dw,

which for a(r) = r^alpha gives the closed form
Phi^{-1}(r) = N / (alpha (N/p - alpha)) * r^{1/q} with 1/q = 1/p - alpha/N.

Norms: the Luxemburg norm solves sum Phi(|f|/eta) haar = 1 for eta by
bracketing plus Brent's method; for Phi(r) = r^p it reduces to the weighted
L^p norm.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    DivergentIntegralError,
    KernelHypothesisError,
    NormComputationError,
)
from .hypergroup import GridFunction

# sup_{r>0} r / ((e+r) ln(e+r)), attained near r = 5.834.  This bounds the
# logarithmic part of d(ln a)/d(ln r) for a(r) = r^alpha (log(e+r))^beta, so
# alpha + max(beta, 0) * sup is a decay exponent making a(r)/r^d monotone.
LOG_SLOPE_SUP = 0.3178444329

KERNEL_FAMILIES = ("power", "power_log", "tabulated")


@dataclass(frozen=True)
class KernelSpec:
    """Parametric kernel profile a(r) on (0, inf).

    power:      a(r) = r^alpha
    power_log:  a(r) = r^alpha * (log(e+r))^beta
    tabulated:  log-log interpolation of (grid_r, grid_a) samples, extended
                beyond the table by the terminal log-log slopes

    ``decay_exponent`` is the exponent d for which a(r)/r^d is (almost)
    decreasing; when omitted it defaults to alpha plus a safe margin for a
    positive log power.  Tabulated profiles must state it explicitly.
    """

    family: str
    alpha: float = 0.0
    beta: float = 0.0
    decay_exponent: float | None = None
    grid_r: tuple | None = None
    grid_a: tuple | None = None

    def __post_init__(self) -> None:
        if self.family not in KERNEL_FAMILIES:
            raise KernelHypothesisError(f"unknown kernel family {self.family!r}")
        if self.family in ("power", "power_log"):
            if self.alpha <= 0:
                raise KernelHypothesisError("need alpha > 0 for parametric kernels")
            if self.decay_exponent is None:
                d = self.alpha + max(self.beta, 0.0) * LOG_SLOPE_SUP
                object.__setattr__(self, "decay_exponent", d)
        else:
            if self.grid_r is None or self.grid_a is None:
                raise KernelHypothesisError("tabulated kernel needs grid_r/grid_a")
            r = np.asarray(self.grid_r, dtype=float)
            a = np.asarray(self.grid_a, dtype=float)
            if r.ndim != 1 or r.shape != a.shape or r.size < 2:
                raise KernelHypothesisError("tabulated grids must be 1-d, same length")
            if np.any(r <= 0) or np.any(np.diff(r) <= 0):
                raise KernelHypothesisError("grid_r must be positive and increasing")
            if np.any(a <= 0):
                raise KernelHypothesisError("grid_a must be positive")
            object.__setattr__(self, "grid_r", tuple(float(v) for v in r))
            object.__setattr__(self, "grid_a", tuple(float(v) for v in a))
        if self.decay_exponent is not None and self.decay_exponent <= 0:
            raise KernelHypothesisError("decay_exponent must be positive")

    def describe(self) -> str:
        if self.family == "power":
            return f"power:{self.alpha:g}"
        if self.family == "power_log":
            return f"power_log:{self.alpha:g}:{self.beta:g}"
        return f"tabulated[{len(self.grid_r)}]"


def _tab_slopes(spec: KernelSpec):
    r = np.log(np.asarray(spec.grid_r))
    a = np.log(np.asarray(spec.grid_a))
    lo = (a[1] - a[0]) / (r[1] - r[0])
    hi = (a[-1] - a[-2]) / (r[-1] - r[-2])
    return lo, hi


def kernel_eval(spec: KernelSpec, r) -> np.ndarray | float:
    """a(r) for positive r (scalar or array)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("kernel argument must be positive")
    if spec.family == "power":
        out = arr**spec.alpha
    elif spec.family == "power_log":
        out = arr**spec.alpha * np.log(np.e + arr) ** spec.beta
    else:
        gr = np.asarray(spec.grid_r)
        ga = np.asarray(spec.grid_a)
        lo, hi = _tab_slopes(spec)
        lx = np.log(arr)
        inner = np.interp(lx, np.log(gr), np.log(ga))
        inner = np.where(
            arr < gr[0], np.log(ga[0]) + lo * (lx - np.log(gr[0])), inner
        )
        inner = np.where(
            arr > gr[-1], np.log(ga[-1]) + hi * (lx - np.log(gr[-1])), inner
        )
        out = np.exp(inner)
    return float(out) if np.isscalar(r) else out


def kernel_certificates(spec: KernelSpec, grid) -> tuple:
    """Measured almost-monotonicity constants on a grid.

    C_inc: smallest C with a(t1) <= C a(t2) whenever t1 <= t2 in the grid
    (running max over earlier points divided by the current value).
    C_dec: same for t -> a(t)/t^decay_exponent in the decreasing direction.
    """
    g = np.sort(np.asarray(grid, dtype=float))
    if g.size < 2 or g[0] <= 0:
        raise ValueError("grid must hold at least two positive points")
    a = kernel_eval(spec, g)
    c_inc = float(np.max(np.maximum.accumulate(a) / a))
    ratio = a / g**spec.decay_exponent
    c_dec = float(np.max(ratio / np.minimum.accumulate(ratio)))
    return max(1.0, c_inc), max(1.0, c_dec)


def _small_r_exponent(spec: KernelSpec) -> float:
    if spec.family in ("power", "power_log"):
        return spec.alpha  # log(e+r) -> 1 as r -> 0
    return _tab_slopes(spec)[0]


def _quad_a_over_t(spec: KernelSpec, lo: float, hi: float) -> float:
    """int_lo^hi a(t)/t dt with a substitution flattening the t=0 endpoint."""
    expo = _small_r_exponent(spec)
    k = max(1.0, math.ceil(1.0 / min(expo, 1.0))) if expo > 0 else 1.0
    # t = u^k: integrand k u^{k expo - 1} * (a(t) t^{-expo}) stays bounded
    val, _ = integrate.quad(
        lambda u: k * kernel_eval(spec, u**k) / u if u > 0 else 0.0,
        lo ** (1.0 / k),
        hi ** (1.0 / k),
        epsabs=1e-12,
        epsrel=1e-12,
        limit=200,
    )
    return val


def a_integral(spec: KernelSpec, r: float) -> float:
    """A(r) = int_0^r a(t)/t dt; raises when the integral diverges at 0."""
    if r <= 0:
        raise ValueError("need r > 0")
    if spec.family == "power":
        return r**spec.alpha / spec.alpha
    expo = _small_r_exponent(spec)
    if expo <= 0:
        # non-positive log-log slope at 0: probe before declaring divergence
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            probes = [
                _quad_a_over_t(spec, eps, min(r, 1.0)) for eps in (1e-4, 1e-8, 1e-12)
            ]
        d1, d2 = probes[1] - probes[0], probes[2] - probes[1]
        if d2 > 0.5 * d1 or not np.isfinite(probes[-1]):
            raise DivergentIntegralError(
                f"int_0 a(t)/t dt diverges (slope {expo:g} at 0)"
            )
        tail = probes[-1] + (d2 if d2 > 0 else 0.0)
        return tail + (_quad_a_over_t(spec, 1.0, r) if r > 1.0 else 0.0)
    return _quad_a_over_t(spec, 0.0, r)


def _b_tail(spec: KernelSpec, s: float, n_over_p: float) -> float:
    """B(s) = int_s^inf a(w) w^{-N/p-1} dw.

    Substituting w = s e^v gives s^{-N/p} int_0^inf a(s e^v) e^{-(N/p) v} dv;
    the slow power tail becomes exponential decay, which quad resolves (the
    raw infinite-interval form loses tail mass when s is large and N/p - d
    is small).
    """

    log_s = math.log(s)

    def integrand(v: float) -> float:
        log_w = log_s + v
        if log_w > 690.0:  # w would overflow; the e^{-(N/p)v} weight has won
            return 0.0
        return kernel_eval(spec, math.exp(log_w)) * math.exp(-n_over_p * v)

    val, _ = integrate.quad(
        integrand,
        0.0,
        np.inf,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=400,
    )
    return val * s ** (-n_over_p)


@dataclass(eq=False)
class NFunction:
    """Young function Phi with its inverse, sampled on matched grids.

    inv_grid rows are (r, Phi^{-1}(r)); fwd_grid rows are the same pairs
    swapped, so the round trip is exact at the nodes.  Off-grid evaluation
    interpolates monotonically in log-log coordinates and extrapolates by a
    power law fitted to the outer nodes.  ``exact`` marks a closed-form pure
    power law Phi(s) = (s/scale)^q, in which case evaluation bypasses the
    grids entirely.
    """

    p: float
    N: float
    inv_grid: np.ndarray
    fwd_grid: np.ndarray = None
    phi_density: np.ndarray = None
    exact_power: float | None = None  # q with Phi(s) = (s/exact_scale)^q
    exact_scale: float = 1.0
    _interp: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not 1.0 < self.p < np.inf:
            raise KernelHypothesisError(f"need 1 < p < inf, got {self.p}")
        grid = np.asarray(self.inv_grid, dtype=float)
        if grid.ndim != 2 or grid.shape[1] != 2 or grid.shape[0] < 8:
            raise KernelHypothesisError("inv_grid must be (n, 2) with n >= 8")
        if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
            raise KernelHypothesisError("inv_grid must be positive and finite")
        if np.any(np.diff(grid[:, 0]) <= 0) or np.any(np.diff(grid[:, 1]) <= 0):
            raise KernelHypothesisError("Phi inverse must be strictly increasing")
        self.inv_grid = grid
        if self.fwd_grid is None:
            self.fwd_grid = grid[:, ::-1].copy()
        # convexity of Phi == concavity of Phi^{-1}: chord slopes of the
        # inverse must not increase (checked in relative terms; absolute
        # second differences are meaningless across 16 decades of scale)
        dr = np.diff(grid[:, 0])
        ds = np.diff(grid[:, 1])
        slopes = ds / dr
        bad = slopes[1:] > slopes[:-1] * (1.0 + 1e-10)
        if np.any(bad):
            raise KernelHypothesisError("built Phi is not convex")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @classmethod
    def power(cls, q: float, scale: float = 1.0, n_nodes: int = 64) -> "NFunction":
        """Closed-form Phi(s) = (s/scale)^q."""
        if q <= 1.0:
            raise KernelHypothesisError("power N-function needs exponent > 1")
        r = np.geomspace(1e-8, 1e8, n_nodes)
        inv = scale * r ** (1.0 / q)
        return cls(
            p=q,
            N=1.0,
            inv_grid=np.column_stack([r, inv]),
            exact_power=q,
            exact_scale=scale,
        )

    def _loglog(self, key: str, xs: np.ndarray, ys: np.ndarray):
        hit = self._interp.get(key)
        if hit is None:
            lx, ly = np.log(xs), np.log(ys)
            pch = PchipInterpolator(lx, ly, extrapolate=False)
            k = min(16, len(lx))
            slope_lo = np.polyfit(lx[:k], ly[:k], 1)
            slope_hi = np.polyfit(lx[-k:], ly[-k:], 1)
            hit = (pch, lx[0], lx[-1], slope_lo, slope_hi)
            self._interp[key] = hit
        return hit

    def _eval_grid(self, key: str, xs, ys, x) -> np.ndarray | float:
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("evaluation points must be finite and >= 0")
        pch, lo, hi, fit_lo, fit_hi = self._loglog(key, xs, ys)
        with np.errstate(divide="ignore"):
            lx = np.log(arr)
        out = np.zeros_like(arr, dtype=float)
        inside = (lx >= lo) & (lx <= hi)
        below = (lx < lo) & (arr > 0.0)
        above = lx > hi
        out[inside] = np.exp(pch(lx[inside]))
        out[below] = np.exp(np.polyval(fit_lo, lx[below]))
        out[above] = np.exp(np.polyval(fit_hi, lx[above]))
        return float(out) if np.isscalar(x) else out

    def inv(self, r) -> np.ndarray | float:
        """Phi^{-1}(r)."""
        if self.exact_power is not None:
            arr = np.asarray(r, dtype=float)
            if np.any(arr < 0):
                raise ValueError("evaluation points must be >= 0")
            out = self.exact_scale * arr ** (1.0 / self.exact_power)
            return float(out) if np.isscalar(r) else out
        return self._eval_grid("inv", self.inv_grid[:, 0], self.inv_grid[:, 1], r)

    def val(self, s) -> np.ndarray | float:
        """Phi(s)."""
        if self.exact_power is not None:
            arr = np.asarray(s, dtype=float)
            if np.any(arr < 0):
                raise ValueError("evaluation points must be >= 0")
            out = (arr / self.exact_scale) ** self.exact_power
            return float(out) if np.isscalar(s) else out
        return self._eval_grid("fwd", self.fwd_grid[:, 0], self.fwd_grid[:, 1], s)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "phi_inverse", "s", "phi"])
            for (r, pinv), (s, phi) in zip(self.inv_grid, self.fwd_grid):
                w.writerow([repr(float(v)) for v in (r, pinv, s, phi)])


def build_nfunction(
    spec: KernelSpec,
    N: float,
    p: float,
    r_min: float = 1e-8,
    r_max: float = 1e8,
    n_nodes: int = 512,
) -> NFunction:
    """Construct Phi from its inverse integral for the given kernel profile.

    Requires 1 < p < inf, 0 < decay_exponent < N/p, and A finite at 0; the
    power family uses closed forms, everything else cumulative quadrature of
    the swapped-order representation.
    """
    if not 1.0 < p < np.inf:
        raise KernelHypothesisError(f"need 1 < p < inf, got {p}")
    if N <= 0:
        raise KernelHypothesisError("need N > 0")
    d = spec.decay_exponent
    if d is None:
        raise KernelHypothesisError("tabulated kernels need an explicit decay_exponent")
    if not 0.0 < d < N / p:
        raise KernelHypothesisError(
            f"decay exponent {d:g} outside (0, N/p) = (0, {N / p:g})"
        )
    if not 0 < r_min < r_max or n_nodes < 32:
        raise KernelHypothesisError("bad grid configuration")

    r = np.geomspace(r_min, r_max, n_nodes)
    if spec.family == "power":
        alpha = spec.alpha
        if alpha >= N / p:
            raise KernelHypothesisError(
                f"alpha {alpha:g} must be below N/p = {N / p:g}"
            )
        q = 1.0 / (1.0 / p - alpha / N)
        scale = N / (alpha * (N / p - alpha))
        inv = scale * r ** (1.0 / q)
        return NFunction(
            p=p,
            N=N,
            inv_grid=np.column_stack([r, inv]),
            exact_power=q,
            exact_scale=scale,
        )

    a_integral(spec, 1.0)  # raises if the defining integral diverges
    if spec.family == "tabulated" and _tab_slopes(spec)[1] >= N / p:
        raise DivergentIntegralError(
            "terminal kernel slope >= N/p, so the tail integral B diverges"
        )
    s = r ** (-1.0 / N)  # descending
    s_asc = s[::-1]
    # A on the ascending s grid: quadrature to the first node, then segments
    a_vals = np.empty(n_nodes)
    a_vals[0] = a_integral(spec, s_asc[0])
    for i in range(1, n_nodes):
        a_vals[i] = a_vals[i - 1] + _quad_a_over_t(spec, s_asc[i - 1], s_asc[i])
    # B from the far tail downward
    n_over_p = N / p
    b_vals = np.empty(n_nodes)
    b_vals[-1] = _b_tail(spec, s_asc[-1], n_over_p)
    for i in range(n_nodes - 2, -1, -1):
        seg, _ = integrate.quad(
            lambda w: kernel_eval(spec, w) * w ** (-n_over_p - 1.0),
            s_asc[i],
            s_asc[i + 1],
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )
        b_vals[i] = b_vals[i + 1] + seg
    A_of_s = a_vals[::-1]
    B_of_s = b_vals[::-1]
    inv = p * r ** (1.0 / p) * A_of_s + p * B_of_s
    nf = NFunction(p=p, N=N, inv_grid=np.column_stack([r, inv]))
    phi = nf.fwd_grid
    dens = np.gradient(phi[:, 1], phi[:, 0])
    nf.phi_density = np.column_stack([phi[:, 0], dens])
    return nf


def lp_norm(f: GridFunction, p: float) -> float:
    """Weighted L^p norm; p = inf gives the sup norm."""
    if p <= 0:
        raise ValueError("need p > 0")
    av = np.abs(f.values)
    if np.isinf(p):
        return float(av.max())
    return float((av**p @ f.space.haar) ** (1.0 / p))


def luxemburg_norm(f: GridFunction, phi: NFunction) -> float:
    """inf{eta > 0 : sum Phi(|f|/eta) haar <= 1}.

    The modular G(eta) is nonincreasing; the bracket expands geometrically
    from ||f||_inf until G crosses 1, then Brent's method pins the root.
    """
    av = np.abs(f.values)
    haar = f.space.haar
    top = float(av.max())
    if top == 0.0:
        return 0.0

    def modular(eta: float) -> float:
        with np.errstate(over="ignore"):
            vals = phi.val(av / eta)
        total = float(vals @ haar)
        return total if np.isfinite(total) else np.inf

    hi = top
    for _ in range(600):
        if modular(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise NormComputationError("modular never drops to 1 (overflow)")
    lo = hi
    for _ in range(600):
        if modular(lo) > 1.0:
            break
        lo *= 0.5
        if lo == 0.0:
            # G stays <= 1 down to underflow: norm is effectively 0
            return 0.0
    g_hi = modular(hi)
    if g_hi == 1.0:
        return hi
    root = brentq(
        lambda u: modular(math.exp(u)) - 1.0,
        math.log(lo),
        math.log(hi),
        xtol=1e-14,
        rtol=8.9e-16,
        maxiter=300,
    )
    return float(math.exp(root))
