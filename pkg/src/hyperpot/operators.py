"""Maximal operators, generalized potentials, and their near/far splitting.

All operators act on GridFunctions over a space carried by a convolution
table.  On truncated tables the trusted domain is ``table.window``: centers
x range over it, ball contents and integration in y are restricted to it,
and output values outside it are reported as 0 (not meaningful).  Input
functions should be supported inside the window for truncation-faithful
results.

Evaluation is vectorized over x with a fixed summation order, so repeated
runs are bitwise identical regardless of thread counts elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IncompleteTableError, InvalidRadiusError
from .hypergroup import (
    ConvolutionTable,
    GridFunction,
    _require_same_space,
    translation_tensor,
)
from .metric_space import DiscreteSpace
from .orlicz import KernelSpec, NFunction, kernel_eval

SINGULARITY_POLICIES = ("smoothed", "zero")


@dataclass(frozen=True)
class PotentialConfig:
    """Parameters of the potential I_a f(x) = sum_y T^x k(y) f(y~) haar(y).

    The kernel of the integral is k(y) = a(rho(e,y)) / rho(e,y)^N with a
    from ``kernel``; N must match the space's dim_exponent.  The point e
    has positive weight but rho(e,e) = 0, so k(e) needs a policy: smoothed
    substitutes the smallest positive distance h (a(h)/h^N, the refinement
    limit of a continuum cell), zero drops the term (a strict lower bound).
    """

    kernel: KernelSpec
    N: float
    singularity_policy: str = "smoothed"
    smoothing_scale: float | None = None

    def __post_init__(self) -> None:
        if not self.N > 0:
            raise ConfigError(f"need N > 0, got {self.N}")
        if self.singularity_policy not in SINGULARITY_POLICIES:
            raise ConfigError(
                f"singularity_policy must be one of {SINGULARITY_POLICIES}"
            )
        if self.smoothing_scale is not None and not self.smoothing_scale > 0:
            raise ConfigError("smoothing_scale must be positive")


def _domain(table: ConvolutionTable, points) -> np.ndarray:
    if points is None:
        return table.window
    return np.asarray(points, dtype=np.int64)


def _full_block(table: ConvolutionTable, rows, cols):
    C, P = translation_tensor(table, rows, cols)
    if not P.all():
        raise IncompleteTableError(
            "operator domain contains pairs missing from the table; "
            "restrict points to the safe window"
        )
    return C


def maximal_function(
    table: ConvolutionTable, f: GridFunction, points=None, radii=None
) -> GridFunction:
    """Mf(x) = sup_{r>0} (|f| * chi_{B(e,r)})(x) / lambda B(e,r).

    Ball contents are piecewise constant in r, so the sup is attained on
    the finite family of distinct balls around e; those are prefix sets of
    the domain ordered by distance from e.  ``radii`` restricts the sweep
    to the closed balls at the given radii; any grid containing every
    ball-change radius reproduces the unrestricted supremum exactly.
    """
    space = table.space
    _require_same_space(space, f.space)
    pts = _domain(table, points)
    C = _full_block(table, pts, pts)
    lam = space.haar[pts]
    w = (C @ np.abs(f.values)) * lam[None, :]
    d = space.rho[space.identity, pts]
    order = np.argsort(d, kind="stable")
    dsort = d[order]
    num = np.cumsum(w[:, order], axis=1)
    den = np.cumsum(lam[order])
    if radii is None:
        bounds = np.flatnonzero(np.r_[dsort[1:] > dsort[:-1], True])
    else:
        idx = np.searchsorted(dsort, np.asarray(radii, dtype=float), side="right") - 1
        bounds = np.unique(idx[idx >= 0])
    out = np.zeros(space.n_points)
    if bounds.size:
        out[pts] = (num[:, bounds] / den[bounds][None, :]).max(axis=1)
    return GridFunction(space, out)


def rho_maximal_function(
    space: DiscreteSpace, f: GridFunction, points=None
) -> GridFunction:
    """M_rho f(x) = sup_{r>0} (1/lambda B(x,r)) int_{B(x,r)} |f| d lambda.

    Purely metric-measure (no translation); balls are centered at x.  When
    ``points`` is given both the centers and the ball contents live in that
    subset.
    """
    _require_same_space(space, f.space)
    pts = (
        np.arange(space.n_points)
        if points is None
        else np.asarray(points, dtype=np.int64)
    )
    lam = space.haar[pts]
    av = np.abs(f.values)[pts] * lam
    D = space.rho[np.ix_(pts, pts)]
    order = np.argsort(D, axis=1, kind="stable")
    dsort = np.take_along_axis(D, order, axis=1)
    num = np.cumsum(av[order], axis=1)
    den = np.cumsum(lam[order], axis=1)
    # prefixes that cut a tie group are not balls: mask them out
    closed = np.c_[dsort[:, 1:] > dsort[:, :-1], np.ones((len(pts), 1), bool)]
    ratios = np.where(closed, num / den, -np.inf)
    out = np.zeros(space.n_points)
    out[pts] = ratios.max(axis=1)
    return GridFunction(space, out)


def kernel_profile(space: DiscreteSpace, config: PotentialConfig) -> np.ndarray:
    """k(z) = a(rho(e,z)) / rho(e,z)^N on every point, with the e-policy."""
    if not math.isclose(config.N, space.dim_exponent, rel_tol=1e-12):
        raise ConfigError(
            f"config N = {config.N:g} does not match the space's "
            f"dim_exponent = {space.dim_exponent:g}"
        )
    d = space.distances_from(space.identity)
    h = config.smoothing_scale
    if h is None:
        h = float(d[d > 0].min()) if (d > 0).any() else 1.0
    k = np.zeros_like(d)
    pos = d > 0
    with np.errstate(over="ignore", divide="ignore"):
        k[pos] = kernel_eval(config.kernel, d[pos]) / d[pos] ** config.N
        if config.singularity_policy == "smoothed":
            k[~pos] = np.float64(kernel_eval(config.kernel, h)) / np.float64(h) ** config.N
    if not np.all(np.isfinite(k)):
        raise ConfigError(
            f"kernel value overflows at the smallest distance "
            f"(smoothing scale {h:g}, N = {config.N:g})"
        )
    return k


def potential_integrand(
    table: ConvolutionTable,
    config: PotentialConfig,
    f: GridFunction,
    points=None,
    support=None,
):
    """Matrix M[i, j] = T^{x_i}k(y_j) f(y_j~) haar(y_j) and the y domain.

    Row sums give I_a f on ``points``; prefix sums over y sorted by
    rho(e, y) give the near/far split at every radius at once.
    """
    space = table.space
    _require_same_space(space, f.space)
    rows = _domain(table, points)
    cols = _domain(table, support)
    k = kernel_profile(space, config)
    C = _full_block(table, rows, cols)
    u = f.values[space.involution[cols]] * space.haar[cols]
    return (C @ k) * u[None, :], cols


def hedberg_integrand(
    table: ConvolutionTable,
    config: PotentialConfig,
    f: GridFunction,
    points=None,
    support=None,
):
    """Matrix S[i, j] = k(y_j) (T^{x_i}f)(y_j~) haar(y_j) and the y domain.

    The kernel stays in identity coordinates and the translate acts on f.
    This is the form whose ball/complement pieces the near/far estimates
    control: each shell of S is majorized through the maximal function,
    whereas summing the translated kernel lets a spike near e ride the
    kernel's own growth and breaks the near bound.  By the translation
    adjoint identity <T^x u, v> = <u, T^{x~} v> (and haar(y~) = haar(y)),
    row sums agree with those of ``potential_integrand`` whenever the table
    covers the whole space; on truncated tables the window sum of this form
    omits the mass T^x f pushes past the window, so far parts should be
    taken as differences from the potential's row sum (which is exact for
    window-supported f) rather than from this matrix's total.

    The y domain must be closed under the involution so T^x f(y~) stays on
    known columns.
    """
    space = table.space
    _require_same_space(space, f.space)
    rows = _domain(table, points)
    cols = _domain(table, support)
    loc = np.full(space.n_points, -1, dtype=np.int64)
    loc[cols] = np.arange(cols.size)
    ipos = loc[space.involution[cols]]
    if (ipos < 0).any():
        raise ConfigError(
            "the y domain of the split form must be closed under the involution"
        )
    k = kernel_profile(space, config)
    C = _full_block(table, rows, cols)
    tf = C @ f.values
    return tf[:, ipos] * (k[cols] * space.haar[cols])[None, :], cols


def potential(
    table: ConvolutionTable,
    config: PotentialConfig,
    f: GridFunction,
    points=None,
) -> GridFunction:
    """I_a f(x) = sum_y T^x k(y) f(y~) haar(y) over the trusted domain."""
    M, _ = potential_integrand(table, config, f, points)
    out = np.zeros(table.space.n_points)
    out[_domain(table, points)] = M.sum(axis=1)
    return GridFunction(table.space, out)


def riesz_potential(
    table: ConvolutionTable, alpha: float, f: GridFunction, points=None
) -> GridFunction:
    """Potential with the pure power kernel a(r) = r^alpha, 0 < alpha < N."""
    N = table.space.dim_exponent
    if not 0.0 < alpha < N:
        raise ConfigError(f"need 0 < alpha < N = {N:g}, got {alpha}")
    config = PotentialConfig(kernel=KernelSpec(family="power", alpha=float(alpha)), N=N)
    return potential(table, config, f, points)


def hedberg_split(
    table: ConvolutionTable,
    config: PotentialConfig,
    f: GridFunction,
    x: int,
    r: float,
):
    """(A_r, B_r): the split-form integrand summed over B(e, r) and the rest.

    A_r sums k(y) T^x f(y~) haar(y) over the open ball rho(e, y) < r (see
    ``hedberg_integrand`` for why the translate must sit on f here).  The
    index sets partition the domain, so A_r + B_r = I_a f(x) in exact
    arithmetic; B_r is taken as the difference from the potential's own row
    sum with its last ulp steered so the identity also holds bitwise.  The
    difference form matters on truncated tables: the potential's row sum is
    exact for window-supported f, so B_r keeps the far mass T^x f pushes
    past the window, which a window sum of the split form would drop.  Once
    the ball saturates the window the whole row counts as near (the far
    tail is no longer resolvable) and the pair is (I_a f(x), 0) exactly.
    """
    if not r > 0:
        raise InvalidRadiusError(f"need r > 0, got {r}")
    M, cols = potential_integrand(table, config, f, points=[int(x)])
    total = float(M.sum(axis=1)[0])
    near = table.space.rho[table.space.identity, cols] < r
    if near.all():
        return total, 0.0
    S, _ = hedberg_integrand(table, config, f, points=[int(x)])
    a_r = float(S[0, near].sum())
    return _steer_partition(a_r, total - a_r, total)


def _steer_partition(a: float, b: float, total: float):
    """Nudge (a, b) by ulps until a + b == total in floats.

    b moves by the remaining gap; when its step size straddles the target
    (round-to-even can skip an odd-mantissa total), a moves one of its own
    finer ulps to break the tie.  Gives up only for cancellation-dominated
    signed rows where no representable pair can hit the total.
    """
    for _ in range(4):
        prev = None
        for _ in range(50):
            gap = (a + b) - total
            if gap == 0.0:
                return a, b
            nb = b - gap
            if nb == b or nb == prev:  # stalled or flip-flopping
                break
            prev, b = b, nb
        gap = (a + b) - total
        if gap == 0.0:
            return a, b
        a = math.nextafter(a, -math.inf if gap > 0 else math.inf)
    return a, b


def hedberg_pointwise_ratio(
    table: ConvolutionTable,
    config: PotentialConfig,
    phi: NFunction,
    p: float,
    f: GridFunction,
    x: int,
) -> float:
    """I_a f(x) / Phi^{-1}(Mf(x)^p), the local constant of the pointwise
    potential bound (meaningful when ||f||_p <= 1).

    Mf(x) = 0 forces I_a f(x) = 0 for honest inputs; a nonzero potential
    there reports an infinite ratio rather than raising.
    """
    x = int(x)
    mf = float(maximal_function(table, f).values[x])
    ia = float(potential(table, config, f).values[x])
    if mf <= 0.0:
        return 0.0 if ia == 0.0 else math.inf
    return ia / float(phi.inv(mf**p))
