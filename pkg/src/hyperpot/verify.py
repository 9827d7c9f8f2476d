"""Empirical certificates for the maximal and potential operator bounds.

Two report types drive everything: a ConditionCertificate holding the measured
structure constants (ball-translate support constant c1, translate-volume
constant c2, volume-growth constant c3, doubling constant D, and the dyadic
exponent m), and a BoundednessReport holding per-function norm ratios for one
operator inequality.  "Bounded" at desk scale means the measured sup-ratio is
finite and moves by at most ``DRIFT_THRESHOLD`` percent when the instance
resolution doubles.

Radius semantics: constants that divide by a continuous radius are suprema
attained as r decreases to a distance value, so they are evaluated at edge
radii paired with closed-ball contents; quantities that are piecewise constant
in r are enumerated once per distinct ball.  Radii below the smallest positive
distance are excluded: there the discrete ball is the single atom at the
identity, whose continuum analogue has vanishing measure, and ratios against
r^N or A(r) diverge as pure discretization artifacts.  Radii beyond the
largest tested edge see only truncation saturation and are likewise excluded
from the c2 sweep.

All sweeps run over the table's safe window: centers, ball contents, and
integration variables alike.  The window must be closed under the involution.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, KernelHypothesisError
from .hypergroup import (
    ConvolutionTable,
    GridFunction,
    builtin_group_table,
    check_axioms,
    make_bessel,
    make_chebyshev,
    make_conjugacy,
    make_cyclic,
    translation_tensor,
)
from .metric_space import DiscreteSpace, canonical_radii
from .operators import (
    PotentialConfig,
    hedberg_integrand,
    maximal_function,
    potential,
    potential_integrand,
    rho_maximal_function,
    riesz_potential,
)
from .orlicz import (
    KernelSpec,
    NFunction,
    a_integral,
    build_nfunction,
    kernel_eval,
    lp_norm,
    luxemburg_norm,
)

DRIFT_THRESHOLD = 20.0  # percent, the desk-scale meaning of "uniform in C"
SUITE_NAMES = (
    "axioms",
    "conditions",
    "weak11",
    "strongpp",
    "domination",
    "hedberg",
    "theorem",
    "corollary",
)
REPORT_SCHEMA = 1


# -- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class ConditionCertificate:
    """Measured structure constants of a windowed instance.

    c1: smallest constant with supp Lambda_x inside the ball of radius c1*r
        around x, where Lambda_x is the generalized translate of a ball
        indicator composed with the involution.  Evaluated both directly and
        through the duality kernel sum_y c(x,y,z) lambda(y), whose support is
        the same set in exact arithmetic; the max of the two routes makes the
        pointwise domination chain hold in floats.
    c2: smallest constant with lambda B(x,r) * Lambda_x(y) <= c2 lambda B(e,r)
        over the tested radius range.
    c3: smallest constant with c2 * lambda B(e,r) <= c3 * r^N.
    D:  doubling constant of closed window balls, measured on the tested
        radii and their dyadic multiples up to 2^(m-1).
    m:  smallest nonnegative integer with c1 <= 2^m.
    """

    c1: float
    c2: float
    c3: float
    D: float
    m: int
    radii_tested: tuple
    failure: str | None = None

    @property
    def passed(self) -> bool:
        finite = all(math.isfinite(v) for v in (self.c1, self.c2, self.c3, self.D))
        return self.failure is None and finite and self.m >= 0

    def as_dict(self) -> dict:
        return {
            "c1": float(self.c1),
            "c2": float(self.c2),
            "c3": float(self.c3),
            "D": float(self.D),
            "m": int(self.m),
            "radii_tested": [float(r) for r in self.radii_tested],
            "failure": self.failure,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class BoundednessReport:
    """Per-function norm ratios for one operator inequality.

    ``records`` rows are dicts with label, norm_in, norm_out, ratio;
    ``sup_ratio`` is the max ratio; ``constants`` carries named auxiliary
    suprema (for example the three Hedberg constants).  ``refinement_drift``
    is filled by comparing runs at consecutive resolutions and stays None for
    a single-resolution run, in which case only finiteness is judged.
    ``sup_cap`` marks suites whose ratio has an a-priori ceiling (the
    pointwise domination chain must stay at or below 1); when set, passing
    also requires sup_ratio <= sup_cap.
    """

    suite: str
    records: tuple
    sup_ratio: float
    constants: dict = field(default_factory=dict)
    refinement_drift: float | None = None
    threshold: float = DRIFT_THRESHOLD
    sup_cap: float | None = None

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.sup_ratio):
            return False
        if self.sup_cap is not None and self.sup_ratio > self.sup_cap:
            return False
        if self.refinement_drift is None:
            return True
        return self.refinement_drift <= self.threshold

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "records": [dict(r) for r in self.records],
            "sup_ratio": float(self.sup_ratio),
            "constants": {k: float(v) for k, v in self.constants.items()},
            "refinement_drift": self.refinement_drift,
            "threshold": self.threshold,
            "sup_cap": self.sup_cap,
            "passed": self.passed,
        }


def _report(suite: str, records: list, constants: dict | None = None) -> BoundednessReport:
    ratios = [r["ratio"] for r in records]
    sup = max(ratios) if ratios else 0.0
    return BoundednessReport(
        suite=suite,
        records=tuple(records),
        sup_ratio=float(sup),
        constants=constants or {},
    )


def drift_percent(base: float, refined: float) -> float:
    """Relative sup-ratio movement across a resolution doubling, in percent."""
    if not (math.isfinite(base) and math.isfinite(refined)):
        return math.inf
    if base == 0.0:
        return 0.0 if refined == 0.0 else math.inf
    return abs(refined - base) / abs(base) * 100.0


def with_drift(base: BoundednessReport, refined: BoundednessReport) -> BoundednessReport:
    return replace(refined, refinement_drift=drift_percent(base.sup_ratio, refined.sup_ratio))


# -- condition constants ----------------------------------------------------


def _window_points(table: ConvolutionTable, points) -> np.ndarray:
    if points is None:
        return table.window
    return np.asarray(points, dtype=np.int64)


def _closed_mass(row_sorted: np.ndarray, cmass: np.ndarray, t: np.ndarray) -> np.ndarray:
    """lambda{rho(x, .) <= t} from one presorted window row."""
    idx = np.searchsorted(row_sorted, t, side="right") - 1
    return np.where(idx >= 0, cmass[np.maximum(idx, 0)], 0.0)


def _open_mass(row_sorted: np.ndarray, cmass: np.ndarray, t: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(row_sorted, t, side="left") - 1
    return np.where(idx >= 0, cmass[np.maximum(idx, 0)], 0.0)


def _failed_certificate(reason: str, radii) -> ConditionCertificate:
    return ConditionCertificate(
        c1=math.inf,
        c2=math.inf,
        c3=math.inf,
        D=math.inf,
        m=0,
        radii_tested=tuple(float(r) for r in radii),
        failure=reason,
    )


def check_conditions(table: ConvolutionTable, points=None) -> ConditionCertificate:
    """Measure the minimal structure constants over the canonical edge radii.

    A window pair without stored translation data means the support of the
    ball translate cannot be certified against any tested multiple; that case
    returns a failure certificate rather than raising.  A one-point window
    has no positive radii and passes trivially.
    """
    space = table.space
    pts = _window_points(table, points)
    e = space.identity
    inv = space.involution
    if not np.array_equal(np.sort(inv[pts]), np.sort(pts)):
        raise ConfigError("window must be closed under the involution")

    edges = canonical_radii(space, center=e, mode="edge", points=pts)
    if edges.size == 0:
        return ConditionCertificate(
            c1=0.0, c2=0.0, c3=0.0, D=1.0, m=0, radii_tested=()
        )

    C, P = translation_tensor(table, rows=tuple(pts), cols=tuple(pts))
    if not P.all():
        return _failed_certificate(
            "translation data missing on the window; ball-translate support "
            "escapes every tested multiple",
            edges,
        )

    n = space.n_points
    w = pts.size
    k = edges.size
    lam = space.haar[pts]
    d_e = space.rho[e][pts]

    # ball indicators over the window, one column per closed edge ball
    chi = (d_e[:, None] <= edges[None, :]).astype(float)  # (w, k)
    lam_be = chi.T @ lam  # (k,)

    # direct route: translate values T^x chi(y'), y' over window columns
    cw = C[:, :, pts]  # structure constants with atoms restricted to the window
    trans = np.tensordot(cw, chi, axes=([2], [0]))  # (w, w, k)
    # duality route: K(x, z) = sum_{y in ball} c(x, y, z) lambda(y)
    dual = np.tensordot(cw.transpose(0, 2, 1), chi * lam[:, None], axes=([2], [0]))

    # c1: farthest support point against the ball radius, both routes
    d_x_invy = space.rho[np.ix_(pts, inv[pts])]
    d_x_z = space.rho[np.ix_(pts, pts)]
    far_direct = np.max(
        np.where(trans > 0.0, d_x_invy[:, :, None], -np.inf), axis=1
    )
    far_dual = np.max(np.where(dual > 0.0, d_x_z[:, :, None], -np.inf), axis=1)
    far = np.maximum(far_direct, far_dual)  # (w, k)
    c1 = max(0.0, float(np.max(far / edges[None, :])))
    if not math.isfinite(c1):
        return _failed_certificate("non-finite support radius ratio", edges)
    m = 0 if c1 <= 1.0 else int(math.ceil(math.log2(c1)))

    # presorted window rows for ball masses from arbitrary centers
    order = np.argsort(d_x_z, axis=1, kind="stable")
    rows_sorted = np.take_along_axis(d_x_z, order, axis=1)
    cmass = np.cumsum(lam[order], axis=1)

    # D over the tested radii and the dyadic multiples the domination chain uses
    radii_d = np.unique(edges[None, :] * 2.0 ** np.arange(max(m, 1))[:, None])
    worst = 1.0
    for i in range(w):
        small = _closed_mass(rows_sorted[i], cmass[i], radii_d)
        large = _closed_mass(rows_sorted[i], cmass[i], 2.0 * radii_d)
        worst = max(worst, float(np.max(large / small)))
    d_const = worst

    # c2 numerator: the largest ball mass over the radius interval ending at
    # the next edge (open ball there); the last interval uses its left limit
    num = np.empty((w, k))
    for i in range(w):
        if k > 1:
            num[i, : k - 1] = _open_mass(rows_sorted[i], cmass[i], edges[1:])
        num[i, k - 1] = _closed_mass(rows_sorted[i], cmass[i], edges[-1:])[0]
    peak_direct = trans.max(axis=1)  # (w, k)
    peak_dual = (dual / lam[None, :, None]).max(axis=1)
    peak = np.maximum(peak_direct, peak_dual)
    c2 = float(np.max(num * peak / lam_be[None, :]))

    n_exp = space.dim_exponent
    c3 = c2 * float(np.max(lam_be / edges**n_exp))

    if not all(math.isfinite(v) for v in (c2, c3, d_const)):
        return _failed_certificate("non-finite condition constant", edges)
    return ConditionCertificate(
        c1=c1,
        c2=c2,
        c3=c3,
        D=d_const,
        m=m,
        radii_tested=tuple(float(r) for r in edges),
    )


# -- test-function suites ---------------------------------------------------


def default_suite(
    table: ConvolutionTable,
    seed: int = 0,
    include_dilations: bool | None = None,
    max_spikes: int = 32,
    n_random: int = 16,
) -> list:
    """Labelled nonnegative test functions on the window.

    Ball indicators at every canonical radius, unit-mass spikes at every
    window point (or ``max_spikes`` seeded ones past 64 points), seeded
    uniform random fields, and a four-scale dilated indicator family on
    truncated (grid-like) instances.
    """
    space = table.space
    pts = table.window
    e = space.identity
    rng = np.random.default_rng(seed)
    d_e = space.rho[e][pts]
    suite: list = []

    for i, r in enumerate(canonical_radii(space, center=e, mode="midpoint", points=pts)):
        suite.append(
            (f"ball:{i}", GridFunction.indicator(space, pts[d_e < r]))
        )
    if pts.size <= 64:
        spike_at = pts
    else:
        spike_at = np.sort(rng.choice(pts, size=max_spikes, replace=False))
    for x in spike_at.tolist():
        suite.append((f"spike:{x}", GridFunction.point_mass(space, x)))
    for i in range(n_random):
        v = np.zeros(space.n_points)
        v[pts] = rng.random(pts.size)
        suite.append((f"random:{i}", GridFunction(space, v)))

    if include_dilations is None:
        include_dilations = table.safe_window is not None
    if include_dilations:
        r_max = float(d_e.max())
        for j in range(4):
            r = r_max * 2.0 ** (j - 3)
            suite.append(
                (f"dilate:{j}", GridFunction.indicator(space, pts[d_e <= r]))
            )
    return suite


def normalized_suite(suite: list, p: float) -> list:
    """Copies scaled to unit L^p norm; zero functions are dropped."""
    out = []
    for label, f in suite:
        nrm = lp_norm(f, p)
        if nrm > 0.0:
            out.append((label, GridFunction(f.space, f.values / nrm)))
    return out


# -- operator inequality suites ---------------------------------------------


def verify_weak_1_1(
    table: ConvolutionTable, suite: list | None = None, t_grid=None, seed: int = 0
) -> BoundednessReport:
    """sup over f and t > 0 of t * lambda{Mf > t} / ||f||_1.

    Without a t grid the supremum is exact: on a finite window it equals
    max over the distinct values v of Mf of v * lambda{Mf >= v}.
    """
    if suite is None:
        suite = default_suite(table, seed=seed)
    pts = table.window
    lam = table.space.haar[pts]
    records = []
    for label, f in suite:
        l1 = lp_norm(f, 1.0)
        if l1 == 0.0:
            continue
        mf = maximal_function(table, f).values[pts]
        if t_grid is None:
            order = np.argsort(-mf, kind="stable")
            msort = mf[order]
            tail = np.cumsum(lam[order])
            ends = np.flatnonzero(np.r_[msort[:-1] > msort[1:], True])
            vals = msort[ends]
            cand = vals[vals > 0.0] * tail[ends][vals > 0.0]
            out = float(cand.max()) if cand.size else 0.0
        else:
            out = max(
                (float(t) * float(lam[mf > t].sum()) for t in np.asarray(t_grid)),
                default=0.0,
            )
        records.append(
            {"label": label, "norm_in": l1, "norm_out": out, "ratio": out / l1}
        )
    return _report("weak11", records)


def verify_strong_pp(
    table: ConvolutionTable, suite: list | None = None, p: float = 2.0, seed: int = 0
) -> BoundednessReport:
    """sup of ||Mf||_p / ||f||_p for 1 < p <= inf."""
    if not 1.0 < p:
        raise ConfigError(f"need 1 < p <= inf, got {p}")
    if suite is None:
        suite = default_suite(table, seed=seed)
    records = []
    for label, f in suite:
        nrm = lp_norm(f, p)
        if nrm == 0.0:
            continue
        out = lp_norm(maximal_function(table, f), p)
        records.append(
            {"label": label, "norm_in": nrm, "norm_out": out, "ratio": out / nrm}
        )
    return _report("strongpp", records, constants={"p": p})


def check_domination(
    table: ConvolutionTable,
    certificate: ConditionCertificate | None = None,
    suite: list | None = None,
    seed: int = 0,
) -> BoundednessReport:
    """Pointwise chain Mf(x) <= c2 * D^m * M_rho f(x) over the window.

    The translate of a ball indicator is supported in the c1-fold metric
    ball around x and its height against the ball volume is bounded by c2;
    m dyadic doublings shrink the c1-fold ball back to the metric ball,
    each paying one factor of D.  The reported ratio is
    Mf / (c2 D^m M_rho f); the suite passes only if the sup stays below 1
    up to a float whisker (``sup_cap``), at every window point of every
    suite function.
    """
    if certificate is None:
        certificate = check_conditions(table)
    if not certificate.passed:
        return BoundednessReport(
            suite="domination",
            records=(),
            sup_ratio=math.inf,
            constants={"bound": math.inf},
            sup_cap=1.0 + 1e-9,
        )
    bound = certificate.c2 * certificate.D**certificate.m
    if suite is None:
        suite = default_suite(table, seed=seed)
    pts = table.window
    records = []
    for label, f in suite:
        mf = maximal_function(table, f).values[pts]
        mrho = rho_maximal_function(table.space, f, points=pts).values[pts]
        denom = bound * mrho
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                denom > 0.0, mf / denom, np.where(mf > 0.0, np.inf, 0.0)
            )
        records.append(
            {
                "label": label,
                "norm_in": float(mf.max()) if mf.size else 0.0,
                "norm_out": float(mrho.max()) if mrho.size else 0.0,
                "ratio": float(ratio.max()) if ratio.size else 0.0,
            }
        )
    constants = {
        "c2": certificate.c2,
        "D": certificate.D,
        "m": float(certificate.m),
        "bound": bound,
    }
    rep = _report("domination", records, constants=constants)
    return replace(rep, sup_cap=1.0 + 1e-9)


def _edge_prefix_layout(space: DiscreteSpace, cols: np.ndarray):
    """Column order and closed-prefix boundaries by distance from e."""
    d = space.rho[space.identity][cols]
    order = np.argsort(d, kind="stable")
    dsort = d[order]
    ends = np.flatnonzero(np.r_[dsort[:-1] < dsort[1:], True])
    return order, dsort[ends], ends


def verify_hedberg_estimates(
    table: ConvolutionTable,
    config: PotentialConfig,
    phi: NFunction,
    p: float,
    suite: list | None = None,
    seed: int = 0,
) -> BoundednessReport:
    """Measured constants of the three-step potential bound.

    C_ar bounds the near part of the split potential by A(r) * Mf(x); C_br
    bounds the far part by A(r) * r^(-N/p) for unit-norm f; C_hedberg is the
    supremum of the pointwise ratio I_a f / Phi^{-1}(Mf^p).  C_step is the
    almost-monotonicity constant with a(r) <= C_step * A(r) on the tested
    radii.  The suite must arrive normalized to ||f||_p <= 1.

    Near/far pieces are prefix sums of the split-form integrand
    k(y) T^x f(y~) haar(y) (the form the shell estimates control, see
    ``hedberg_integrand``); the pointwise ratio keeps the potential's own
    values.  Radii below the first positive distance are excluded: there
    the discrete ball is the single identity atom whose continuum analogue
    carries vanishing mass, so the ratio diverges by pure discreteness.
    """
    if not 1.0 < p < math.inf:
        raise ConfigError(f"need 1 < p < inf, got {p}")
    if suite is None:
        suite = normalized_suite(default_suite(table, seed=seed), p)
    space = table.space
    pts = table.window
    n_over_p = config.N / p

    order, dvals, ends = _edge_prefix_layout(space, pts)
    # dvals[0] is the identity group; positive edges start at index 1
    if dvals[0] != 0.0 or dvals.size < 2:
        raise ConfigError("window must contain the identity and a second ball")
    edges = dvals[1:]
    a_at = np.array([a_integral(config.kernel, float(r)) for r in edges])
    c_step = float(np.max(kernel_eval(config.kernel, edges) / a_at))

    c_ar = 0.0
    c_br = 0.0
    c_h = 0.0
    records = []
    for label, f in suite:
        nrm = lp_norm(f, p)
        if nrm > 1.0 + 1e-12:
            raise ConfigError(f"suite function {label!r} has ||f||_p = {nrm} > 1")
        mx, cols = potential_integrand(table, config, f)
        ia = mx.sum(axis=1)
        sx, _ = hedberg_integrand(table, config, f)
        prefix = np.cumsum(sx[:, order], axis=1)[:, ends]  # closed balls
        mf = maximal_function(table, f).values[pts]

        near = prefix[:, 1:]  # closed ball at each positive edge
        with np.errstate(divide="ignore", invalid="ignore"):
            ar = np.where(mf[:, None] > 0.0, near / (a_at[None, :] * mf[:, None]), 0.0)
            ar = np.where((mf[:, None] == 0.0) & (near > 0.0), np.inf, ar)
        # far part as the difference from the potential's exact row sum: on
        # truncated tables this keeps the mass T^x f pushes past the window,
        # which the split-form window sum cannot see
        far = np.maximum(ia[:, None] - prefix[:, :-1], 0.0)  # open-ball complement
        br = far * edges[None, :] ** n_over_p / a_at[None, :]
        pos = mf > 0.0
        ratio = np.zeros_like(ia)
        ratio[pos] = ia[pos] / phi.inv(mf[pos] ** p)
        ratio[~pos & (ia > 0.0)] = np.inf

        f_ar = float(ar.max()) if ar.size else 0.0
        f_br = float(br.max()) if br.size else 0.0
        f_h = float(ratio.max()) if ratio.size else 0.0
        c_ar = max(c_ar, f_ar)
        c_br = max(c_br, f_br)
        c_h = max(c_h, f_h)
        records.append(
            {
                "label": label,
                "norm_in": nrm,
                "norm_out": float(ia.max()) if ia.size else 0.0,
                "ratio": f_h,
            }
        )
    constants = {"C_ar": c_ar, "C_br": c_br, "C_hedberg": c_h, "C_step": c_step}
    return _report("hedberg", records, constants=constants)


def verify_theorem(
    table: ConvolutionTable,
    config: PotentialConfig,
    p: float,
    suite: list | None = None,
    seed: int = 0,
) -> BoundednessReport:
    """sup of the Luxemburg norm of I_a f over unit-L^p-norm suite functions.

    The gauge Phi is built from the kernel profile; any violated hypothesis
    (exponent range, divergent defining integral, non-convexity) surfaces as
    the rejection raised by the builder, naming the failed hypothesis.
    """
    phi = build_nfunction(config.kernel, N=config.N, p=p)
    if suite is None:
        suite = normalized_suite(default_suite(table, seed=seed), p)
    records = []
    for label, f in suite:
        out = luxemburg_norm(potential(table, config, f), phi)
        nrm = lp_norm(f, p)
        records.append(
            {"label": label, "norm_in": nrm, "norm_out": out, "ratio": out / nrm}
        )
    constants = {"N": config.N, "p": p, "decay_exponent": config.kernel.decay_exponent}
    return _report("theorem", records, constants=constants)


def verify_corollary(
    table: ConvolutionTable,
    alpha: float,
    p: float,
    suite: list | None = None,
    seed: int = 0,
) -> BoundednessReport:
    """sup of ||I_alpha f||_q / ||f||_p with 1/p - 1/q = alpha/N.

    The suite includes the dilated indicator family on truncated instances;
    the spread of their ratios is reported as ``dilation_spread``.
    """
    n_exp = table.space.dim_exponent
    if not 0.0 < alpha < n_exp:
        raise ConfigError(f"need 0 < alpha < N = {n_exp:g}, got {alpha}")
    if not 1.0 < p < n_exp / alpha:
        raise ConfigError(f"need 1 < p < N/alpha = {n_exp / alpha:g}, got {p}")
    q = 1.0 / (1.0 / p - alpha / n_exp)
    if suite is None:
        suite = normalized_suite(default_suite(table, seed=seed), p)
    records = []
    for label, f in suite:
        u = riesz_potential(table, alpha, f)
        nrm = lp_norm(f, p)
        out = lp_norm(u, q)
        records.append(
            {"label": label, "norm_in": nrm, "norm_out": out, "ratio": out / nrm}
        )
    constants = {"q": q}
    dil = [r["ratio"] for r in records if r["label"].startswith("dilate:")]
    if len(dil) >= 2 and min(dil) > 0.0:
        constants["dilation_spread"] = max(dil) / min(dil)
    return _report("corollary", records, constants=constants)


# -- experiment runner -------------------------------------------------------


DEFAULT_CONFIG = {
    "instance": {"kind": "cyclic", "n": 64},
    "kernel": {"family": "power", "alpha": 0.25},
    "p": 2.0,
    "suites": list(SUITE_NAMES),
    "resolutions": [],
    "seed": 0,
}


def kernel_from_dict(data: dict) -> KernelSpec:
    known = {"family", "alpha", "beta", "decay_exponent", "grid_r", "grid_a"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown kernel fields {sorted(extra)}")
    if "family" not in data:
        raise ConfigError("kernel needs a 'family'")
    kw = {k: v for k, v in data.items() if k != "family"}
    if "grid_r" in kw:
        kw["grid_r"] = tuple(kw["grid_r"])
    if "grid_a" in kw:
        kw["grid_a"] = tuple(kw["grid_a"])
    return KernelSpec(data["family"], **kw)


def build_instance(spec: dict, resolution: int | None = None):
    """(space, table) from an instance description, optionally re-resolved.

    ``cyclic`` and ``chebyshev`` take the resolution as their size parameter;
    ``bessel`` keeps the physical domain fixed, so doubling the grid halves
    the step.  ``conjugacy`` and file-backed instances have no resolution.
    """
    kind = spec.get("kind")
    if kind == "cyclic":
        return make_cyclic(int(resolution or spec.get("n", 64)))
    if kind == "chebyshev":
        return make_chebyshev(int(resolution or spec.get("M", 64)))
    if kind == "bessel":
        base = int(spec.get("grid_size", 128))
        size = int(resolution or base)
        step = float(spec.get("step", 1.0 / 16.0)) * base / size
        return make_bessel(float(spec.get("alpha", 0.5)), size, step)
    if kind == "conjugacy":
        return make_conjugacy(builtin_group_table(spec.get("group", "s3")))
    if kind == "files":
        space_path = Path(spec["space"])
        table_path = Path(spec["table"])
        for path in (space_path, table_path):
            if not path.exists():
                raise ConfigError(f"missing instance file: {path}")
        space = DiscreteSpace.load(space_path)
        return space, ConvolutionTable.load(table_path, space)
    raise ConfigError(f"unknown instance kind {kind!r}")


def _merged_config(config: dict) -> dict:
    unknown = set(config) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    merged = {**DEFAULT_CONFIG, **config}
    bad = [s for s in merged["suites"] if s not in SUITE_NAMES]
    if bad:
        raise ConfigError(f"unknown suites {bad}; valid: {list(SUITE_NAMES)}")
    if not isinstance(merged["instance"], dict):
        raise ConfigError("instance must be an object")
    return merged


def _suite_once(
    name: str,
    table: ConvolutionTable,
    kernel: KernelSpec,
    p: float,
    seed: int,
) -> dict:
    if name == "axioms":
        return check_axioms(table).as_dict()
    if name == "conditions":
        return check_conditions(table).as_dict()
    if name == "weak11":
        return verify_weak_1_1(table, seed=seed).as_dict()
    if name == "strongpp":
        return verify_strong_pp(table, p=p, seed=seed).as_dict()
    if name == "domination":
        return check_domination(table, seed=seed).as_dict()
    n_exp = table.space.dim_exponent
    config = PotentialConfig(kernel=kernel, N=n_exp)
    if name == "hedberg":
        phi = build_nfunction(kernel, N=n_exp, p=p)
        return verify_hedberg_estimates(table, config, phi, p, seed=seed).as_dict()
    if name == "theorem":
        return verify_theorem(table, config, p, seed=seed).as_dict()
    if name == "corollary":
        if kernel.family != "power":
            raise ConfigError("the corollary suite needs a power kernel")
        return verify_corollary(table, kernel.alpha, p, seed=seed).as_dict()
    raise ConfigError(f"unknown suite {name!r}")


def run_experiment(config, out_dir, max_workers: int | None = None) -> dict:
    """Run the configured suites, write report.json, CSV tables, and plots.

    ``config`` is a dict or a path to a JSON file.  Suites run as independent
    tasks over shared immutable instances; the report is assembled in config
    order regardless of completion order, so identical seeds give
    byte-identical report.json at any parallelism.
    """
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text(encoding="utf-8"))
    cfg = _merged_config(config)
    kernel = kernel_from_dict(cfg["kernel"])
    p = float(cfg["p"])
    seed = int(cfg["seed"])
    kind = cfg["instance"].get("kind")
    resolutions = [int(r) for r in cfg["resolutions"]]
    if not resolutions or kind in ("conjugacy", "files"):
        resolutions = [0]  # single pass at the instance's own size

    instances = [build_instance(cfg["instance"], r or None) for r in resolutions]
    tasks = [
        (name, i)
        for name in cfg["suites"]
        for i in range(len(instances))
    ]
    workers = max_workers or os.cpu_count() or 1

    results: dict = {}
    if tasks:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {
                pool.submit(
                    _suite_once, name, instances[i][1], kernel, p, seed
                ): (name, i)
                for name, i in tasks
            }
            for fut, key in futs.items():
                results[key] = fut.result()

    suites_out: dict = {}
    all_pass = True
    for name in cfg["suites"]:
        runs = [results[(name, i)] for i in range(len(instances))]
        entry: dict = {"resolutions": resolutions, "runs": runs}
        if name not in ("axioms", "conditions") and len(runs) > 1:
            drifts = [
                drift_percent(a["sup_ratio"], b["sup_ratio"])
                for a, b in zip(runs, runs[1:])
            ]
            entry["drift_percent"] = max(drifts)
            runs[-1]["refinement_drift"] = entry["drift_percent"]
            cap = runs[-1].get("sup_cap")
            runs[-1]["passed"] = bool(
                math.isfinite(runs[-1]["sup_ratio"])
                and (cap is None or runs[-1]["sup_ratio"] <= cap)
                and entry["drift_percent"] <= DRIFT_THRESHOLD
            )
        entry["passed"] = all(r["passed"] for r in runs)
        all_pass = all_pass and entry["passed"]
        suites_out[name] = entry

    report = {
        "schema": REPORT_SCHEMA,
        "config": cfg,
        "instances": [
            {
                "resolution": r,
                "n_points": int(sp.n_points),
                "window_size": int(tb.window.size),
            }
            for r, (sp, tb) in zip(resolutions, instances)
        ],
        "suites": suites_out,
        "passed": all_pass,
    }

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_csv_tables(out, cfg["suites"], resolutions, results)
    _write_plots(out, cfg, instances, kernel, p, suites_out)
    return report


def _write_csv_tables(out: Path, suites, resolutions, results) -> None:
    for name in suites:
        if name in ("axioms", "conditions"):
            continue
        with (out / f"suite_{name}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["resolution", "label", "norm_in", "norm_out", "ratio"])
            for i, res in enumerate(resolutions):
                for rec in results[(name, i)]["records"]:
                    w.writerow(
                        [
                            res,
                            rec["label"],
                            repr(float(rec["norm_in"])),
                            repr(float(rec["norm_out"])),
                            repr(float(rec["ratio"])),
                        ]
                    )


def _write_plots(out, cfg, instances, kernel, p, suites_out) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    matplotlib.rcParams["svg.hashsalt"] = "hyperpot"
    import matplotlib.pyplot as plt

    meta = {"Date": None}

    ratio_suites = [
        (name, entry)
        for name, entry in suites_out.items()
        if name not in ("axioms", "conditions")
    ]
    if ratio_suites:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, entry in ratio_suites:
            ax.plot(
                entry["resolutions"],
                [r["sup_ratio"] for r in entry["runs"]],
                marker="o",
                label=name,
            )
        ax.set_xlabel("resolution")
        ax.set_ylabel("sup ratio")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / "ratio_vs_resolution.svg", metadata=meta)
        plt.close(fig)

    space, table = instances[0]
    if any(n in suites_out for n in ("hedberg", "theorem")):
        try:
            phi = build_nfunction(kernel, N=space.dim_exponent, p=p)
        except (KernelHypothesisError, ConfigError):
            phi = None
        if phi is not None:
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.loglog(phi.inv_grid[:, 0], phi.inv_grid[:, 1])
            ax.set_xlabel("r")
            ax.set_ylabel("Phi inverse")
            fig.tight_layout()
            fig.savefig(out / "phi_inverse.svg", metadata=meta)
            plt.close(fig)

    pts = table.window
    label, f = default_suite(table, seed=int(cfg["seed"]))[0]
    mf = maximal_function(table, f).values[pts]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(pts, mf, label=f"M of {label}")
    try:
        config = PotentialConfig(kernel=kernel, N=space.dim_exponent)
        ax.plot(pts, potential(table, config, f).values[pts], label=f"I_a of {label}")
    except (ConfigError, KernelHypothesisError):
        pass
    ax.set_xlabel("point index")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "profiles.svg", metadata=meta)
    plt.close(fig)
