"""Finite quasi-metric measure spaces.

A :class:`DiscreteSpace` is the substrate every other module builds on: a
finite indexed point set carrying a quasi-metric ``rho``, strictly positive
weights ``haar`` (a weighted counting measure), a distinguished identity
point, an involution, and a dimension exponent used by kernel and condition
checks.  Balls are open, ``B(x, r) = {y : rho(x, y) < r}``, so their contents
change only at the distinct values of ``rho(x, .)``; every sup-over-radius
enumeration in the package works off the finite radius grids produced by
:func:`canonical_radii`.

All operations here are pure and the space is immutable after construction,
so concurrent reads are safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidRadiusError, InvariantViolationError

# Dense (n, n) distance storage; keeps ball queries trivial at desk scale.
MAX_DENSE_POINTS = 4096

_SYM_TOL = 1e-12


def _measured_quasi_const(rho: np.ndarray) -> float:
    """Exact max of rho(x,y) / (rho(x,z) + rho(z,y)) over all triples."""
    n = rho.shape[0]
    if n < 2:
        return 1.0
    worst = 0.0
    for i in range(n):
        denom = (rho[i][:, None] + rho).min(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0.0, rho[i] / denom, 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """Finite quasi-metric measure space.

    Attributes:
        rho: dense (n, n) distance matrix, zero exactly on the diagonal.
        haar: strictly positive weights, one per point.
        identity: index of the identity point e.
        involution: permutation array i -> i~ with i~~ = i; it must preserve
            both distance to e and the weights.
        dim_exponent: the exponent N in the volume bound lambda B(e,r) <= c r^N.
        quasi_const: constant c >= 1 in the relaxed triangle inequality.  When
            omitted it is measured exactly over all triples.
    """

    rho: np.ndarray
    haar: np.ndarray
    identity: int
    involution: np.ndarray
    dim_exponent: float
    quasi_const: float | None = None

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=float)
        haar = np.asarray(self.haar, dtype=float)
        involution = np.asarray(self.involution, dtype=np.int64)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "haar", haar)
        object.__setattr__(self, "involution", involution)

        n = rho.shape[0]
        if rho.ndim != 2 or rho.shape != (n, n):
            raise InvariantViolationError(f"rho must be square, got {rho.shape}")
        if n > MAX_DENSE_POINTS:
            raise InvariantViolationError(
                f"dense storage capped at {MAX_DENSE_POINTS} points, got {n}"
            )
        if haar.shape != (n,) or involution.shape != (n,):
            raise InvariantViolationError("haar/involution length must match rho")
        if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(haar)):
            raise InvariantViolationError("distances and weights must be finite")
        if np.any(np.diag(rho) != 0.0):
            raise InvariantViolationError("rho(i,i) must be zero")
        off = rho + np.eye(n)
        if np.any(off <= 0.0):
            raise InvariantViolationError("rho(i,j) must be positive for i != j")
        scale = max(1.0, float(rho.max()))
        if float(np.abs(rho - rho.T).max()) > _SYM_TOL * scale:
            raise InvariantViolationError("rho must be symmetric")
        if np.any(haar <= 0.0):
            raise InvariantViolationError("haar weights must be strictly positive")
        if not 0 <= self.identity < n:
            raise InvariantViolationError("identity index out of range")
        if sorted(involution.tolist()) != list(range(n)):
            raise InvariantViolationError("involution must be a permutation")
        if np.any(involution[involution] != np.arange(n)):
            raise InvariantViolationError("involution must be self-inverse")
        e = self.identity
        if float(np.abs(rho[e, involution] - rho[e]).max()) > _SYM_TOL * scale:
            raise InvariantViolationError("involution must preserve distance to e")
        if float(np.abs(haar[involution] - haar).max()) > _SYM_TOL * float(haar.max()):
            raise InvariantViolationError("involution must preserve haar weights")
        if self.dim_exponent <= 0:
            raise InvariantViolationError("dim_exponent must be positive")

        measured = _measured_quasi_const(rho)
        if self.quasi_const is None:
            object.__setattr__(self, "quasi_const", max(1.0, measured))
        elif self.quasi_const < measured - _SYM_TOL:
            raise InvariantViolationError(
                f"declared quasi_const {self.quasi_const} below measured {measured}"
            )

    @property
    def n_points(self) -> int:
        return self.rho.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.rho.max())

    def distances_from(self, center: int) -> np.ndarray:
        return self.rho[center]

    def total_mass(self, points: np.ndarray | None = None) -> float:
        if points is None:
            return float(self.haar.sum())
        return float(self.haar[np.asarray(points)].sum())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "rho": self.rho.ravel().tolist(),
            "haar": self.haar.tolist(),
            "identity": int(self.identity),
            "involution": self.involution.tolist(),
            "dim_exponent": float(self.dim_exponent),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteSpace":
        n = int(data["n_points"])
        rho = np.asarray(data["rho"], dtype=float).reshape(n, n)
        return cls(
            rho=rho,
            haar=np.asarray(data["haar"], dtype=float),
            identity=int(data["identity"]),
            involution=np.asarray(data["involution"], dtype=np.int64),
            dim_exponent=float(data["dim_exponent"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DiscreteSpace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def ball(space: DiscreteSpace, center: int, r: float) -> np.ndarray:
    """Indices of the open ball B(center, r); always contains the center."""
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    return np.nonzero(space.rho[center] < r)[0]


def ball_measure(space: DiscreteSpace, center: int, r: float) -> float:
    """Haar mass of the open ball B(center, r); strictly positive."""
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    return float(space.haar[space.rho[center] < r].sum())


def canonical_radii(
    space: DiscreteSpace,
    center: int | None = None,
    mode: str = "midpoint",
    points: np.ndarray | None = None,
) -> np.ndarray:
    """Finite radius grid that realizes every distinct ball.

    ``midpoint`` returns the midpoints between consecutive distinct distances
    plus one radius beyond the diameter: one representative per distinct ball
    content, correct for quantities that are piecewise constant in r.
    ``edge`` returns the distinct positive distances themselves; suprema of
    ratios with a continuous r in the denominator are attained as r decreases
    to a distance value, so those checks pair edge radii with closed-ball
    contents.

    A center restricts distances to one row; ``points`` restricts which rows
    and columns contribute.
    """
    if points is None:
        sub = space.rho if center is None else space.rho[center]
    else:
        idx = np.asarray(points)
        sub = space.rho[np.ix_(idx, idx)] if center is None else space.rho[center][idx]
    values = np.unique(sub)
    if mode == "edge":
        return values[values > 0.0]
    if mode != "midpoint":
        raise ValueError(f"unknown radius mode {mode!r}")
    if len(values) == 1:  # single point: only the beyond-diameter radius
        return np.array([values[0] + 1.0])
    mids = 0.5 * (values[:-1] + values[1:])
    return np.append(mids, values[-1] + 1.0)


def doubling_constant(
    space: DiscreteSpace,
    radii: np.ndarray | None = None,
    points: np.ndarray | None = None,
) -> float:
    """Largest measured ratio lambda B(x, 2r) / lambda B(x, r).

    Samples every center (optionally restricted to ``points``) against the
    supplied radius grid; the default grid is the full midpoint grid, which is
    exact at desk scale.
    """
    if radii is None:
        radii = canonical_radii(space, mode="midpoint", points=points)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("radius sample must be nonempty")
    if np.any(radii <= 0.0):
        raise InvalidRadiusError("all sampled radii must be positive")
    idx = np.arange(space.n_points) if points is None else np.asarray(points)
    worst = 1.0
    for x in idx:
        dist = np.sort(space.rho[x][idx])
        mass = np.cumsum(space.haar[idx][np.argsort(space.rho[x][idx], kind="stable")])
        small = mass[np.searchsorted(dist, radii, side="left") - 1]
        large = mass[np.searchsorted(dist, 2.0 * radii, side="left") - 1]
        worst = max(worst, float((large / small).max()))
    return worst


def quasi_triangle_constant(space: DiscreteSpace) -> float:
    """Exact quasi-triangle constant, brute force over all triples."""
    if space.n_points < 2:
        raise InvariantViolationError("need at least two points")
    return _measured_quasi_const(space.rho)


def rescale(space: DiscreteSpace, rho_scale: float, haar_scale: float) -> DiscreteSpace:
    """Uniformly rescaled copy; used by refinement and dilation studies."""
    if rho_scale <= 0 or haar_scale <= 0:
        raise ValueError("scales must be positive")
    return DiscreteSpace(
        rho=space.rho * rho_scale,
        haar=space.haar * haar_scale,
        identity=space.identity,
        involution=space.involution,
        dim_exponent=space.dim_exponent,
        quasi_const=space.quasi_const,
    )
