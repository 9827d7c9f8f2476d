"""Convolution structure on finite point sets.

A :class:`ConvolutionTable` stores the structure constants c(x, y, z) of a
measure-valued product: the product of the point masses at x and y is the
probability measure sum_z c(x, y, z) delta_z.  Together with the weights on
the underlying :class:`DiscreteSpace` this yields generalized translation

    (T^x f)(y) = sum_z c(x, y, z) f(z)

and the convolution of functions

    (f * g)(x) = sum_y (T^x f)(y) g(y~) haar(y).

Tables for truncated instances (Chebyshev, Bessel-Kingman) omit pairs whose
product would leave the stored grid; every consumer either restricts to the
declared safe window or raises :class:`IncompleteTableError`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    IncompleteTableError,
    InvariantViolationError,
    NoHaarError,
    SpaceMismatchError,
)
from .metric_space import DiscreteSpace

_MASS_TOL = 1e-12

# Axioms checked by check_axioms, in report order.
AXIOM_NAMES = (
    "probability",
    "identity",
    "commutativity",
    "involution",
    "support",
    "associativity",
)


def _same_space(a: DiscreteSpace, b: DiscreteSpace) -> bool:
    return a is b or (
        a.n_points == b.n_points
        and a.identity == b.identity
        and np.array_equal(a.rho, b.rho)
        and np.array_equal(a.haar, b.haar)
        and np.array_equal(a.involution, b.involution)
    )


def _require_same_space(a: DiscreteSpace, b: DiscreteSpace) -> None:
    if not _same_space(a, b):
        raise SpaceMismatchError("operands live on different spaces")


@dataclass(eq=False)
class GridFunction:
    """Real-valued function on the points of a space."""

    space: DiscreteSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.n_points,):
            raise InvariantViolationError(
                f"need {self.space.n_points} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvariantViolationError("function values must be finite")
        self.values = v

    @classmethod
    def indicator(cls, space: DiscreteSpace, points) -> "GridFunction":
        v = np.zeros(space.n_points)
        v[np.asarray(points, dtype=int)] = 1.0
        return cls(space, v)

    @classmethod
    def point_mass(cls, space: DiscreteSpace, point: int) -> "GridFunction":
        """Unit mass at one point: integrates to 1 against the weights."""
        v = np.zeros(space.n_points)
        v[point] = 1.0 / space.haar[point]
        return cls(space, v)

    def integral(self) -> float:
        return float(self.values @ self.space.haar)


@dataclass(eq=False)
class ConvolutionTable:
    """Sparse structure constants (x, y) -> (atom indices, masses).

    ``atoms`` maps an ordered pair to a pair of aligned arrays; lookups fall
    back to the mirrored key, so commutative tables store one orientation.
    ``safe_window`` flags the interior indices on which a truncated table is
    trustworthy; ``None`` means the whole point set.  Treated as immutable
    after construction.
    """

    space: DiscreteSpace
    atoms: dict
    safe_window: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        n = self.space.n_points
        clean = {}
        for (x, y), (zs, ms) in self.atoms.items():
            zs = np.asarray(zs, dtype=np.int64)
            ms = np.asarray(ms, dtype=float)
            if zs.shape != ms.shape or zs.ndim != 1 or zs.size == 0:
                raise InvariantViolationError(f"malformed atom list at ({x},{y})")
            if not (0 <= x < n and 0 <= y < n):
                raise InvariantViolationError(f"pair ({x},{y}) out of range")
            if zs.min() < 0 or zs.max() >= n:
                raise InvariantViolationError(f"atom index out of range at ({x},{y})")
            if np.any(ms < -_MASS_TOL):
                raise InvariantViolationError(f"negative mass at ({x},{y})")
            clean[(int(x), int(y))] = (zs, ms)
        self.atoms = clean
        if self.safe_window is not None:
            w = tuple(int(i) for i in self.safe_window)
            if any(not 0 <= i < n for i in w) or len(set(w)) != len(w):
                raise InvariantViolationError("safe_window must be distinct indices")
            if self.space.identity not in w:
                raise InvariantViolationError("safe_window must contain the identity")
            self.safe_window = w

    # -- access -------------------------------------------------------------

    def has(self, x: int, y: int) -> bool:
        return (x, y) in self.atoms or (y, x) in self.atoms

    def atoms_of(self, x: int, y: int):
        t = self.atoms.get((x, y))
        if t is None:
            t = self.atoms.get((y, x))
        if t is None:
            raise IncompleteTableError(f"no stored product for pair ({x},{y})")
        return t

    def measure_vector(self, x: int, y: int) -> np.ndarray:
        zs, ms = self.atoms_of(x, y)
        v = np.zeros(self.space.n_points)
        np.add.at(v, zs, ms)
        return v

    @property
    def window(self) -> np.ndarray:
        if self.safe_window is None:
            return np.arange(self.space.n_points)
        return np.asarray(self.safe_window, dtype=np.int64)

    def is_complete(self) -> bool:
        n = self.space.n_points
        seen = {(min(k), max(k)) for k in self.atoms}
        return len(seen) == n * (n + 1) // 2

    # -- serialization --------------------------------------------------------

    def to_dict(self, space_ref: str = "space.json") -> dict:
        rows = []
        for (x, y) in sorted(self.atoms):
            zs, ms = self.atoms[(x, y)]
            order = np.argsort(zs, kind="stable")
            rows.append([x, y, [[int(z), float(m)] for z, m in zip(zs[order], ms[order])]])
        out = {"space_ref": space_ref, "atoms": rows}
        if self.safe_window is not None:
            out["safe_window"] = list(self.safe_window)
        return out

    @classmethod
    def from_dict(cls, data: dict, space: DiscreteSpace) -> "ConvolutionTable":
        atoms = {}
        for x, y, pairs in data["atoms"]:
            zs = np.array([z for z, _ in pairs], dtype=np.int64)
            ms = np.array([m for _, m in pairs], dtype=float)
            atoms[(int(x), int(y))] = (zs, ms)
        window = data.get("safe_window")
        return cls(space, atoms, None if window is None else tuple(window))

    def save(self, path, space_ref: str = "space.json") -> None:
        Path(path).write_text(json.dumps(self.to_dict(space_ref)), encoding="utf-8")

    @classmethod
    def load(cls, path, space: DiscreteSpace | None = None) -> "ConvolutionTable":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        if space is None:
            space = DiscreteSpace.load(path.parent / data["space_ref"])
        return cls.from_dict(data, space)


def convolve_point_measures(table: ConvolutionTable, x: int, y: int) -> list:
    """The product measure of the point masses at x and y, as (index, mass)
    pairs sorted by index."""
    zs, ms = table.atoms_of(x, y)
    order = np.argsort(zs, kind="stable")
    return [(int(z), float(m)) for z, m in zip(zs[order], ms[order])]


def translation_tensor(table: ConvolutionTable, rows=None, cols=None):
    """Dense block C[i, j, :] of structure constants with a presence mask.

    C[i, j, z] = c(rows[i], cols[j], z); P[i, j] says whether the pair is
    stored.  Cached per (rows, cols) on the table, so operator pipelines pay
    the construction cost once.
    """
    n = table.space.n_points
    rows = tuple(range(n)) if rows is None else tuple(int(i) for i in rows)
    cols = tuple(range(n)) if cols is None else tuple(int(j) for j in cols)
    key = ("tensor", rows, cols)
    hit = table._cache.get(key)
    if hit is not None:
        return hit
    C = np.zeros((len(rows), len(cols), n))
    P = np.zeros((len(rows), len(cols)), dtype=bool)
    for i, x in enumerate(rows):
        for j, y in enumerate(cols):
            t = table.atoms.get((x, y))
            if t is None:
                t = table.atoms.get((y, x))
            if t is None:
                continue
            np.add.at(C[i, j], t[0], t[1])
            P[i, j] = True
    table._cache[key] = (C, P)
    return C, P


@dataclass(frozen=True)
class AxiomReport:
    """Max numerical violation per structure axiom."""

    violations: dict
    tolerance: float
    pairs_checked: int
    triples_checked: int

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.violations.values())

    def failing(self) -> list:
        return [k for k, v in self.violations.items() if v > self.tolerance]

    @property
    def max_violation(self) -> float:
        return max(self.violations.values())

    def as_dict(self) -> dict:
        return {
            "violations": {k: float(v) for k, v in self.violations.items()},
            "per_axiom_pass": {
                k: bool(v <= self.tolerance) for k, v in self.violations.items()
            },
            "tolerance": self.tolerance,
            "pairs_checked": self.pairs_checked,
            "triples_checked": self.triples_checked,
            "passed": self.passed,
        }


def check_axioms(
    table: ConvolutionTable,
    points=None,
    tol: float = 1e-12,
    max_triples: int = 200_000,
    seed: int = 0,
) -> AxiomReport:
    """Measure the worst violation of each structure axiom on ``points``.

    Checks probability normalization, the identity law, commutativity (where
    both orientations are stored), involution compatibility, the support law
    (mass at e exactly when the arguments are involutive partners), and
    associativity over all composable triples.  Failures are reported, never
    raised.  Triples beyond ``max_triples`` are subsampled with a fixed seed.
    """
    space = table.space
    n = space.n_points
    e = space.identity
    inv = space.involution
    pts = table.window if points is None else np.asarray(points, dtype=np.int64)
    pset = set(pts.tolist())

    viol = dict.fromkeys(AXIOM_NAMES, 0.0)
    pairs = [(x, y) for x in pts.tolist() for y in pts.tolist() if table.has(x, y)]

    for x, y in pairs:
        zs, ms = table.atoms_of(x, y)
        total = float(ms.sum())
        viol["probability"] = max(
            viol["probability"], abs(total - 1.0), max(0.0, -float(ms.min()))
        )
        dense = np.zeros(n)
        np.add.at(dense, zs, ms)
        if (x, y) in table.atoms and (y, x) in table.atoms and x != y:
            other = np.zeros(n)
            np.add.at(other, *table.atoms[(y, x)])
            viol["commutativity"] = max(
                viol["commutativity"], float(np.abs(dense - other).sum())
            )
        mirror = table.atoms.get((inv[y], inv[x]))
        if mirror is None:
            mirror = table.atoms.get((inv[x], inv[y]))
        if mirror is not None:
            pushed = np.zeros(n)
            np.add.at(pushed, inv[zs], ms)
            dense_m = np.zeros(n)
            np.add.at(dense_m, *mirror)
            viol["involution"] = max(
                viol["involution"], float(np.abs(pushed - dense_m).sum())
            )
        mass_at_e = float(dense[e])
        if y == inv[x]:
            if mass_at_e <= 0.0:
                viol["support"] = max(viol["support"], 1.0)
        else:
            viol["support"] = max(viol["support"], mass_at_e)

    for x in pts.tolist():
        # the identity must be reachable: x * x~ needs a stored product
        if not table.has(x, int(inv[x])):
            viol["support"] = max(viol["support"], 1.0)

    for x in pts.tolist():
        if table.has(e, x):
            dense = table.measure_vector(e, x)
            dense[x] -= 1.0
            viol["identity"] = max(viol["identity"], float(np.abs(dense).sum()))

    # associativity over composable triples from pts
    triples = list(itertools.product(pts.tolist(), repeat=3))
    if len(triples) > max_triples:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(triples), size=max_triples, replace=False)
        triples = [triples[i] for i in sorted(pick.tolist())]
    left = np.zeros(n)
    right = np.zeros(n)
    checked = 0
    for x, y, z in triples:
        txy = table.atoms.get((x, y)) or table.atoms.get((y, x))
        tyz = table.atoms.get((y, z)) or table.atoms.get((z, y))
        if txy is None or tyz is None:
            continue
        left[:] = 0.0
        right[:] = 0.0
        ok = True
        for w, mw in zip(txy[0].tolist(), txy[1].tolist()):
            t = table.atoms.get((w, z)) or table.atoms.get((z, w))
            if t is None:
                ok = False
                break
            left[t[0]] += mw * t[1]
        if ok:
            for v, mv in zip(tyz[0].tolist(), tyz[1].tolist()):
                t = table.atoms.get((x, v)) or table.atoms.get((v, x))
                if t is None:
                    ok = False
                    break
                right[t[0]] += mv * t[1]
        if not ok:
            continue
        checked += 1
        viol["associativity"] = max(
            viol["associativity"], float(np.abs(left - right).sum())
        )

    return AxiomReport(
        violations=viol,
        tolerance=tol,
        pairs_checked=len(pairs),
        triples_checked=checked,
    )


def _reach_per_point(table: ConvolutionTable) -> dict:
    """Farthest distance from an atom of (x, y) back to y, per x.

    For every stored pair the product's support sits within reach(x) of the
    other argument; the Haar solver uses this as an empirical radius outside
    which missing structure constants are taken to vanish.
    """
    rho = table.space.rho
    reach: dict = {}
    for (a, b), (zs, ms) in table.atoms.items():
        live = zs[ms > 0.0]
        if live.size == 0:
            continue
        ra = float(rho[live, b].max())
        rb = float(rho[live, a].max())
        reach[a] = max(reach.get(a, 0.0), ra)
        reach[b] = max(reach.get(b, 0.0), rb)
    return reach


def solve_haar(
    table: ConvolutionTable,
    points=None,
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Invariant weights normalized to 1 at the identity.

    Solves sum_y c(x, y, z) lam(y) = lam(z) in least squares over the
    unknowns ``points`` (default: the table's safe window).  For truncated
    tables an equation (x, z) enters only when every point close enough to z
    to contribute has a stored pair with x, every stored contributor lies in
    the unknown set, and z sits far enough from the grid edge that no
    off-grid point could contribute.  Raises when the system is rank
    deficient, inconsistent beyond ``residual_tol``, or yields nonpositive
    weights.  Entries outside ``points`` come back as NaN.
    """
    space = table.space
    n = space.n_points
    e = space.identity
    pts = table.window if points is None else np.asarray(points, dtype=np.int64)
    pts = np.unique(pts)
    if e not in pts:
        raise NoHaarError("identity must be among the solved points")
    col_of = {int(p): i for i, p in enumerate(pts.tolist())}
    in_pts = np.zeros(n, dtype=bool)
    in_pts[pts] = True

    complete = table.is_complete()
    coords = space.rho[e]
    max_coord = float(coords.max())
    reach = _reach_per_point(table)
    slack = 1e-9 * (1.0 + max_coord)

    rows, rhs = [], []
    for x, rx in sorted(reach.items()):
        # dense slice c(x, :, :) with presence of each pair
        cx = np.zeros((n, n))
        present = np.zeros(n, dtype=bool)
        for y in range(n):
            t = table.atoms.get((x, y)) or table.atoms.get((y, x))
            if t is None:
                continue
            present[y] = True
            np.add.at(cx[y], t[0], t[1])
        near = space.rho <= rx + slack  # near[y, z]
        for z in pts.tolist():
            if not complete and coords[z] + rx > max_coord + slack:
                continue  # an off-grid point could still contribute here
            if np.any(near[:, z] & ~present):
                continue  # unknown structure constant within reach
            col = cx[:, z]
            if np.any((col != 0.0) & ~in_pts):
                continue  # known contributor with unknown weight
            row = np.zeros(len(pts))
            np.add.at(row, [col_of[int(y)] for y in np.nonzero(col)[0]], col[col != 0.0])
            row[col_of[z]] -= 1.0
            rows.append(row)
            rhs.append(0.0)

    norm_row = np.zeros(len(pts))
    norm_row[col_of[e]] = 1.0
    rows.append(norm_row)
    rhs.append(1.0)

    A = np.vstack(rows)
    b = np.asarray(rhs)
    sol, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < len(pts):
        raise NoHaarError(
            f"invariance system determines {rank} of {len(pts)} weights"
        )
    if sol[col_of[e]] <= 0:
        raise NoHaarError("solver produced nonpositive identity weight")
    sol = sol / sol[col_of[e]]
    residual = float(np.abs(A @ sol - b).max())
    if residual > residual_tol:
        raise NoHaarError(f"invariance residual {residual:.3e} > {residual_tol:.1e}")
    if np.any(sol <= 0.0):
        raise NoHaarError("solver produced nonpositive weights")
    out = np.full(n, np.nan)
    out[pts] = sol
    return out


def translate(table: ConvolutionTable, f: GridFunction, x: int) -> GridFunction:
    """(T^x f)(y) = sum_z c(x, y, z) f(z) at every y; raises on missing pairs."""
    _require_same_space(table.space, f.space)
    n = table.space.n_points
    out = np.empty(n)
    for y in range(n):
        zs, ms = table.atoms_of(x, y)
        out[y] = float(ms @ f.values[zs])
    return GridFunction(table.space, out)


def translate_at(table: ConvolutionTable, f: GridFunction, x: int, ys) -> np.ndarray:
    """Translation values at selected y only; for truncated tables."""
    _require_same_space(table.space, f.space)
    out = np.empty(len(ys))
    for i, y in enumerate(np.asarray(ys, dtype=int).tolist()):
        zs, ms = table.atoms_of(x, y)
        out[i] = float(ms @ f.values[zs])
    return out


def convolve_functions(
    table: ConvolutionTable,
    f: GridFunction,
    g: GridFunction,
    points=None,
) -> GridFunction:
    """(f * g)(x) = sum_y (T^x f)(y) g(y~) haar(y).

    The y-sum runs over the support of y -> g(y~); each needed pair must be
    stored.  ``points`` restricts which x are evaluated (others return 0),
    which is how truncated instances stay inside their safe window.
    """
    _require_same_space(table.space, f.space)
    _require_same_space(table.space, g.space)
    space = table.space
    n = space.n_points
    gy = g.values[space.involution] * space.haar
    supp = np.nonzero(gy != 0.0)[0]
    xs = np.arange(n) if points is None else np.asarray(points, dtype=np.int64)
    out = np.zeros(n)
    for x in xs.tolist():
        acc = 0.0
        for y in supp.tolist():
            zs, ms = table.atoms_of(x, y)
            acc += float(ms @ f.values[zs]) * gy[y]
        out[x] = acc
    return GridFunction(space, out)


# -- instance constructors ----------------------------------------------------


def make_cyclic(n: int):
    """Cyclic group Z_n with the circular metric and unit weights."""
    if n < 1:
        raise ConfigError(f"need n >= 1, got {n}")
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    rho = np.minimum(diff, n - diff).astype(float)
    space = DiscreteSpace(
        rho=rho,
        haar=np.ones(n),
        identity=0,
        involution=(-idx) % n,
        dim_exponent=1.0,
        quasi_const=1.0 if n > 1 else None,
    )
    atoms = {
        (i, j): (np.array([(i + j) % n]), np.array([1.0]))
        for i in range(n)
        for j in range(i, n)
    }
    return space, ConvolutionTable(space, atoms)


def _permutation_group_table(degree: int) -> np.ndarray:
    elems = sorted(itertools.permutations(range(degree)))
    index = {p: i for i, p in enumerate(elems)}
    m = len(elems)
    table = np.empty((m, m), dtype=np.int64)
    for i, p in enumerate(elems):
        for j, q in enumerate(elems):
            table[i, j] = index[tuple(p[q[k]] for k in range(degree))]
    return table


def _quaternion_group_table() -> np.ndarray:
    # units as (sign, axis) with axes 1,i,j,k; ij=k, jk=i, ki=j
    axes = [(1, 0), (1, 1), (-1, 1), (1, 2), (-1, 2), (1, 3), (-1, 3), (-1, 0)]
    elems = [(1, 0)] + axes[1:7] + [(-1, 0)]
    prod = {}
    for a in range(4):
        prod[(0, a)] = (1, a)
        prod[(a, 0)] = (1, a)
    for a in (1, 2, 3):
        prod[(a, a)] = (-1, 0)
    cyc = {(1, 2): (1, 3), (2, 3): (1, 1), (3, 1): (1, 2)}
    for (a, b), (s, c) in cyc.items():
        prod[(a, b)] = (s, c)
        prod[(b, a)] = (-s, c)
    index = {q: i for i, q in enumerate(elems)}
    m = len(elems)
    table = np.empty((m, m), dtype=np.int64)
    for i, (si, ai) in enumerate(elems):
        for j, (sj, aj) in enumerate(elems):
            s, a = prod[(ai, aj)]
            table[i, j] = index[(si * sj * s, a)]
    return table


def builtin_group_table(name: str) -> np.ndarray:
    """Multiplication tables used by tests and the CLI: s3, q8, or z<n>."""
    key = name.lower()
    if key == "s3":
        return _permutation_group_table(3)
    if key == "q8":
        return _quaternion_group_table()
    if key.startswith("z") and key[1:].isdigit():
        n = int(key[1:])
        if n < 1:
            raise ConfigError("cyclic order must be positive")
        idx = np.arange(n)
        return (idx[:, None] + idx[None, :]) % n
    raise ConfigError(f"unknown builtin group {name!r}")


def _validate_group_table(T: np.ndarray) -> tuple:
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ConfigError("group table must be square")
    m = T.shape[0]
    if T.min() < 0 or T.max() >= m:
        raise ConfigError("group table entries out of range")
    ident = None
    for g in range(m):
        if np.array_equal(T[g], np.arange(m)) and np.array_equal(T[:, g], np.arange(m)):
            ident = g
            break
    if ident is None:
        raise ConfigError("group table has no identity")
    for g in range(m):
        if sorted(T[g].tolist()) != list(range(m)) or sorted(
            T[:, g].tolist()
        ) != list(range(m)):
            raise ConfigError("group table is not a Latin square")
    lhs = T[T[:, :, None], np.arange(m)[None, None, :]]  # (ab)c
    rhs = T[np.arange(m)[:, None, None], T[None, :, :]]  # a(bc)
    if not np.array_equal(lhs, rhs):
        raise ConfigError("group table is not associative")
    inverse = np.empty(m, dtype=np.int64)
    for g in range(m):
        hits = np.nonzero(T[g] == ident)[0]
        if hits.size != 1:
            raise ConfigError("group table has no unique inverses")
        inverse[g] = hits[0]
    return ident, inverse


def make_conjugacy(group_table) -> tuple:
    """Conjugacy-class structure of a finite group.

    Points are the classes (identity class first, then by least member),
    products are normalized class-product counts, the metric is discrete,
    and the weights come from the invariance solver (they equal the class
    sizes under the identity-weight-1 normalization).
    """
    T = np.asarray(group_table, dtype=np.int64)
    ident, inverse = _validate_group_table(T)
    m = T.shape[0]

    assigned = np.full(m, -1, dtype=np.int64)
    classes = []
    for g in range(m):
        if assigned[g] >= 0:
            continue
        orbit = {int(T[T[h, g], inverse[h]]) for h in range(m)}
        members = sorted(orbit)
        for u in members:
            assigned[u] = len(classes)
        classes.append(members)
    order = sorted(
        range(len(classes)),
        key=lambda k: (0 if ident in classes[k] else 1, classes[k][0]),
    )
    classes = [classes[k] for k in order]
    relabel = np.empty(m, dtype=np.int64)
    for k, members in enumerate(classes):
        for u in members:
            relabel[u] = k
    nc = len(classes)

    atoms = {}
    for a in range(nc):
        for b in range(a, nc):
            counts = np.zeros(nc)
            for u in classes[a]:
                np.add.at(counts, relabel[T[u, classes[b]]], 1.0)
            counts /= len(classes[a]) * len(classes[b])
            live = np.nonzero(counts > 0.0)[0]
            atoms[(a, b)] = (live, counts[live])

    involution = np.array([relabel[inverse[c[0]]] for c in classes], dtype=np.int64)
    rho = np.ones((nc, nc)) - np.eye(nc)
    if nc == 1:
        rho = np.zeros((1, 1))
    provisional = DiscreteSpace(
        rho=rho,
        haar=np.ones(nc),
        identity=0,
        involution=involution,
        dim_exponent=1.0,
        quasi_const=1.0 if nc > 1 else None,
    )
    haar = solve_haar(ConvolutionTable(provisional, dict(atoms)))
    space = DiscreteSpace(
        rho=rho,
        haar=haar,
        identity=0,
        involution=involution,
        dim_exponent=1.0,
        quasi_const=1.0 if nc > 1 else None,
    )
    return space, ConvolutionTable(space, atoms)


def make_chebyshev(M: int) -> tuple:
    """Chebyshev polynomial structure on indices {0..M}.

    Products follow the product-to-sum rule: the (m, n) product splits mass
    1/2 onto |m - n| and 1/2 onto m + n, stored while m + n stays on the
    grid.  Safe window {0..M/2}: any two window indices have their full
    product stored.  Weights are 1 at 0 and 2 elsewhere.
    """
    if M < 4:
        raise ConfigError(f"need M >= 4, got {M}")
    n = M + 1
    idx = np.arange(n)
    rho = np.abs(idx[:, None] - idx[None, :]).astype(float)
    haar = np.full(n, 2.0)
    haar[0] = 1.0
    space = DiscreteSpace(
        rho=rho,
        haar=haar,
        identity=0,
        involution=idx.copy(),
        dim_exponent=1.0,
        quasi_const=1.0,
    )
    atoms = {}
    for j in range(n):
        atoms[(0, j)] = (np.array([j]), np.array([1.0]))
    for m in range(1, n):
        for k in range(m, n):
            if m + k > M:
                break
            if m == k:
                atoms[(m, k)] = (np.array([0, 2 * m]), np.array([0.5, 0.5]))
            else:
                atoms[(m, k)] = (np.array([k - m, k + m]), np.array([0.5, 0.5]))
    window = tuple(range(M // 2 + 1))
    return space, ConvolutionTable(space, atoms, safe_window=window)


def make_bessel(alpha: float, grid_size: int, step: float) -> tuple:
    """Bessel-Kingman structure discretized on the grid {k*step}.

    Translations average f(sqrt(x^2 + y^2 - 2xy cos t)) against the density
    c_a sin^{2a}(t) on (0, pi), by 64-node Gauss-Legendre quadrature; each
    off-grid value splits its mass linearly between the two nearest grid
    points, and masses beyond the last point pile up there.  Weights are the
    cell integrals of t^{2a+1}, the volume exponent is N = 2a + 2, and the
    safe window keeps x + y on the grid so stored products are unclipped.
    """
    if alpha <= -0.5:
        raise ConfigError(f"need alpha > -1/2, got {alpha}")
    if grid_size < 16:
        raise ConfigError(f"need grid_size >= 16, got {grid_size}")
    if step <= 0:
        raise ConfigError(f"need step > 0, got {step}")
    n = grid_size
    coords = np.arange(n) * step
    rho = np.abs(coords[:, None] - coords[None, :])
    upper = coords + 0.5 * step
    lower = np.maximum(coords - 0.5 * step, 0.0)
    ex = 2.0 * alpha + 2.0
    haar = (upper**ex - lower**ex) / ex
    space = DiscreteSpace(
        rho=rho,
        haar=haar,
        identity=0,
        involution=np.arange(n),
        dim_exponent=ex,
        quasi_const=1.0,
    )

    nodes, weights = np.polynomial.legendre.leggauss(64)
    c_alpha = math.gamma(alpha + 1.0) / (
        math.gamma(0.5) * math.gamma(alpha + 0.5)
    )
    # Composite rule: one 64-node panel per slice of [0, pi], with enough
    # panels that the law-of-cosines argument moves by well under one grid
    # cell between nodes; a single panel misses cells entirely once the
    # argument range outgrows the node count.
    panel_cache: dict = {}

    def panelled(n_panels: int):
        hit = panel_cache.get(n_panels)
        if hit is None:
            edges = np.linspace(0.0, np.pi, n_panels + 1)
            half = 0.5 * (edges[1:] - edges[:-1])
            mid = 0.5 * (edges[1:] + edges[:-1])
            theta = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
            qw = (half[:, None] * weights[None, :]).ravel()
            qw = qw * c_alpha * np.sin(theta) ** (2.0 * alpha)
            hit = (np.cos(theta), qw)
            panel_cache[n_panels] = hit
        return hit

    atoms = {}
    for i in range(n):
        atoms[(0, i)] = (np.array([i]), np.array([1.0]))
    for i in range(1, n):
        xi = coords[i]
        for j in range(i, n):
            yj = coords[j]
            span_cells = 2.0 * min(xi, yj) / step
            cos_t, qw = panelled(max(1, math.ceil(4.0 * (span_cells + 1.0) / 64.0)))
            v = np.sqrt(xi * xi + yj * yj - 2.0 * xi * yj * cos_t)
            pos = v / step
            k0 = np.minimum(pos.astype(np.int64), n - 1)
            k1 = np.minimum(k0 + 1, n - 1)
            frac = np.clip(pos - k0, 0.0, 1.0)
            dense = np.bincount(
                np.concatenate([k0, k1]),
                weights=np.concatenate([qw * (1.0 - frac), qw * frac]),
                minlength=n,
            )
            live = np.nonzero(dense > 0.0)[0]
            ms = dense[live]
            atoms[(i, j)] = (live, ms / ms.sum())
    window = tuple(k for k in range(n) if 2 * k <= n - 1)
    return space, ConvolutionTable(space, atoms, safe_window=window)
