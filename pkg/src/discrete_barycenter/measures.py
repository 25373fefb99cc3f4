"""Discrete measures, transport plans and the geometric primitives on them."""

import itertools
import math
from dataclasses import dataclass, field

from .arith import RATIONAL, get_arithmetic
from .exceptions import DataError, SizeCapError, SolverError
from .lp import LinearProgram, solve_to_optimal_vertex

__all__ = [
    "DiscreteMeasure",
    "WeightVector",
    "TransportPlan",
    "squared_distance",
    "weighted_centroid",
    "union_support",
    "centroid_set",
    "transport_cost",
    "wasserstein2_squared",
    "is_non_mass_splitting",
    "sparsity_bound",
]

_RENORMALIZE_TOL = 1e-6


def _merge_atoms(points, masses, arith):
    """Sort atoms lexicographically and merge coincident points."""
    order = sorted(range(len(points)), key=lambda t: points[t])
    out_p, out_m = [], []
    for t in order:
        p, m = points[t], masses[t]
        if out_p and arith.points_equal(out_p[-1], p):
            out_m[-1] += m
        else:
            out_p.append(p)
            out_m.append(m)
    if not arith.exact:
        # tolerance merging is not transitive through a sort on the first
        # coordinate alone; a quadratic sweep keeps it order independent
        i = 0
        while i < len(out_p):
            j = i + 1
            while j < len(out_p):
                if arith.points_equal(out_p[i], out_p[j]):
                    out_m[i] += out_m.pop(j)
                    out_p.pop(j)
                else:
                    j += 1
            i += 1
    return out_p, out_m


class DiscreteMeasure:
    """Finite set of weighted support points in R^d.

    Atoms are stored sorted lexicographically by coordinates; coincident
    points are merged with their masses summed.

    Parameters
    ----------
    points : sequence of coordinate sequences
    masses : sequence of positive scalars
    kind : {"full", "partial"}
        A full measure has total mass 1. Input whose total is within 1e-6 of
        1 is renormalised; anything further off is rejected. A partial
        measure only needs total mass at most 1.
    arith : Arithmetic, optional
        Controls scalar conversion and point equality.
    """

    __slots__ = ("points", "masses", "kind")

    def __init__(self, points, masses, kind="full", arith=None, normalize=True):
        arith = get_arithmetic(arith)
        if kind not in ("full", "partial"):
            raise DataError(f"unknown measure kind {kind!r}")
        points = [arith.point(p) for p in points]
        masses = [arith.scalar(m) for m in masses]
        if len(points) != len(masses):
            raise DataError("points and masses have different lengths")
        if not points:
            raise DataError("a measure needs at least one atom")
        dim = len(points[0])
        if dim < 1:
            raise DataError("points must have dimension >= 1")
        for p in points:
            if len(p) != dim:
                raise DataError(f"dimension mismatch: {len(p)} != {dim}")
        for m in masses:
            if not m > 0:
                raise DataError(f"masses must be strictly positive, got {m}")
        points, masses = _merge_atoms(points, masses, arith)
        total = sum(masses, arith.scalar(0))
        if kind == "full":
            if total != 1:
                if abs(total - 1) <= _RENORMALIZE_TOL and normalize:
                    masses = [m / total for m in masses]
                elif not (not arith.exact and abs(total - 1) <= arith.tol):
                    raise DataError(f"masses sum to {total}, expected 1")
        elif total > 1 and not (not arith.exact and total - 1 <= arith.tol):
            raise DataError(f"partial measure has total mass {total} > 1")
        self.points = tuple(points)
        self.masses = tuple(masses)
        self.kind = kind

    @classmethod
    def _from_sorted(cls, points, masses, kind="full"):
        # trusted constructor for internally produced, already canonical atoms
        obj = cls.__new__(cls)
        obj.points = tuple(points)
        obj.masses = tuple(masses)
        obj.kind = kind
        return obj

    @classmethod
    def from_atoms(cls, atoms, kind="full", arith=None, normalize=True):
        """Build from an iterable of ``(point, mass)`` pairs."""
        atoms = list(atoms)
        return cls([p for p, _ in atoms], [m for _, m in atoms], kind=kind, arith=arith, normalize=normalize)

    @property
    def dim(self):
        return len(self.points[0])

    @property
    def total_mass(self):
        return sum(self.masses[1:], self.masses[0])

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.masses))

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.points == other.points and self.masses == other.masses

    def __hash__(self):
        return hash((self.points, self.masses))

    def __repr__(self):
        atoms = ", ".join(f"{_fmt_point(p)}:{m}" for p, m in self)
        return f"DiscreteMeasure({{{atoms}}})"

    def equals(self, other, arith=RATIONAL):
        """Atom-wise comparison; exact in rational mode, within tolerance otherwise."""
        if len(self) != len(other):
            return False
        return all(
            arith.points_equal(p, q) and arith.eq(m, n)
            for (p, m), (q, n) in zip(self, other)
        )

    def index(self, point):
        return self.points.index(point)

    def to_float(self):
        return DiscreteMeasure._from_sorted(
            [tuple(float(c) for c in p) for p in self.points], [float(m) for m in self.masses], self.kind
        )


def _fmt_point(p):
    return "(" + ",".join(str(c) for c in p) + ")"


class WeightVector(tuple):
    """Strictly positive weights summing to one."""

    def __new__(cls, weights, arith=None):
        arith = get_arithmetic(arith)
        weights = [arith.scalar(w) for w in weights]
        if not weights:
            raise DataError("weight vector is empty")
        if any(not w > 0 for w in weights):
            raise DataError("weights must be strictly positive")
        total = sum(weights, arith.scalar(0))
        if not arith.eq(total, 1):
            raise DataError(f"weights sum to {total}, expected 1")
        return super().__new__(cls, weights)

    @classmethod
    def uniform(cls, n, arith=None):
        arith = get_arithmetic(arith)
        w = arith.scalar(1) / n
        return cls([w] * n, arith)


def as_weights(weights, n, arith=None):
    """Validate ``weights`` for ``n`` measures; ``None`` means uniform."""
    arith = get_arithmetic(arith)
    if weights is None:
        return WeightVector.uniform(n, arith)
    w = WeightVector(weights, arith)
    if len(w) != n:
        raise DataError(f"got {len(w)} weights for {n} measures")
    return w


def squared_distance(a, b):
    """Squared Euclidean distance; exact for rational coordinates."""
    if len(a) != len(b):
        raise DataError(f"dimension mismatch: {len(a)} != {len(b)}")
    s = 0
    for x, y in zip(a, b):
        t = x - y
        s += t * t
    return s


def weighted_centroid(points, weights):
    """Return ``sum_i weights[i] * points[i]``."""
    points = list(points)
    if len(points) != len(weights):
        raise DataError(f"{len(points)} points but {len(weights)} weights")
    dim = len(points[0])
    if any(len(p) != dim for p in points):
        raise DataError("dimension mismatch among points")
    return tuple(sum(w * p[t] for w, p in zip(weights, points)) for t in range(dim))


def _check_dims(measures):
    if not measures:
        raise DataError("need at least one measure")
    dim = measures[0].dim
    for P in measures:
        if P.dim != dim:
            raise DataError(f"dimension mismatch: {P.dim} != {dim}")
    return dim


def union_support(measures, arith=None):
    """Deduplicated union of the supports, sorted lexicographically."""
    arith = get_arithmetic(arith)
    _check_dims(measures)
    pts = sorted(p for P in measures for p in P.points)
    out = []
    for p in pts:
        if arith.exact:
            if not out or out[-1] != p:
                out.append(p)
        elif not any(arith.points_equal(p, q) for q in out):
            out.append(p)
    return out


def centroid_set(measures, weights, cap=10**6, arith=None):
    """All weighted centroids using one support point per measure.

    Raises
    ------
    SizeCapError
        If the number of combinations exceeds ``cap``.
    """
    arith = get_arithmetic(arith)
    _check_dims(measures)
    if len(weights) != len(measures):
        raise DataError(f"{len(weights)} weights for {len(measures)} measures")
    combos = math.prod(len(P) for P in measures)
    if combos > cap:
        raise SizeCapError(
            f"instance too large for exact support enumeration: {combos} combinations exceed cap {cap}"
        )
    pts = {weighted_centroid(choice, weights) for choice in itertools.product(*(P.points for P in measures))}
    out = sorted(pts)
    if not arith.exact:
        merged = []
        for p in out:
            if not any(arith.points_equal(p, q) for q in merged):
                merged.append(p)
        out = merged
    return out


def sparsity_bound(measures):
    """``sum |P_i| - N + 1``, the support size of a vertex solution."""
    if not measures:
        raise DataError("need at least one measure")
    return sum(len(P) for P in measures) - len(measures) + 1


@dataclass(frozen=True)
class TransportPlan:
    """Flows from the atoms of ``source`` to the atoms of each target.

    ``flows`` maps ``(i, j, k)`` to the strictly positive mass sent from
    source atom ``j`` to atom ``k`` of ``targets[i]``.
    """

    source: DiscreteMeasure
    targets: tuple
    flows: dict = field(compare=True)

    def cost(self, weights):
        s = 0
        src = self.source.points
        for (i, j, k), y in self.flows.items():
            s += weights[i] * squared_distance(src[j], self.targets[i].points[k]) * y
        return s

    def images(self, i, j):
        """Sorted ``(k, mass)`` pairs receiving mass from source atom ``j`` in measure ``i``."""
        return sorted((k, y) for (ii, jj, k), y in self.flows.items() if ii == i and jj == j)

    def marginal_errors(self):
        """Per-constraint residuals of the marginal equalities (all zero for a valid plan)."""
        out = {}
        for i, P in enumerate(self.targets):
            for j, d in enumerate(self.source.masses):
                out[("src", i, j)] = -d
            for k, d in enumerate(P.masses):
                out[("tgt", i, k)] = -d
        for (i, j, k), y in self.flows.items():
            out[("src", i, j)] += y
            out[("tgt", i, k)] += y
        return out

    def is_valid(self, arith=RATIONAL):
        if any(not y > 0 for y in self.flows.values()):
            return False
        return all(arith.is_zero(r) for r in self.marginal_errors().values())

    def with_source(self, source):
        return TransportPlan(source, self.targets, dict(self.flows))


def is_non_mass_splitting(plan, arith=RATIONAL):
    """True iff every source atom sends its whole mass to exactly one atom of each target."""
    seen = {}
    for (i, j, k), y in plan.flows.items():
        if (i, j) in seen:
            return False
        seen[(i, j)] = y
    for i in range(len(plan.targets)):
        for j, d in enumerate(plan.source.masses):
            y = seen.get((i, j))
            if y is None or not arith.eq(y, d):
                return False
    return True


def _transportation_lp(source, target):
    """Classic transportation program; variable ``j * len(target) + k`` is the flow j -> k."""
    ns, nt = len(source), len(target)
    costs = [squared_distance(p, q) for p in source.points for q in target.points]
    rows = [{j * nt + k: 1 for k in range(nt)} for j in range(ns)]
    rows += [{j * nt + k: 1 for j in range(ns)} for k in range(nt)]
    rhs = list(source.masses) + list(target.masses)
    return LinearProgram(costs, rows, rhs)


def _solve_transportation(source, target, arith, engine):
    lp = _transportation_lp(source, target)
    sol = solve_to_optimal_vertex(lp, arith, engine=engine)
    if not sol.optimal:
        raise SolverError(f"transportation subproblem returned status {sol.status}")
    nt = len(target)
    flows = {}
    for v, y in enumerate(sol.values):
        if arith.is_positive(y):
            flows[divmod(v, nt)] = y
    return sol.objective_value, flows, sol


def wasserstein2_squared(P, Q, arith=None, engine="auto"):
    """Squared 2-Wasserstein distance between two measures of equal mass."""
    arith = get_arithmetic(arith)
    if P.dim != Q.dim:
        raise DataError(f"dimension mismatch: {P.dim} != {Q.dim}")
    cost, _, _ = _solve_transportation(P, Q, arith, engine)
    return cost


def transport_cost(P0, measures, weights=None, arith=None, engine="auto"):
    """Cost of an optimal transport from ``P0`` to every measure.

    The program separates over the measures because the masses of ``P0``
    are fixed, so it is solved as independent transportation problems,
    each to an optimal vertex.

    Parameters
    ----------
    P0 : DiscreteMeasure
    measures : sequence of DiscreteMeasure
    weights : sequence of scalars, optional
        Defaults to uniform weights.

    Returns
    -------
    phi : scalar
        ``sum_i weights[i] * W2(P0, measures[i])**2``.
    plan : TransportPlan
    """
    arith = get_arithmetic(arith)
    measures = tuple(measures)
    dim = _check_dims(measures)
    if P0.dim != dim:
        raise DataError(f"dimension mismatch: {P0.dim} != {dim}")
    weights = as_weights(weights, len(measures), arith)
    phi = arith.scalar(0)
    flows = {}
    for i, P in enumerate(measures):
        cost, f, _ = _solve_transportation(P0, P, arith, engine)
        phi += weights[i] * cost
        for (j, k), y in f.items():
            flows[(i, j, k)] = y
    return phi, TransportPlan(P0, measures, flows)
