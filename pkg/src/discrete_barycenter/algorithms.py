"""Approximate and exact barycenters.

``approx_barycenter`` optimises over a fixed finite support,
``recover_non_mass_split`` turns an approximate barycenter into a measure
with a non-mass-splitting transport that is no worse, and
``iterate_local_improvement`` alternates the two until they agree.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import get_arithmetic
from .exceptions import DataError, SizeCapError, SolverError
from .lp import LinearProgram, solve_to_optimal_vertex, solve_warm_started, sparsest_optimal_vertex
from .measures import (
    DiscreteMeasure,
    TransportPlan,
    _check_dims,
    _merge_atoms,
    as_weights,
    squared_distance,
    union_support,
    weighted_centroid,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ApproxResult",
    "PartitionCell",
    "IterationRecord",
    "ImprovementTrace",
    "barycenter_lp",
    "approx_barycenter",
    "exact_barycenter",
    "partition_by_source",
    "greedy_lex_maximize",
    "spread_to_centroids",
    "recover_non_mass_split",
    "iterate_local_improvement",
    "certified_bound",
    "stage_bound",
]

DEFAULT_CAP = 10**6
DEFAULT_MAX_ITER = 100


@dataclass
class ApproxResult:
    """A measure on a candidate support together with a transport to the inputs.

    Attributes
    ----------
    measure : DiscreteMeasure
    plan : TransportPlan
    phi : scalar
        Cost of ``plan``; equal to the optimal value of the LP it came from.
    support_used : list of points
        The candidate support the measure was optimised over.
    solution : VertexSolution or None
        Raw LP solution, when one exists.
    """

    measure: DiscreteMeasure
    plan: TransportPlan
    phi: object
    support_used: list
    solution: object = None


# -- barycenter LP -----------------------------------------------------------


class BarycenterProgram:
    """Barycenter LP over a fixed support.

    Variables are ``z_j`` (one per candidate point) followed by ``y_ijk``.
    Row ``(i, j)`` reads ``sum_k y_ijk - z_j = 0`` and row ``(i, k)`` reads
    ``sum_j y_ijk = d_ik``.
    """

    def __init__(self, support, measures, weights):
        self.support = list(support)
        self.measures = tuple(measures)
        self.weights = weights
        m = len(self.support)
        self.offsets = []
        off = m
        for P in self.measures:
            self.offsets.append(off)
            off += m * len(P)
        objective = [0] * off
        rows, rhs = [], []
        for i, P in enumerate(self.measures):
            n = len(P)
            base = self.offsets[i]
            for j, s in enumerate(self.support):
                row = {j: -1}
                for k, x in enumerate(P.points):
                    v = base + j * n + k
                    row[v] = 1
                    objective[v] = weights[i] * squared_distance(s, x)
                rows.append(row)
                rhs.append(0)
            for k, d in enumerate(P.masses):
                rows.append({base + j * n + k: 1 for j in range(m)})
                rhs.append(d)
        self.lp = LinearProgram(objective, rows, rhs)

    def y_index(self, i, j, k):
        return self.offsets[i] + j * len(self.measures[i]) + k

    def decode(self, v):
        """Map a y variable index back to ``(i, j, k)``."""
        i = max(t for t, off in enumerate(self.offsets) if off <= v)
        j, k = divmod(v - self.offsets[i], len(self.measures[i]))
        return i, j, k

    def hint(self, measure, plan):
        """Sparse variable assignment for a measure on ``self.support`` and its plan."""
        pos = {p: j for j, p in enumerate(self.support)}
        x = {}
        for j, (p, m) in enumerate(measure):
            x[pos[p]] = m
        for (i, j, k), y in plan.flows.items():
            x[self.y_index(i, pos[plan.source.points[j]], k)] = y
        return x


def barycenter_lp(support, measures, weights):
    """Build the barycenter LP over ``support``; see :class:`BarycenterProgram`."""
    return BarycenterProgram(support, measures, weights).lp


def _canonical_support(support, dim, arith):
    pts = [arith.point(p) for p in support]
    if not pts:
        raise DataError("candidate support is empty")
    if any(len(p) != dim for p in pts):
        raise DataError("candidate support has the wrong dimension")
    pts, _ = _merge_atoms(pts, [0] * len(pts), arith)
    return pts


def _result_from_vertex(prog, sol, arith):
    m = len(prog.support)
    keep = [j for j in range(m) if arith.is_positive(sol.values[j])]
    new_index = {j: t for t, j in enumerate(keep)}
    measure = DiscreteMeasure._from_sorted([prog.support[j] for j in keep], [sol.values[j] for j in keep])
    flows = {}
    for v in range(m, prog.lp.num_vars):
        y = sol.values[v]
        if arith.is_positive(y):
            i, j, k = prog.decode(v)
            flows[(i, new_index[j], k)] = y
    plan = TransportPlan(measure, prog.measures, flows)
    phi = sol.objective_value if arith.exact else plan.cost(prog.weights)
    return ApproxResult(measure, plan, phi, list(prog.support), sol)


def approx_barycenter(
    support, measures, weights=None, arith=None, engine="auto", warm_start=None, tie_break="sparsest"
):
    """Best measure supported on ``support``.

    Parameters
    ----------
    support : sequence of points
        Candidate support points. Duplicates are merged and the points sorted.
    measures : sequence of DiscreteMeasure
    weights : sequence of scalars, optional
        Uniform by default.
    arith : Arithmetic or str, optional
    engine : {"auto", "simplex", "highs"}
        See :func:`solve_to_optimal_vertex`.
    warm_start : tuple (measure, plan), optional
        A feasible measure on ``support`` with a transport, used as the
        starting point of the simplex (rational mode only).
    tie_break : {"sparsest", "vertex"}
        When several optimal measures exist, ``"sparsest"`` returns one with
        the fewest atoms (searched over the optimal face within a small
        budget, see :func:`sparsest_optimal_vertex`); ``"vertex"`` keeps the
        simplex vertex as found.

    Returns
    -------
    ApproxResult
        Zero-mass candidate points are dropped from ``measure``. The
        solution is a vertex, so ``measure`` has at most
        ``sum |P_i| - N + 1`` atoms.
    """
    arith = get_arithmetic(arith)
    measures = tuple(measures)
    dim = _check_dims(measures)
    weights = as_weights(weights, len(measures), arith)
    support = _canonical_support(support, dim, arith)
    prog = BarycenterProgram(support, measures, weights)
    if warm_start is not None and arith.exact:
        sol = solve_warm_started(prog.lp, prog.hint(*warm_start), arith)
    else:
        sol = solve_to_optimal_vertex(prog.lp, arith, engine=engine)
    if not sol.optimal:
        raise SolverError(f"barycenter program returned status {sol.status}")
    if sol.warning:
        logger.warning(sol.warning)
    sol = _break_ties(prog.lp, sol, range(len(support)), arith, tie_break)
    return _result_from_vertex(prog, sol, arith)


def _break_ties(lp, sol, atoms, arith, tie_break, min_size=1):
    if tie_break == "vertex":
        return sol
    if tie_break != "sparsest":
        raise ValueError(f"unknown tie_break {tie_break!r}")
    return sparsest_optimal_vertex(lp, sol, list(atoms), arith, min_size=min_size)


# -- exact barycenter --------------------------------------------------------


def _multimarginal(measures, weights, arith, cap, engine, tie_break="sparsest"):
    """Optimal coupling over all tuples of support indices.

    Returns ``(phi, [(tuple, centroid, mass)], solution)``.
    """
    sizes = [len(P) for P in measures]
    combos = math.prod(sizes)
    if combos > cap:
        raise SizeCapError(
            f"instance too large for exact support enumeration: {combos} combinations exceed cap {cap}; "
            "use the approximation instead"
        )
    offsets = list(itertools.accumulate([0] + sizes[:-1]))
    tuples = list(itertools.product(*(range(n) for n in sizes)))
    rows = [dict() for _ in range(sum(sizes))]
    rhs = [d for P in measures for d in P.masses]
    objective, centroids = [], []
    for v, t in enumerate(tuples):
        pts = [P.points[k] for P, k in zip(measures, t)]
        c = weighted_centroid(pts, weights)
        centroids.append(c)
        objective.append(sum((w * squared_distance(c, x) for w, x in zip(weights, pts)), arith.scalar(0)))
        for i, k in enumerate(t):
            rows[offsets[i] + k][v] = 1
    lp = LinearProgram(objective, rows, rhs)
    sol = solve_to_optimal_vertex(lp, arith, engine=engine)
    if not sol.optimal:
        raise SolverError(f"multi-marginal program returned status {sol.status}")
    sol = _break_ties(lp, sol, range(len(tuples)), arith, tie_break, min_size=max(sizes))
    used = [(tuples[v], centroids[v], w) for v, w in enumerate(sol.values) if arith.is_positive(w)]
    return sol.objective_value, used, sol


def _distinct(points, arith):
    if arith.exact:
        return len(set(points)) == len(points)
    merged, _ = _merge_atoms(list(points), [0] * len(points), arith)
    return len(merged) == len(points)


def exact_barycenter(
    measures, weights=None, arith=None, cap=DEFAULT_CAP, engine="auto", method="multimarginal", tie_break="sparsest"
):
    """A true barycenter with an optimal vertex transport.

    Parameters
    ----------
    method : {"multimarginal", "centroid-lp"}
        ``"centroid-lp"`` solves the barycenter LP over the full centroid
        set. ``"multimarginal"`` solves the coupling LP over tuples of
        support points, which has the same optimal value with far fewer
        rows, and places every used tuple at its centroid. If two used
        tuples share a centroid the barycenter LP is re-solved over the
        centroids found, so the returned transport is always a vertex.
    cap : int
        Maximum number of support-point combinations.
    tie_break : {"sparsest", "vertex"}
        See :func:`approx_barycenter`.

    Raises
    ------
    SizeCapError
        When the number of combinations exceeds ``cap``.
    """
    arith = get_arithmetic(arith)
    measures = tuple(measures)
    _check_dims(measures)
    weights = as_weights(weights, len(measures), arith)
    if method == "centroid-lp":
        from .measures import centroid_set

        S = centroid_set(measures, weights, cap=cap, arith=arith)
        return approx_barycenter(S, measures, weights, arith, engine, tie_break=tie_break)
    if method != "multimarginal":
        raise ValueError(f"unknown method {method!r}")
    phi, used, sol = _multimarginal(measures, weights, arith, cap, engine, tie_break)
    cents = [c for _, c, _ in used]
    if not _distinct(cents, arith):
        return approx_barycenter(cents, measures, weights, arith, engine, tie_break=tie_break)
    order = sorted(range(len(used)), key=lambda t: cents[t])
    measure = DiscreteMeasure._from_sorted([cents[t] for t in order], [used[t][2] for t in order])
    flows = {}
    for j, t in enumerate(order):
        for i, k in enumerate(used[t][0]):
            flows[(i, j, k)] = used[t][2]
    plan = TransportPlan(measure, measures, flows)
    if not arith.exact:
        phi = plan.cost(weights)
    return ApproxResult(measure, plan, phi, sorted(cents), sol)


# -- recovery of a non-mass-splitting measure -------------------------------


@dataclass
class PartitionCell:
    """Images of one source atom.

    ``parts[i]`` maps points of measure ``i`` to the mass they receive from
    ``source``; every ``parts[i]`` sums to ``mass``.
    """

    index: int
    source: tuple
    mass: object
    parts: list

    def copy(self):
        return PartitionCell(self.index, self.source, self.mass, [dict(p) for p in self.parts])

    def point_count(self):
        return sum(len(p) for p in self.parts)


def partition_by_source(result, measures=None):
    """Split the transport of ``result`` into one cell per source atom."""
    plan = result.plan
    measures = plan.targets if measures is None else tuple(measures)
    cells = [
        PartitionCell(j, s, d, [dict() for _ in measures])
        for j, (s, d) in enumerate(plan.source)
    ]
    for (i, j, k) in sorted(plan.flows):
        cells[j].parts[i][measures[i].points[k]] = plan.flows[(i, j, k)]
    return cells


def cells_cost(cells, weights):
    """Transport cost when every source atom ships to its cell."""
    total = 0
    for cell in cells:
        for w, part in zip(weights, cell.parts):
            for x, m in part.items():
                total += w * squared_distance(cell.source, x) * m
    return total


def _drop(part, x, arith):
    if not arith.is_positive(part[x]):
        del part[x]


def greedy_lex_maximize(cells, weights, arith=None):
    """Shift mass towards low-index sources without changing the transport cost.

    Works on copies. Returns ``(cells, shifts)`` where ``shifts`` lists
    ``(l, j, mass, centroid)`` for every move from cell ``l`` to cell ``j``.
    """
    arith = get_arithmetic(arith)
    cells = [c.copy() for c in cells]
    shifts = []
    r = len(cells)
    for l in range(r - 1, -1, -1):
        sl = cells[l].source
        for j in range(l):
            sj = cells[j].source
            direction = [a - b for a, b in zip(sj, sl)]
            while arith.is_positive(cells[l].mass) and all(cells[l].parts):
                chosen = []
                for part in cells[l].parts:
                    # largest inner product; ties go to the lexicographically largest point
                    chosen.append(max(part, key=lambda x: (sum(a * b for a, b in zip(direction, x)), x)))
                c = weighted_centroid(chosen, weights)
                lhs, rhs = squared_distance(c, sj), squared_distance(c, sl)
                if arith.exact:
                    if lhs != rhs:
                        break
                elif abs(lhs - rhs) > arith.tol * max(1.0, lhs):
                    break
                dmin = min(part[x] for part, x in zip(cells[l].parts, chosen))
                cells[l].mass -= dmin
                cells[j].mass += dmin
                for part_l, part_j, x in zip(cells[l].parts, cells[j].parts, chosen):
                    part_l[x] -= dmin
                    _drop(part_l, x, arith)
                    part_j[x] = part_j.get(x, 0) + dmin
                shifts.append((l, j, dmin, c))
    return cells, shifts


def _lexmax_spread(cell, weights, arith):
    parts = [dict(p) for p in cell.parts]
    remaining = cell.mass
    blocks = []
    while arith.is_positive(remaining) and all(parts):
        chosen = [max(p) for p in parts]
        dmin = min(p[x] for p, x in zip(parts, chosen))
        for p, x in zip(parts, chosen):
            p[x] -= dmin
            _drop(p, x, arith)
        remaining -= dmin
        blocks.append((weighted_centroid(chosen, weights), dmin, tuple(chosen)))
    return blocks


def _exact_spread(cell, weights, arith):
    # barycenter of the normalised cell, scaled back; None if it is not usable
    measures = [
        DiscreteMeasure(list(p), [m / cell.mass for m in p.values()], arith=arith) for p in cell.parts
    ]
    _, used, _ = _multimarginal(measures, weights, arith, DEFAULT_CAP, "auto")
    cents = [c for _, c, _ in used]
    if not _distinct(cents, arith):
        return None
    blocks = []
    for t, c, w in sorted(used, key=lambda u: u[1], reverse=True):
        pts = tuple(P.points[k] for P, k in zip(measures, t))
        blocks.append((c, w * cell.mass, pts))
    return blocks


def spread_to_centroids(cells, weights, arith=None, mini_exact=False):
    """Spread each cell over weighted centroids of its points.

    With ``mini_exact``, a cell holding fewer than ``2N`` points in total is
    replaced by the exact barycenter of its images (when that barycenter
    has distinct atoms); other cells use repeated lexicographically maximal
    picks.

    Returns
    -------
    list of list of (centroid, mass, points)
        One list per cell. ``points[i]`` is the point of measure ``i`` the
        centroid ships all its mass to.
    """
    arith = get_arithmetic(arith)
    N = len(weights)
    out = []
    for cell in cells:
        if not arith.is_positive(cell.mass) or not all(cell.parts):
            out.append([])
            continue
        blocks = None
        if mini_exact and cell.point_count() < 2 * N:
            blocks = _exact_spread(cell, weights, arith)
        if blocks is None:
            blocks = _lexmax_spread(cell, weights, arith)
        out.append(blocks)
    return out


def partial_measures(blocks):
    """Partial measures built from the output of :func:`spread_to_centroids`."""
    return [
        DiscreteMeasure([c for c, _, _ in b], [m for _, m, _ in b], kind="partial") for b in blocks if b
    ]


def combine(blocks, measures, arith):
    """Sum the partial measures and build their non-mass-splitting transport."""
    flat = [blk for cell_blocks in blocks for blk in cell_blocks]
    points, masses = _merge_atoms([c for c, _, _ in flat], [m for _, m, _ in flat], arith)
    measure = DiscreteMeasure._from_sorted(points, masses)
    lookup = [{x: k for k, x in enumerate(P.points)} for P in measures]
    if arith.exact:
        where = {p: j for j, p in enumerate(points)}
        locate = where.__getitem__
    else:

        def locate(c):
            return next(j for j, p in enumerate(points) if arith.points_equal(p, c))

    flows = {}
    for c, m, pts in flat:
        j = locate(c)
        for i, x in enumerate(pts):
            key = (i, j, lookup[i][x])
            flows[key] = flows.get(key, 0) + m
    return measure, TransportPlan(measure, tuple(measures), flows)


@dataclass
class Recovery:
    """Intermediate states of one recovery run."""

    cells: list
    lex_cells: list
    shifts: list
    phi_lex: object
    blocks: list
    measure: DiscreteMeasure
    plan: TransportPlan


def recover(result, measures, weights=None, arith=None, mini_exact=True):
    """Run all four recovery steps and keep the intermediate states."""
    arith = get_arithmetic(arith)
    measures = tuple(measures)
    weights = as_weights(weights, len(measures), arith)
    cells = partition_by_source(result, measures)
    lex_cells, shifts = greedy_lex_maximize(cells, weights, arith)
    blocks = spread_to_centroids(lex_cells, weights, arith, mini_exact=mini_exact)
    measure, plan = combine(blocks, measures, arith)
    return Recovery(cells, lex_cells, shifts, cells_cost(lex_cells, weights), blocks, measure, plan)


def recover_non_mass_split(result, measures, weights=None, arith=None, mini_exact=True):
    """Measure with a non-mass-splitting transport that costs no more than ``result``.

    Returns
    -------
    measure : DiscreteMeasure
    plan : TransportPlan
        Non-mass splitting by construction.
    """
    rec = recover(result, measures, weights, arith, mini_exact)
    return rec.measure, rec.plan


# -- iterative improvement ---------------------------------------------------


@dataclass
class IterationRecord:
    """One pass of the improvement loop.

    ``phi_after_step1`` is the optimum over the current support and
    ``phi_after_step2`` the cost of the recovered measure's constructed
    transport. ``support_size`` is the size of the recovered measure.
    """

    phi_after_step1: object
    phi_after_step2: object
    support_size: int
    approx_support_size: int
    phi_lex: object
    changed: bool
    approx: ApproxResult = field(repr=False)
    recovered: tuple = field(repr=False)

    def __iter__(self):
        return iter((self.phi_after_step1, self.phi_after_step2, self.support_size))


@dataclass
class ImprovementTrace:
    iterations: list
    final: ApproxResult
    certified_ratio_bound: object
    converged: bool

    @property
    def phi_sequence(self):
        return [v for it in self.iterations for v in (it.phi_after_step1, it.phi_after_step2)]


def stage_bound(first_phi, phi):
    """``2 * phi / first_phi``: the certified ratio after improving from ``first_phi`` to ``phi``."""
    if first_phi == 0:
        # nothing to improve on: the first approximation is already exact
        return 1.0 if isinstance(first_phi, float) else Fraction(1)
    return 2 * phi / first_phi


def certified_bound(trace):
    """``2 / alpha`` with ``alpha`` the improvement factor of the whole run."""
    if not trace.iterations:
        raise DataError("trace has no iterations")
    return stage_bound(trace.iterations[0].phi_after_step1, trace.final.phi)


def iterate_local_improvement(
    measures,
    weights=None,
    arith=None,
    mini_exact=True,
    max_iter=DEFAULT_MAX_ITER,
    engine="auto",
    warm_start=True,
):
    """Alternate support-restricted optimisation and recovery until they agree.

    The first pass optimises over the union of the input supports; later
    passes re-optimise over the support of the recovered measure, starting
    from its constructed transport.

    Returns
    -------
    ImprovementTrace
        ``converged`` is False if ``max_iter`` passes ran without reaching
        the fixpoint; ``final`` is then the best recovered measure.
    """
    arith = get_arithmetic(arith)
    measures = tuple(measures)
    weights = as_weights(weights, len(measures), arith)
    if max_iter < 1:
        raise DataError("max_iter must be at least 1")
    res = approx_barycenter(union_support(measures, arith), measures, weights, arith, engine)
    records = []
    final, converged = None, False
    for _ in range(max_iter):
        rec = recover(res, measures, weights, arith, mini_exact)
        phi2 = rec.plan.cost(weights)
        changed = not rec.measure.equals(res.measure, arith)
        records.append(
            IterationRecord(res.phi, phi2, len(rec.measure), len(res.measure), rec.phi_lex, changed, res,
                            (rec.measure, rec.plan))
        )
        if not changed:
            # same measure; keep the constructed transport, which is non-mass splitting
            final = ApproxResult(rec.measure, rec.plan, phi2, res.support_used, res.solution)
            converged = True
            break
        hint = (rec.measure, rec.plan) if warm_start else None
        res = approx_barycenter(rec.measure.points, measures, weights, arith, engine, warm_start=hint)
    if final is None:
        last = records[-1]
        final = ApproxResult(last.recovered[0], last.recovered[1], last.phi_after_step2,
                             list(last.recovered[0].points))
    trace = ImprovementTrace(records, final, None, converged)
    trace.certified_ratio_bound = certified_bound(trace)
    return trace
