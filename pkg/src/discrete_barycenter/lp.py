"""Equality-form LP solver that returns optimal vertices.

Programs have the shape ``min c.x  s.t.  A x = b, x >= 0`` with every entry
of ``A`` in {-1, 0, 1}. The workhorse is a revised primal simplex using
Bland's rule that runs over exact rationals (or floats) and keeps an explicit
sparse basis inverse. In rational mode a float solve from HiGHS may be used
to crash a starting basis; optimality is always certified exactly by the
rational simplex afterwards.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

try:
    # C-level rationals; the simplex runs several times faster on them
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover
    _mpq = None

from .arith import RATIONAL, get_arithmetic
from .exceptions import DataError, SolverError

__all__ = [
    "LinearProgram",
    "VertexSolution",
    "solve_to_optimal_vertex",
    "solve_warm_started",
    "sparsest_optimal_vertex",
]

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# float-mode thresholds; heuristic, documented in the README
_RC_TOL = 1e-10
_PIV_TOL = 1e-12
_DROP_TOL = 1e-14
_SMALL_LP = 40


class LinearProgram:
    """``min objective.x`` subject to ``rows[r].x = rhs[r]`` and ``x >= 0``.

    Parameters
    ----------
    objective : sequence of scalars, length ``num_vars``
    rows : sequence of mappings ``{variable index: coefficient}``
        Coefficients must be -1, 0 or 1; zeros are dropped.
    rhs : sequence of scalars, one per row
    """

    def __init__(self, objective, rows, rhs):
        self.objective = list(objective)
        self.num_vars = len(self.objective)
        if len(rows) != len(rhs):
            raise DataError("number of rows and right-hand sides differ")
        self.rhs = list(rhs)
        self.rows = []
        for r, row in enumerate(rows):
            clean = {}
            for j, a in dict(row).items():
                if a == 0:
                    continue
                if a not in (1, -1):
                    raise DataError(f"row {r}: coefficient {a!r} not in {{-1, 0, 1}}")
                if not 0 <= j < self.num_vars:
                    raise DataError(f"row {r}: variable index {j} out of range")
                clean[j] = int(a)
            self.rows.append(clean)
        self._columns = None

    @property
    def num_rows(self):
        return len(self.rows)

    @property
    def columns(self):
        if self._columns is None:
            cols = [[] for _ in range(self.num_vars)]
            for r, row in enumerate(self.rows):
                for j, a in row.items():
                    cols[j].append((r, a))
            self._columns = cols
        return self._columns

    def residuals(self, x):
        return [sum(a * x[j] for j, a in row.items()) - b for row, b in zip(self.rows, self.rhs)]

    def objective_value(self, x):
        return sum(c * v for c, v in zip(self.objective, x) if v)

    def is_feasible(self, x, arith=RATIONAL):
        if len(x) != self.num_vars:
            return False
        if arith.exact:
            return all(v >= 0 for v in x) and all(r == 0 for r in self.residuals(x))
        tol = max(arith.tol, 1e-9)
        return all(v >= -tol for v in x) and all(abs(r) <= tol for r in self.residuals(x))

    def dump(self):
        """Plain-text ``rows/columns/rhs`` listing for debugging."""
        lines = [f"rows {self.num_rows}", f"columns {self.num_vars}", "objective"]
        lines.append(" ".join(str(c) for c in self.objective))
        lines.append("constraints")
        for row, b in zip(self.rows, self.rhs):
            terms = " ".join(f"{'+' if a > 0 else '-'}x{j}" for j, a in sorted(row.items()))
            lines.append(f"{terms} = {b}")
        return "\n".join(lines) + "\n"


@dataclass
class VertexSolution:
    """Result of a solve.

    ``basis`` lists the structural basic variables (artificial columns kept
    basic on redundant rows are omitted). ``duals`` holds one multiplier per
    row such that ``objective[j] - duals . A[:, j]`` is zero on the basis and
    nonnegative everywhere at optimality.
    """

    values: tuple
    basis: tuple
    objective_value: object
    status: str = OPTIMAL
    duals: tuple = None
    pivots: int = 0
    crash_pivots: int = 0
    warm_started: bool = False
    warning: str = None
    engine: str = "simplex"
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def positive_count(self):
        return sum(1 for v in self.values if v > 0)


class _RevisedSimplex:
    """Revised primal simplex with Bland's rule over an explicit sparse basis inverse.

    Rows are sign-normalised so that ``b >= 0``; artificial variable ``n + r``
    is the unit column of row ``r``. Artificials never re-enter the basis.
    """

    def __init__(self, lp, arith, max_pivots=None):
        self.lp = lp
        self.arith = arith
        self.exact = arith.exact
        if arith.exact and _mpq is not None:
            def conv(v):
                return _mpq(arith.scalar(v))

            def out(v):
                return Fraction(int(v.numerator), int(v.denominator))
        else:
            conv = arith.scalar

            def out(v):
                return v
        self.conv, self.out = conv, out
        self.zero = conv(0)
        self.one = conv(1)
        self.m = m = lp.num_rows
        self.n = n = lp.num_vars
        rhs = [conv(b) for b in lp.rhs]
        self.sign = [1 if b >= 0 else -1 for b in rhs]
        self.b = [b if s > 0 else -b for b, s in zip(rhs, self.sign)]
        self.cost = [conv(c) for c in lp.objective]
        self.cols = [[(r, a * self.sign[r]) for r, a in col] for col in lp.columns]
        self.head = [n + r for r in range(m)]
        self.row_of = {n + r: r for r in range(m)}
        self.binv = [{r: self.one} for r in range(m)]
        self.xb = list(self.b)
        self.pivots = 0
        self.crash_pivots = 0
        self.max_pivots = max_pivots or 50 * (m + n) + 1000

    # -- linear algebra -------------------------------------------------
    def _ftran(self, col):
        w = {}
        for r in range(self.m):
            row = self.binv[r]
            s = 0
            for k, a in col:
                v = row.get(k)
                if v is not None:
                    s = s + v if a > 0 else s - v
            if s != 0 and (self.exact or abs(s) > _DROP_TOL):
                w[r] = s
        return w

    def _pivot(self, p, q, w):
        wp = w[p]
        new = {k: v / wp for k, v in self.binv[p].items()}
        self.binv[p] = new
        exact = self.exact
        for r, wr in w.items():
            if r == p:
                continue
            row = self.binv[r]
            for k, v in new.items():
                nv = row.get(k, 0) - wr * v
                if nv == 0 or (not exact and abs(nv) <= _DROP_TOL):
                    row.pop(k, None)
                else:
                    row[k] = nv
        theta = self.xb[p] / wp
        for r, wr in w.items():
            if r != p:
                self.xb[r] -= wr * theta
        self.xb[p] = theta
        old = self.head[p]
        del self.row_of[old]
        self.head[p] = q
        self.row_of[q] = p
        return new

    def _basic_cost(self, phase):
        n = self.n
        if phase == 1:
            return [self.one if h >= n else self.zero for h in self.head]
        return [self.zero if h >= n else self.cost[h] for h in self.head]

    def _duals(self, phase):
        y = [self.zero] * self.m
        for r, cb in enumerate(self._basic_cost(phase)):
            if cb:
                for k, v in self.binv[r].items():
                    y[k] += cb * v
        return y

    def _reduced_cost(self, j, y, phase):
        d = self.cost[j] if phase == 2 else self.zero
        for r, a in self.cols[j]:
            d = d - y[r] if a > 0 else d + y[r]
        return d

    def _price(self, y, phase):
        """Bland entering rule: the lowest-index improving column."""
        row_of = self.row_of
        neg = self.zero if self.exact else -_RC_TOL
        for j in range(self.n):
            if j in row_of:
                continue
            d = self._reduced_cost(j, y, phase)
            if d < neg:
                return j, d
        return None, None

    def _ratio(self, w, phase):
        """Bland leaving rule: minimum ratio, ties to the lowest basic index.

        In phase 2 a zero-level artificial with a nonzero entry must leave at
        ratio zero so it never becomes positive.
        """
        n = self.n
        best = None
        best_ratio = None
        for r, wr in sorted(w.items()):
            h = self.head[r]
            if phase == 2 and h >= n:
                if self.exact or abs(wr) > _PIV_TOL:
                    ratio = self.zero
                else:
                    continue
            elif wr > 0 and (self.exact or wr > _PIV_TOL):
                ratio = self.xb[r] / wr
                if not self.exact and ratio < 0:
                    ratio = 0.0
            else:
                continue
            if best is None:
                best, best_ratio = r, ratio
                continue
            if self.exact:
                better = ratio < best_ratio or (ratio == best_ratio and h < self.head[best])
            else:
                gap = ratio - best_ratio
                scale = 1e-12 * max(1.0, abs(best_ratio))
                better = gap < -scale or (abs(gap) <= scale and h < self.head[best])
            if better:
                best, best_ratio = r, ratio
        return best

    def _iterate(self, phase):
        y = self._duals(phase)
        since_refresh = 0
        while True:
            q, dq = self._price(y, phase)
            if q is None:
                return OPTIMAL
            w = self._ftran(self.cols[q])
            p = self._ratio(w, phase)
            if p is None:
                return UNBOUNDED
            new = self._pivot(p, q, w)
            self.pivots += 1
            if self.pivots > self.max_pivots:
                raise SolverError("simplex pivot limit exceeded")
            since_refresh += 1
            if self.exact or since_refresh < 50:
                for k, v in new.items():
                    y[k] += dq * v
            else:
                y = self._duals(phase)
                since_refresh = 0

    # -- phases ----------------------------------------------------------
    def phase1(self):
        status = self._iterate(1)
        if status != OPTIMAL:
            raise SolverError("phase 1 did not reach an optimum")
        infeas = sum((self.xb[r] for r in range(self.m) if self.head[r] >= self.n), self.zero)
        if self.exact:
            return infeas == 0
        return infeas <= max(self.arith.tol, 1e-9) * max(1.0, max(self.b, default=1.0))

    def phase2(self):
        return self._iterate(2)

    def crash_support(self, support, degenerate_candidates=()):
        """Pivot ``support`` columns into the basis; report whether the basis is primal feasible."""
        n = self.n
        for j in support:
            if j in self.row_of:
                continue
            w = self._ftran(self.cols[j])
            rows = [r for r, wr in w.items() if self.head[r] >= n and (self.exact or abs(wr) > 1e-9)]
            if rows:
                self._pivot(min(rows), j, w)
                self.crash_pivots += 1
        if not self._primal_feasible():
            return False
        for j in degenerate_candidates:
            if j in self.row_of:
                continue
            w = self._ftran(self.cols[j])
            rows = [r for r, wr in w.items()
                    if self.head[r] >= n and self.arith.is_zero(self.xb[r])
                    and (self.exact or abs(wr) > 1e-9)]
            if rows:
                self._pivot(min(rows), j, w)
                self.crash_pivots += 1
        return self._primal_feasible()

    def _primal_feasible(self):
        n = self.n
        tol = 0 if self.exact else max(self.arith.tol, 1e-9)
        for r in range(self.m):
            v = self.xb[r]
            if v < -tol:
                return False
            if self.head[r] >= n and v > tol:
                return False
        return True

    def crash_point(self, x):
        """Move a feasible point to a vertex without increasing cost, building its basis.

        ``x`` is a dense list of values feasible for the program. Returns the
        purified point, or ``None`` if an unbounded improving ray was met.
        """
        n = self.n
        arith = self.arith
        x = [self.conv(v) for v in x]
        for j in range(n):
            if not arith.is_positive(x[j]) or j in self.row_of:
                continue
            while True:
                w = self._ftran(self.cols[j])
                rows = [r for r, wr in w.items() if self.head[r] >= n and (self.exact or abs(wr) > 1e-9)]
                if rows:
                    self._pivot(min(rows), j, w)
                    self.crash_pivots += 1
                    break
                # a_j is spanned by the basic columns: move along the null direction
                delta = {j: self.one}
                for r, wr in w.items():
                    delta[self.head[r]] = -wr
                slope = sum(self.cost[v] * dv for v, dv in delta.items())
                if slope > 0 or (slope == 0 and all(dv >= 0 for dv in delta.values())):
                    delta = {v: -dv for v, dv in delta.items()}
                    slope = -slope
                limiting = [(x[v] / -dv, v != j, v) for v, dv in delta.items() if dv < 0]
                if not limiting:
                    return None
                t, _, v_out = min(limiting)
                for v, dv in delta.items():
                    x[v] = x[v] + t * dv
                x[v_out] = self.zero
                if not arith.exact:
                    for v in delta:
                        if abs(x[v]) <= _DROP_TOL:
                            x[v] = 0.0
                if v_out == j:
                    break
                r = self.row_of[v_out]
                self._pivot(r, j, w)
                self.crash_pivots += 1
                break
        return x

    # -- results ----------------------------------------------------------
    def solution(self, status, engine, warm=False, warning=None):
        n = self.n
        x = [self.zero] * n
        for r, h in enumerate(self.head):
            if h < n:
                v = self.xb[r]
                if not self.exact and abs(v) <= _DROP_TOL * 100:
                    v = 0.0
                if not self.exact and v < 0:
                    v = 0.0
                x[h] = v
        y = self._duals(2)
        out = self.out
        duals = tuple(out(s * v) for s, v in zip(self.sign, y))
        basis = tuple(sorted(h for h in self.head if h < n))
        obj = out(sum((c * v for c, v in zip(self.cost, x) if v), self.zero))
        return VertexSolution(
            values=tuple(out(v) for v in x),
            basis=basis,
            objective_value=obj,
            status=status,
            duals=duals,
            pivots=self.pivots,
            crash_pivots=self.crash_pivots,
            warm_started=warm,
            warning=warning,
            engine=engine,
        )


def _trivial_solution(lp, arith):
    zero = arith.scalar(0)
    if lp.num_vars == 0:
        if any(not arith.is_zero(arith.scalar(b)) for b in lp.rhs):
            return VertexSolution((), (), zero, INFEASIBLE)
        return VertexSolution((), (), zero, OPTIMAL, duals=tuple(zero for _ in lp.rhs))
    # no rows: x = 0 is optimal unless some cost is negative
    if any(arith.scalar(c) < 0 for c in lp.objective):
        return VertexSolution((), (), zero, UNBOUNDED)
    return VertexSolution(tuple(zero for _ in lp.objective), (), zero, OPTIMAL, duals=())


def _highs_hint(lp):
    """Float solve with HiGHS dual simplex; returns ``(status, x, reduced_costs, duals)``."""
    try:
        import numpy as np
        from scipy.optimize import linprog
        from scipy.sparse import csr_matrix
    except ImportError:  # pragma: no cover - scipy is a declared dependency
        return None
    data, ri, ci = [], [], []
    for r, row in enumerate(lp.rows):
        for j, a in row.items():
            ri.append(r)
            ci.append(j)
            data.append(float(a))
    A = csr_matrix((data, (ri, ci)), shape=(lp.num_rows, lp.num_vars))
    c = np.array([float(v) for v in lp.objective])
    b = np.array([float(v) for v in lp.rhs])
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
    if res.status == 2:
        return INFEASIBLE, None, None, None
    if res.status == 3:
        return UNBOUNDED, None, None, None
    if res.status != 0:
        return None
    return OPTIMAL, res.x, res.lower.marginals, res.eqlin.marginals


def _solve_exact_cold(lp, arith, max_pivots=None):
    eng = _RevisedSimplex(lp, arith, max_pivots)
    if not eng.phase1():
        return eng.solution(INFEASIBLE, "simplex")
    status = eng.phase2()
    return eng.solution(status, "simplex")


def _solve_highs_float(lp, arith):
    hint = _highs_hint(lp)
    if hint is None:
        raise SolverError("HiGHS failed")
    status, x, rc, y = hint
    zero = 0.0
    if status != OPTIMAL:
        return VertexSolution((), (), zero, status, engine="highs")
    tol = max(arith.tol, 1e-9)
    values = tuple(float(v) if v > tol else 0.0 for v in x)
    basis = tuple(j for j, v in enumerate(values) if v > 0)
    obj = sum(float(c) * v for c, v in zip(lp.objective, values) if v)
    return VertexSolution(values, basis, obj, OPTIMAL, duals=tuple(float(v) for v in y), engine="highs")


def solve_to_optimal_vertex(lp, arith=None, engine="auto", max_pivots=None):
    """Solve ``lp`` to an optimal basic feasible solution.

    Parameters
    ----------
    lp : LinearProgram
    arith : Arithmetic or str, optional
        Rational (default) or float arithmetic.
    engine : {"auto", "simplex", "highs"}
        ``"simplex"`` runs the Bland-rule simplex from an all-artificial
        basis. ``"highs"`` (float only) returns the HiGHS dual simplex vertex.
        ``"auto"`` crashes a basis from a HiGHS float solve, then certifies
        and finishes it with the Bland-rule simplex in rational mode; in
        float mode it uses HiGHS directly. Programs with at most 40
        variables skip HiGHS and go straight to the simplex.
    max_pivots : int, optional
        Safety limit on simplex iterations.

    Returns
    -------
    VertexSolution
        Status ``"infeasible"`` or ``"unbounded"`` is returned, never raised.
    """
    arith = get_arithmetic(arith)
    if lp.num_vars == 0 or lp.num_rows == 0:
        return _trivial_solution(lp, arith)
    if engine == "simplex":
        return _solve_exact_cold(lp, arith, max_pivots)
    if engine not in ("auto", "highs"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "auto" and lp.num_vars <= _SMALL_LP:
        # a call into HiGHS costs more than a few simplex pivots
        return _solve_exact_cold(lp, arith, max_pivots)
    if engine == "highs" or not arith.exact:
        return _solve_highs_float(lp, arith)
    hint = _highs_hint(lp)
    if hint is None or hint[0] != OPTIMAL:
        return _solve_exact_cold(lp, arith, max_pivots)
    _, x, rc, _ = hint
    support = [j for j, v in enumerate(x) if v > 1e-9]
    degenerate = [j for j, v in enumerate(x) if v <= 1e-9 and abs(rc[j]) <= 1e-9]
    eng = _RevisedSimplex(lp, arith, max_pivots)
    if not eng.crash_support(support, degenerate):
        logger.debug("HiGHS crash basis rejected; cold exact solve")
        return _solve_exact_cold(lp, arith, max_pivots)
    status = eng.phase2()
    sol = eng.solution(status, "highs+simplex")
    return sol


def solve_warm_started(lp, hint, arith=None, max_pivots=None):
    """Solve ``lp`` starting from a feasible point.

    The hint may be any feasible point; if it is not a vertex it is first
    moved to one without increasing the objective, then the Bland-rule
    simplex continues from that basis. An infeasible hint falls back to a
    cold solve and sets ``warning`` on the result.

    Parameters
    ----------
    lp : LinearProgram
    hint : sequence or mapping
        Dense values, or ``{variable index: value}`` with zeros omitted.
    """
    arith = get_arithmetic(arith)
    if isinstance(hint, dict):
        x = [arith.scalar(0)] * lp.num_vars
        for j, v in hint.items():
            x[j] = arith.scalar(v)
    else:
        x = [arith.scalar(v) for v in hint]
    if not lp.is_feasible(x, arith):
        sol = solve_to_optimal_vertex(lp, arith, max_pivots=max_pivots)
        sol.warning = "infeasible warm-start hint; solved cold"
        return sol
    eng = _RevisedSimplex(lp, arith, max_pivots)
    purified = eng.crash_point(x)
    if purified is None:
        return VertexSolution((), (), arith.scalar(0), UNBOUNDED, warm_started=True)
    if not eng._primal_feasible():
        # only reachable through float round-off
        sol = solve_to_optimal_vertex(lp, arith, max_pivots=max_pivots)
        sol.warning = "warm-start crash lost feasibility; solved cold"
        return sol
    status = eng.phase2()
    return eng.solution(status, "simplex", warm=True)


def _restrict(lp, keep):
    """Sub-program on the columns ``keep``; column ``t`` is original column ``keep[t]``."""
    pos = {j: t for t, j in enumerate(keep)}
    rows = [{pos[j]: a for j, a in row.items() if j in pos} for row in lp.rows]
    return LinearProgram([lp.objective[j] for j in keep], rows, lp.rhs)


def _propagate_zeros(lp, keep):
    """Drop columns forced to zero by sign patterns; None if some row becomes unsatisfiable.

    A row with zero right-hand side whose remaining coefficients share one
    sign forces all its columns to zero. A row whose remaining coefficients
    all have the wrong sign for its right-hand side cannot be met.
    """
    keep = set(keep)
    changed = True
    while changed:
        changed = False
        for row, b in zip(lp.rows, lp.rhs):
            live = [j for j in row if j in keep]
            signs = {row[j] > 0 for j in live}
            if b == 0:
                if len(signs) == 1:
                    keep.difference_update(live)
                    changed = True
            elif signs != {True, False} and signs != {b > 0}:
                return None
    return sorted(keep)


def sparsest_optimal_vertex(lp, solution, atoms, arith=None, min_size=1, budget=64):
    """Among optimal vertices, one with the fewest positive ``atoms`` variables.

    The optimal face is read off the duals of ``solution``: a feasible point
    is optimal iff it vanishes on every column with positive reduced cost.
    Subsets of the face's atom columns are tried by increasing size, in
    lexicographic order of indices; the first feasible one gives the
    result. When more than ``budget`` subsets would have to be tried the
    search is skipped and ``solution`` is returned unchanged, so the
    result is deterministic either way.

    Parameters
    ----------
    lp : LinearProgram
    solution : VertexSolution
        An optimal solution with duals.
    atoms : sequence of int
        Column indices whose support is minimised.
    min_size : int
        Known lower bound on the number of positive atoms.
    budget : int
        Maximum number of subsets examined.
    """
    arith = get_arithmetic(arith)
    if not solution.optimal or solution.duals is None:
        return solution
    y = solution.duals
    face = []
    for j in range(lp.num_vars):
        c = lp.objective[j]
        d = c - sum(a * y[r] for r, a in lp.columns[j])
        if (d == 0) if arith.exact else abs(d) <= 1e-9 * max(1.0, abs(float(c))):
            face.append(j)
    face_set = set(face)
    candidates = [j for j in atoms if j in face_set]
    current = sum(1 for j in atoms if arith.is_positive(solution.values[j]))
    sizes = range(max(min_size, 1), current)
    if not sizes or sum(math.comb(len(candidates), k) for k in sizes) > budget:
        return solution
    atom_set = set(atoms)
    others = [j for j in face if j not in atom_set]
    zero = arith.scalar(0)
    for k in sizes:
        for combo in itertools.combinations(candidates, k):
            keep = _propagate_zeros(lp, others + list(combo))
            if keep is None:
                continue
            sub = solve_to_optimal_vertex(_restrict(lp, keep), arith)
            if not sub.optimal:
                continue
            values = [zero] * lp.num_vars
            for t, j in enumerate(keep):
                values[j] = sub.values[t]
            return VertexSolution(
                values=tuple(values),
                basis=tuple(keep[t] for t in sub.basis),
                objective_value=lp.objective_value(values),
                status=OPTIMAL,
                duals=solution.duals,
                pivots=solution.pivots + sub.pivots,
                crash_pivots=solution.crash_pivots,
                warm_started=solution.warm_started,
                warning=solution.warning,
                engine=solution.engine,
                info={"sparsest_subsets": k},
            )
    return solution
