"""Brute-force verifiers.

Nothing here calls the LP solver: transport costs are found by exhaustive
enumeration of integral transports, and vertex certificates are checked with
a self-contained exact rank computation.
"""

from fractions import Fraction

from .arith import RATIONAL, get_arithmetic
from .exceptions import DataError, SizeCapError
from .measures import squared_distance

__all__ = [
    "IntegralTransportInstance",
    "brute_force_w2",
    "brute_force_phi",
    "brute_force_barycenter",
    "verify_vertex",
]

MAX_CELLS = 16
MAX_DENOMINATOR = 16


class IntegralTransportInstance:
    """Transportation instance with masses scaled to integers by ``D``.

    Both sides must carry the same total; partial measures are allowed.
    """

    def __init__(self, source, target, D):
        self.D = D
        self.supply = _scale(source.masses, D)
        self.demand = _scale(target.masses, D)
        if sum(self.supply) != sum(self.demand) or sum(self.supply) > D:
            raise DataError("scaled masses must have equal sums, at most D")
        self.cost = [[Fraction(squared_distance(p, q)) for q in target.points] for p in source.points]

    def minimum(self):
        """Minimal cost over all integral transports, as an exact fraction."""
        ns, nt = len(self.supply), len(self.demand)
        best = [None]
        rows = list(self.supply)
        cols = list(self.demand)
        cost = self.cost

        def rec(cell, acc):
            if best[0] is not None and acc >= best[0]:
                return
            if cell == ns * nt:
                best[0] = acc
                return
            j, k = divmod(cell, nt)
            hi = min(rows[j], cols[k])
            # the last cell of a row, or any cell of the last row, is forced
            if k == nt - 1 or j == ns - 1:
                need = rows[j] if k == nt - 1 else cols[k]
                if j == ns - 1 and k == nt - 1 and rows[j] != cols[k]:
                    return
                if need > hi:
                    return
                choices = (need,)
            else:
                choices = range(hi, -1, -1)
            for v in choices:
                rows[j] -= v
                cols[k] -= v
                rec(cell + 1, acc + cost[j][k] * v)
                rows[j] += v
                cols[k] += v

        rec(0, Fraction(0))
        return best[0] / self.D


def _scale(masses, D):
    out = []
    for m in masses:
        v = Fraction(m) * D if not isinstance(m, float) else m * D
        if isinstance(v, float):
            r = round(v)
            if abs(v - r) > 1e-9:
                raise DataError(f"mass {m} is not a multiple of 1/{D}")
            v = r
        elif v.denominator != 1:
            raise DataError(f"mass {m} is not a multiple of 1/{D}")
        out.append(int(v))
    return out


def brute_force_w2(P0, P1, D, max_cells=MAX_CELLS, max_denominator=MAX_DENOMINATOR):
    """Squared W2 distance by exhaustive search over integral transports at 1/D granularity.

    The transportation polytope with integral margins has integral vertices,
    so the minimum over its lattice points equals the LP optimum.
    """
    if len(P0) * len(P1) > max_cells:
        raise SizeCapError(f"oracle limit: {len(P0)}x{len(P1)} cost entries exceed {max_cells}")
    if not 1 <= D <= max_denominator:
        raise SizeCapError(f"oracle limit: denominator {D} exceeds {max_denominator}")
    if P0.dim != P1.dim:
        raise DataError("dimension mismatch")
    return IntegralTransportInstance(P0, P1, D).minimum()


def brute_force_phi(P0, measures, weights, D, **limits):
    """``sum_i weights[i] * brute_force_w2(P0, measures[i], D)``."""
    if len(weights) != len(measures):
        raise DataError("one weight per measure required")
    return sum(
        (Fraction(w) * brute_force_w2(P0, P, D, **limits) for w, P in zip(weights, measures)),
        Fraction(0),
    )


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def brute_force_barycenter(support, measures, weights, D, max_support=9, max_denominator=8):
    """Best measure on ``support`` with masses in multiples of 1/D, by full enumeration.

    Returns ``(phi, atoms)`` where ``atoms`` is a list of ``(point, mass)``.
    """
    from .measures import DiscreteMeasure

    if len(support) > max_support or D > max_denominator:
        raise SizeCapError("oracle limit exceeded for barycenter enumeration")
    best = None
    for comp in _compositions(D, len(support)):
        atoms = [(p, Fraction(c, D)) for p, c in zip(support, comp) if c]
        Q = DiscreteMeasure([p for p, _ in atoms], [m for _, m in atoms])
        phi = brute_force_phi(Q, measures, weights, D)
        if best is None or phi < best[0]:
            best = (phi, atoms)
    return best


def _rank(columns, nrows, arith):
    """Rank of a set of sparse columns ``[{row: coef}]``."""
    if not arith.exact:
        import numpy as np

        if not columns:
            return 0
        M = np.zeros((nrows, len(columns)))
        for c, col in enumerate(columns):
            for r, a in col.items():
                M[r, c] = float(a)
        return int(np.linalg.matrix_rank(M))
    pivots = {}
    rank = 0
    for col in columns:
        v = {r: Fraction(a) for r, a in col.items() if a}
        while v:
            r = min(v)
            if r not in pivots:
                pivots[r] = v
                rank += 1
                break
            p = pivots[r]
            f = v[r] / p[r]
            for k, a in p.items():
                nv = v.get(k, 0) - f * a
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
    return rank


def _solve_duals(lp, basis, arith):
    """Some ``y`` with ``y . A[:, j] = c_j`` on ``basis`` (exact elimination), or None."""
    # equations indexed by basic columns, unknowns by rows
    eqs = []
    for j in basis:
        eqs.append(({r: Fraction(a) for r, a in lp.columns[j]}, Fraction(lp.objective[j])))
    pivots = []
    for coeffs, rhs in eqs:
        coeffs = dict(coeffs)
        for pr, pc, prhs in pivots:
            if pr in coeffs:
                f = coeffs[pr] / pc[pr]
                for k, a in pc.items():
                    nv = coeffs.get(k, 0) - f * a
                    if nv:
                        coeffs[k] = nv
                    else:
                        coeffs.pop(k, None)
                rhs -= f * prhs
        if not coeffs:
            if rhs != 0:
                return None
            continue
        pivots.append((min(coeffs), coeffs, rhs))
    y = {}
    for pr, pc, prhs in reversed(pivots):
        s = prhs - sum(a * y.get(k, 0) for k, a in pc.items() if k != pr)
        y[pr] = s / pc[pr]
    return [y.get(r, Fraction(0)) for r in range(lp.num_rows)]


def verify_vertex(solution, lp, arith=RATIONAL):
    """Independent certificate that ``solution`` is an optimal vertex of ``lp``.

    Checks primal feasibility, that variables outside ``solution.basis`` are
    zero, that the basis columns are linearly independent, and that the
    duals leave no negative reduced cost while pricing the basis at zero.
    When the solution carries no duals, a dual vector is derived from the
    basis by exact elimination.
    """
    arith = get_arithmetic(arith)
    x = list(solution.values)
    if solution.status != "optimal" or len(x) != lp.num_vars:
        return False
    if not lp.is_feasible(x, arith):
        return False
    basis = sorted(set(solution.basis))
    in_basis = set(basis)
    for j, v in enumerate(x):
        if j not in in_basis and not arith.is_zero(v):
            return False
    cols = [dict(lp.columns[j]) for j in basis]
    if _rank(cols, lp.num_rows, arith) != len(basis):
        return False
    if sum(1 for v in x if arith.is_positive(v)) > lp.num_rows:
        return False
    y = solution.duals
    if y is None:
        if not arith.exact:
            return False
        y = _solve_duals(lp, basis, arith)
        if y is None:
            return False
    tol = 0 if arith.exact else 1e-7
    for j in range(lp.num_vars):
        d = lp.objective[j] - sum(a * y[r] for r, a in lp.columns[j])
        if d < -tol:
            return False
        if j in in_basis and abs(d) > tol:
            return False
    return True


def _example_measures():
    from .measures import DiscreteMeasure

    q, h = Fraction(1, 4), Fraction(1, 2)
    P1 = DiscreteMeasure([(0, 1), (1, 0), (2, 1)], [q, h, q])
    P2 = DiscreteMeasure([(0, 0), (1, 1), (2, 0)], [q, h, q])
    return P1, P2


def reference_values():
    """Named reference values as ``(name, brute-force value, LP value)`` triples.

    The brute-force side uses only this module; the LP side goes through
    the solver. Used by ``barycenter verify`` to regenerate expected values.
    """
    from .algorithms import approx_barycenter, exact_barycenter
    from .measures import DiscreteMeasure, transport_cost, union_support, wasserstein2_squared

    q, h = Fraction(1, 4), Fraction(1, 2)
    P1, P2 = _example_measures()
    pair = [P1, P2]
    w = [h, h]
    bary = DiscreteMeasure([(0, h), (1, h), (2, h)], [q, h, q])
    org = DiscreteMeasure([(1, 0), (1, 1)], [h, h])
    top = DiscreteMeasure([(1, 1)], [h], kind="partial")
    top_image = DiscreteMeasure([(0, 1), (2, 1)], [q, q], kind="partial")
    s1, s2 = DiscreteMeasure([(0, 0)], [1]), DiscreteMeasure([(1, 0)], [1])
    support = union_support(pair)
    out = [
        ("grid pair exact barycenter phi", brute_force_phi(bary, pair, w, 4), transport_cost(bary, pair, w)[0]),
        ("grid pair two-atom approximation phi", brute_force_phi(org, pair, w, 4), transport_cost(org, pair, w)[0]),
        ("grid pair W2^2(two-atom approximation, P1)", brute_force_w2(org, P1, 4), wasserstein2_squared(org, P1)),
        (
            "top atom of the two-atom approximation to its image in P1",
            brute_force_w2(top, top_image, 4),
            wasserstein2_squared(top, top_image),
        ),
        ("grid pair P1 to itself", brute_force_w2(P1, P1, 4), wasserstein2_squared(P1, P1)),
        ("two singletons W2^2", brute_force_w2(s1, s2, 1), wasserstein2_squared(s1, s2)),
        (
            "grid pair best measure on the union of supports, quarters",
            brute_force_barycenter(support, pair, w, 4)[0],
            approx_barycenter(support, pair, w).phi,
        ),
    ]
    S = sorted({tuple((a + b) / 2 for a, b in zip(x, y)) for x in P1.points for y in P2.points})
    out.append(
        ("grid pair best measure on all centroids, quarters",
         brute_force_barycenter(S, pair, w, 4)[0], exact_barycenter(pair, w).phi)
    )
    return out
