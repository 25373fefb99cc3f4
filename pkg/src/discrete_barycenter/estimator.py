"""Estimator wrapper following the scikit-learn conventions.

``X`` is a sequence of measures rather than a feature matrix; everything
else (constructor-only hyperparameters, ``fit`` returning ``self``,
trailing-underscore fitted attributes, ``get_params``/``set_params``) works
as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .algorithms import (
    DEFAULT_CAP,
    DEFAULT_MAX_ITER,
    approx_barycenter,
    exact_barycenter,
    iterate_local_improvement,
    recover_non_mass_split,
    stage_bound,
)
from .arith import get_arithmetic
from .measures import transport_cost, union_support
from .validation import check_measures, check_weights

__all__ = ["WassersteinBarycenter"]

METHODS = ("approx", "recover", "improve", "exact")


class WassersteinBarycenter(TransformerMixin, BaseEstimator):
    """Barycenter of discrete measures under the squared 2-Wasserstein cost.

    Parameters
    ----------
    method : {"improve", "approx", "recover", "exact"}
        ``"approx"`` optimises over the union of the input supports,
        ``"recover"`` follows that with one recovery pass, ``"improve"``
        iterates both to a fixpoint, and ``"exact"`` solves over all
        weighted centroids.
    weights : sequence of scalars, optional
        One positive weight per measure, summing to one. Uniform if omitted.
    arith : {"rational", "float"}
    tol : float
        Float-mode relative tolerance.
    mini_exact : bool
        Replace the spreading step by an exact barycenter on small cells.
    centroid_cap : int
        Size cap for ``method="exact"``.
    max_iter : int
        Iteration cap for ``method="improve"``.

    Attributes
    ----------
    barycenter_ : DiscreteMeasure
    plan_ : TransportPlan
    phi_ : scalar
        Weighted transport cost of ``plan_``.
    trace_ : ImprovementTrace or None
    certified_bound_ : scalar or None
        A posteriori ratio bound against the true barycenter (``"improve"``).
    n_iter_ : int
    converged_ : bool

    Examples
    --------
    >>> P = [{(0,): 1}, {(2,): 1}]
    >>> WassersteinBarycenter(method="exact").fit(P).barycenter_
    DiscreteMeasure({(1):1})
    """

    def __init__(
        self,
        method="improve",
        weights=None,
        arith="rational",
        tol=1e-9,
        mini_exact=True,
        centroid_cap=DEFAULT_CAP,
        max_iter=DEFAULT_MAX_ITER,
    ):
        self.method = method
        self.weights = weights
        self.arith = arith
        self.tol = tol
        self.mini_exact = mini_exact
        self.centroid_cap = centroid_cap
        self.max_iter = max_iter

    def _arith(self):
        return get_arithmetic(self.arith, self.tol)

    def fit(self, X, y=None):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        arith = self._arith()
        measures = check_measures(X, arith)
        weights = check_weights(self.weights, len(measures), arith)
        self.trace_ = None
        self.certified_bound_ = None
        self.n_iter_ = 1
        self.converged_ = True
        if self.method == "exact":
            res = exact_barycenter(measures, weights, arith, cap=self.centroid_cap)
            measure, plan, phi = res.measure, res.plan, res.phi
        elif self.method == "improve":
            trace = iterate_local_improvement(
                measures, weights, arith, mini_exact=self.mini_exact, max_iter=self.max_iter
            )
            measure, plan, phi = trace.final.measure, trace.final.plan, trace.final.phi
            self.trace_ = trace
            self.certified_bound_ = trace.certified_ratio_bound
            self.n_iter_ = len(trace.iterations)
            self.converged_ = trace.converged
        else:
            res = approx_barycenter(union_support(measures, arith), measures, weights, arith)
            measure, plan, phi = res.measure, res.plan, res.phi
            if self.method == "recover":
                measure, plan = recover_non_mass_split(res, measures, weights, arith, self.mini_exact)
                self.certified_bound_ = stage_bound(phi, plan.cost(weights))
                phi = plan.cost(weights)
        self.barycenter_ = measure
        self.plan_ = plan
        self.phi_ = phi
        self.weights_ = weights
        self.n_measures_ = len(measures)
        return self

    def transform(self, X):
        """Squared W2 distance from the fitted barycenter to each measure, as a column."""
        check_is_fitted(self, "barycenter_")
        arith = self._arith()
        measures = check_measures(X, arith)
        out = []
        for P in measures:
            cost, _ = transport_cost(self.barycenter_, [P], [1], arith)
            out.append(cost)
        return np.array(out, dtype=object if arith.exact else float).reshape(-1, 1)

    def score(self, X, y=None):
        """Negative weighted cost of the barycenter against ``X`` (uniform weights if the count differs)."""
        check_is_fitted(self, "barycenter_")
        arith = self._arith()
        measures = check_measures(X, arith)
        weights = self.weights_ if len(measures) == self.n_measures_ else None
        phi, _ = transport_cost(self.barycenter_, measures, weights, arith)
        return -phi
