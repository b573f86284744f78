"""scikit-learn style front end for the uniformizer.

``X`` is a ``(surface, lengths)`` pair (or a MetricDocument) and ``y`` an
optional target curvature; leaving ``y`` out uses the ``target`` preset.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .uniformizer import SolverConfig, curvature_map, newton_uniformize, yamabe_flow
from .validation import check_metric_input

__all__ = ["DiscreteUniformizer"]


class DiscreteUniformizer(TransformerMixin, BaseEstimator):
    """Find the discrete conformal metric with a prescribed curvature.

    Parameters
    ----------
    target : {"uniform", "flat"} or array of shape (n_vertices,)
        Used when ``fit`` is called without ``y``.
    solver : {"newton", "flow"}
    tol : float
        Stopping tolerance on max |K - K*|.
    max_iter : int or None
        Newton iterations or flow steps; None keeps the solver default.
    flow_step : float
        Initial explicit-Euler step for the flow.

    Attributes
    ----------
    report_ : SolveReport
    u_ : ndarray of shape (n_vertices,)
        Conformal factor, centred to sum zero.
    surface_, lengths_ : the uniformized Delaunay triangulation and lengths.
    curvature_ : ndarray of shape (n_vertices,)
    n_iter_, n_flips_ : int
    """

    def __init__(self, target="uniform", solver="newton", tol=1e-10, max_iter=None,
                 flow_step=0.1, max_step=3.0, armijo_c=1e-4, shrink=0.5, min_step=1e-12):
        self.target = target
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.flow_step = flow_step
        self.max_step = max_step
        self.armijo_c = armijo_c
        self.shrink = shrink
        self.min_step = min_step

    def _config(self):
        kw = dict(residual_tol=self.tol, flow_step=self.flow_step, max_step=self.max_step,
                  armijo_c=self.armijo_c, shrink=self.shrink, min_step=self.min_step)
        if self.max_iter is not None:
            kw["max_newton_iters" if self.solver == "newton" else "max_flow_iters"] = self.max_iter
        return SolverConfig(**kw)

    def _solve(self, X, y=None, u0=None):
        surface, lengths = check_metric_input(X)
        target = self.target if y is None else y
        if self.solver == "newton":
            return newton_uniformize(surface, lengths, target, self._config(), u0=u0)
        if self.solver == "flow":
            return yamabe_flow(surface, lengths, target, self._config(), u0=u0)
        raise ValueError(f"unknown solver {self.solver!r}")

    def fit(self, X, y=None, u0=None):
        report = self._solve(X, y, u0)
        self.report_ = report
        self.u_ = report.u
        self.surface_ = report.surface
        self.lengths_ = report.lengths
        self.curvature_ = report.curvature
        self.n_iter_ = report.iterations
        self.n_flips_ = report.total_flips
        return self

    def transform(self, X, y=None):
        """Uniformize ``X`` with the fitted settings; returns (surface, lengths)."""
        report = self._solve(X, y)
        return report.surface, report.lengths

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X, y, **fit_params)
        return self.surface_, self.lengths_

    def predict(self, U):
        """Curvature map of the fitted input at conformal factor(s) ``U``.

        ``U`` is measured from the Delaunay-repaired input, not from the
        fitted solution; ``predict(u_)`` reproduces ``curvature_``.
        """
        check_is_fitted(self, "report_")
        U = np.asarray(U, dtype=float)
        rep = self.report_
        rows = np.atleast_2d(U)
        out = np.array([curvature_map(rep.base_surface, rep.base_lengths, u)[0] for u in rows])
        return out[0] if U.ndim == 1 else out
