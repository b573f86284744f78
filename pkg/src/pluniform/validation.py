"""Input validation helpers shared by the functional API and the estimators."""
import numpy as np

from .exceptions import InvalidMetric, InvalidTarget
from .surface import MarkedSurface, check_lengths, validate_metric

TARGET_PRESETS = ("uniform", "flat")
GB_TOL = 1e-9


def check_metric_input(X):
    """Accept ``(surface, lengths)`` or any object with ``surface``/``lengths``."""
    if isinstance(X, tuple) and len(X) == 2:
        surface, lengths = X
    elif hasattr(X, "surface") and hasattr(X, "lengths"):
        surface, lengths = X.surface, X.lengths
    else:
        raise TypeError("expected (surface, lengths) or a MetricDocument")
    if not isinstance(surface, MarkedSurface):
        raise TypeError(f"expected a MarkedSurface, got {type(surface).__name__}")
    lengths = check_lengths(surface, lengths)
    bad = validate_metric(surface, lengths)
    if bad:
        raise InvalidMetric(f"face {bad[0]} violates the triangle inequality ({len(bad)} faces total)")
    return surface, lengths


def resolve_target(surface, target):
    """Turn a preset name or an array into a validated target curvature."""
    if isinstance(target, str):
        if target == "uniform":
            return check_target(surface, np.full(surface.n_vertices,
                                                 2 * np.pi * surface.euler_characteristic / surface.n_vertices))
        if target == "flat":
            if surface.euler_characteristic != 0:
                raise InvalidTarget("the 'flat' target needs a torus (chi = 0)")
            return np.zeros(surface.n_vertices)
        raise InvalidTarget(f"unknown target preset {target!r}; choose from {TARGET_PRESETS}")
    return check_target(surface, target)


def check_target(surface, K_star):
    K_star = np.asarray(K_star, dtype=float)
    if K_star.shape != (surface.n_vertices,):
        raise InvalidTarget(f"expected {surface.n_vertices} target curvatures, got shape {K_star.shape}")
    if not np.all(np.isfinite(K_star)):
        raise InvalidTarget("target curvature must be finite")
    if np.any(K_star >= 2 * np.pi):
        v = int(np.argmax(K_star))
        raise InvalidTarget(f"target curvature at vertex {v} is {K_star[v]!r} >= 2*pi")
    defect = K_star.sum() - 2 * np.pi * surface.euler_characteristic
    if abs(defect) > GB_TOL:
        raise InvalidTarget(f"target violates Gauss-Bonnet: sum - 2*pi*chi = {defect:.3e}")
    return K_star


def check_conformal_factor(surface, u, center=True):
    u = np.asarray(u, dtype=float)
    if u.shape != (surface.n_vertices,) or not np.all(np.isfinite(u)):
        raise ValueError(f"conformal factor must be {surface.n_vertices} finite values")
    return u - u.mean() if center else u
