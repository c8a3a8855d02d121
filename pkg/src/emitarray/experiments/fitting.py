"""Finite-size threshold fits and delay-line scaling fits."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

SCALING_FORMS = ("sqrt", "linear")


@dataclass
class FitResult:
    kind: str  # "threshold" or "scaling"
    params: Dict[str, float]
    residual: float  # root-mean-square of the (weighted) residuals
    form: str = ""
    factor: float = 1.0  # n_e (sqrt form) or m (linear form)
    n_points: int = 0
    meta: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(**d)


# -- threshold ------------------------------------------------------------------


def threshold_model(p, d, alpha, beta, gamma, mu, nu):
    x = (np.asarray(p, float) - mu) * np.asarray(d, float) ** (1.0 / nu)
    return alpha + beta * x + gamma * x * x


def _has_crossing(p: np.ndarray, d: np.ndarray, pbar: np.ndarray) -> bool:
    """Smallest and largest distance swap order between the low and high ends of the sweep."""
    dmin, dmax = d.min(), d.max()
    common = sorted(set(p[d == dmin]) & set(p[d == dmax]))
    if len(common) < 2:
        return False

    def gap(pp):
        a = pbar[(d == dmax) & (p == pp)].mean()
        b = pbar[(d == dmin) & (p == pp)].mean()
        return a - b

    return gap(common[0]) < 0 < gap(common[-1])


def fit_threshold(
    p: Sequence[float],
    d: Sequence[float],
    pbar: Sequence[float],
    sigma: Optional[Sequence[float]] = None,
    mu_grid: int = 81,
    nu_grid: int = 41,
) -> FitResult:
    """Least-squares fit of the quadratic finite-size ansatz.

    A coarse grid over ``(mu, nu)`` with the linear ``(alpha, beta, gamma)``
    subproblem solved exactly provides the start point for a bounded local
    refinement of all five parameters.
    """
    p = np.asarray(p, float)
    d = np.asarray(d, float)
    y = np.asarray(pbar, float)
    w = np.ones_like(y) if sigma is None else 1.0 / np.maximum(np.asarray(sigma, float), 1e-12)
    if len(set(d)) < 3 or len(set(p)) < 4:
        raise ValueError("threshold fit needs at least 3 distances and 4 noise values")
    if not _has_crossing(p, d, y):
        raise ValueError("curves for the smallest and largest distance do not cross inside the sweep")
    lo, hi = p.min(), p.max()

    best = None
    for nu in np.geomspace(0.4, 4.0, nu_grid):
        for mu in np.linspace(lo, hi, mu_grid):
            x = (p - mu) * d ** (1 / nu)
            A = np.stack([np.ones_like(x), x, x * x], axis=1) * w[:, None]
            coef, *_ = np.linalg.lstsq(A, y * w, rcond=None)
            r = float(np.sum((A @ coef - y * w) ** 2))
            if best is None or r < best[0]:
                best = (r, [*coef, mu, nu])

    def resid(theta):
        return (threshold_model(p, d, *theta) - y) * w

    x0 = np.array(best[1])
    lower = [-np.inf, -np.inf, -np.inf, lo, 0.05]
    upper = [np.inf, np.inf, np.inf, hi, 20.0]
    sol = least_squares(resid, x0, bounds=(lower, upper), x_scale="jac")
    theta = sol.x if np.sum(sol.fun**2) <= best[0] else x0
    names = ("alpha", "beta", "gamma", "mu", "nu")
    rms = float(np.sqrt(np.mean(resid(theta) ** 2)))
    return FitResult("threshold", dict(zip(names, map(float, theta))), rms, n_points=len(y))


def synthetic_threshold_data(
    params: Sequence[float], ps: Sequence[float], ds: Sequence[float], noise: float, rng: np.random.Generator
):
    """Ansatz values with multiplicative Gaussian noise of relative size ``noise``."""
    P, D = np.meshgrid(np.asarray(ps, float), np.asarray(ds, float))
    y = threshold_model(P.ravel(), D.ravel(), *params)
    return P.ravel(), D.ravel(), y * (1 + noise * rng.standard_normal(y.shape))


# -- delay-line scaling -----------------------------------------------------------


def scaling_abscissa(eta, form: str, factor: float) -> np.ndarray:
    eta = np.asarray(eta, float)
    if form == "sqrt":
        return np.sqrt(factor / eta)
    if form == "linear":
        return 1.0 / (factor * eta)
    raise ValueError(f"unknown scaling form {form!r}")


def fit_scaling(eta: Sequence[float], pstar: Sequence[float], form: str = "sqrt", factor: float = 1.0) -> FitResult:
    """Linear regression of ``ln(1/p*)`` on ``sqrt(n_e/eta)`` or ``1/(m eta)``.

    ``factor`` is ``n_e`` for the square-root form and ``m`` for the linear form.
    """
    eta = np.asarray(eta, float)
    pstar = np.asarray(pstar, float)
    if len(eta) < 3:
        raise ValueError("scaling fit needs at least 3 points")
    if np.any(pstar <= 0) or np.any(pstar >= 1):
        raise ValueError("optimal logical error rates must lie in (0, 1)")
    x = scaling_abscissa(eta, form, factor)
    y = np.log(1.0 / pstar)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (c1, c2), *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ np.array([c1, c2]) - y) ** 2)))
    return FitResult("scaling", {"c1": float(c1), "c2": float(c2)}, rms, form=form, factor=float(factor), n_points=len(y))


def predict_log_inverse(fit: FitResult, eta: float) -> float:
    """Predicted ``ln(1/p*)`` at ``eta``."""
    x = float(scaling_abscissa(eta, fit.form, fit.factor))
    return fit.params["c1"] * x + fit.params["c2"]


def requisite_eta(fit: FitResult, target: float) -> float:
    """Largest delay-line rate reaching ``p* = target`` under a scaling fit."""
    c1, c2 = fit.params["c1"], fit.params["c2"]
    if c1 <= 0:
        raise ValueError("scaling slope must be positive")
    y = math.log(1.0 / target)
    if y <= c2:
        raise ValueError(f"target {target} is at or above exp(-c2); any rate reaches it")
    if fit.form == "sqrt":
        return fit.factor * (c1 / (y - c2)) ** 2
    if fit.form == "linear":
        return c1 / (fit.factor * (y - c2))
    raise ValueError(f"unknown scaling form {fit.form!r}")
