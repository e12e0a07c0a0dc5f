"""Downhill simplex minimization (Nelder and Mead, 1965)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class OptimizerError(RuntimeError):
    def __init__(self, message, point=None, partial=None):
        super().__init__(message)
        self.point = point
        self.partial = partial


@dataclass(frozen=True)
class NelderMeadConfig:
    alpha: float = 1.0  # reflection
    gamma: float = 2.0  # expansion
    beta: float = 0.5  # contraction
    sigma: float = 0.5  # shrink
    initial_step: float | Sequence[float] = 0.1
    ftol: float = 1e-8
    xtol: float | None = None
    max_iter: int = 300
    restarts: int = 1

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 1 and 0 < self.beta < 1 and 0 < self.sigma < 1):
            raise ValueError("need alpha > 0, gamma > 1, 0 < beta < 1, 0 < sigma < 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class NelderMeadResult:
    x: np.ndarray
    f: float
    converged: bool
    nit: int
    nfev: int
    restarts_used: int
    # (evaluation index, point, value) for every objective call
    history: list[tuple[int, np.ndarray, float]] = field(default_factory=list, repr=False)


def nelder_mead(objective: Callable[[np.ndarray], float], x0, cfg: NelderMeadConfig | None = None
                ) -> NelderMeadResult:
    """Minimize ``objective`` from ``x0``.

    Stops when the spread of simplex values drops below ``cfg.ftol`` (and, if set,
    the simplex diameter below ``cfg.xtol``) or after ``cfg.max_iter`` iterations.
    Hitting the iteration cap triggers up to ``cfg.restarts`` fresh simplices
    around the best point found so far.
    """
    cfg = cfg or NelderMeadConfig()
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise OptimizerError("starting point is not finite", x0)
    history: list[tuple[int, np.ndarray, float]] = []

    def f(x):
        val = float(objective(x))
        history.append((len(history), x.copy(), val))
        if not math.isfinite(val):
            raise OptimizerError(f"objective returned {val}", x.copy(),
                                 NelderMeadResult(x.copy(), val, False, 0, len(history), 0, history))
        return val

    x_best, f_best = x0, None
    nit_total = 0
    restarts_used = 0
    converged = False
    for attempt in range(cfg.restarts + 1):
        if attempt:
            restarts_used += 1
        x_best, f_best, nit, converged = _run_simplex(f, x_best, cfg)
        nit_total += nit
        if converged:
            break
    return NelderMeadResult(x_best, f_best, converged, nit_total, len(history), restarts_used, history)


def _run_simplex(f, x0, cfg):
    n = x0.size
    steps = np.broadcast_to(np.asarray(cfg.initial_step, dtype=float), (n,))
    simplex = np.vstack([x0] + [x0 + steps[i] * np.eye(n)[i] for i in range(n)])
    values = np.array([f(x) for x in simplex])

    for it in range(1, cfg.max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if _done(simplex, values, cfg):
            return simplex[0], values[0], it - 1, True

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + cfg.alpha * (centroid - worst)
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + cfg.gamma * (xr - centroid)
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + cfg.beta * (xr - centroid)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = centroid + cfg.beta * (worst - centroid)
                fc = f(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + cfg.sigma * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])

    order = np.argsort(values, kind="stable")
    simplex, values = simplex[order], values[order]
    return simplex[0], values[0], cfg.max_iter, _done(simplex, values, cfg)


def _done(simplex, values, cfg) -> bool:
    if values[-1] - values[0] >= cfg.ftol:
        return False
    if cfg.xtol is not None:
        return float(np.max(np.abs(simplex[1:] - simplex[0]))) < cfg.xtol
    return True
