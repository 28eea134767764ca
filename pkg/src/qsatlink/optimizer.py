"""Bounded derivative-free maximization with seeded multi-start.

Each restart runs scipy's bounded Nelder-Mead in the unit box. Points that
violate an ordering constraint ``x[i] >= x[j] + delta`` are rejected, as
are points where the objective returns ``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize


class NoFeasiblePoint(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    bounds: tuple[tuple[float, float], ...]
    constraints: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        for i, j, delta in self.constraints:
            if delta <= 0:
                raise ValueError("constraint gap must be positive")
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError("constraint refers to a missing dimension")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds], dtype=float)

    def feasible(self, x: Sequence[float]) -> bool:
        if np.any(np.asarray(x) < self.lower) or np.any(np.asarray(x) > self.upper):
            return False
        return all(x[i] >= x[j] + delta for i, j, delta in self.constraints)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_evals: int = 2000
    tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_evals < 10:
            raise ValueError("max_evals must be >= 10")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


@dataclass
class MaximizeResult:
    best_point: np.ndarray
    best_value: float
    evals_used: int
    plateau: bool = False
    trace: list[float] = field(default_factory=list)


def _random_start(space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    lo, hi = space.lower, space.upper
    for _ in range(1000):
        x = lo + rng.random(space.dim) * (hi - lo)
        if space.feasible(x):
            return x
    return lo + rng.random(space.dim) * (hi - lo)


def maximize(objective: Callable[[np.ndarray], float], space: SearchSpace,
             config: OptimizerConfig = OptimizerConfig(),
             x0: Sequence[float] | None = None) -> MaximizeResult:
    """Maximize ``objective`` over ``space``.

    The first restart starts from ``x0`` when given (clipped into the box),
    the rest from seeded uniform draws. Ties keep the earliest restart.
    """
    lo, hi = space.lower, space.upper
    span = hi - lo
    rng = np.random.default_rng(config.seed)
    starts = []
    if x0 is not None:
        starts.append(np.clip(np.asarray(x0, dtype=float), lo, hi))
    while len(starts) < config.restarts:
        starts.append(_random_start(space, rng))

    evals = 0
    seen: set[float] = set()
    best_x, best_f = None, -math.inf
    last_feasible = None
    trace: list[float] = []

    def to_x(u: np.ndarray) -> np.ndarray:
        return np.clip(lo + np.clip(u, 0.0, 1.0) * span, lo, hi)

    def value(u: np.ndarray) -> float:
        nonlocal evals, last_feasible
        evals += 1
        x = to_x(u)
        if not space.feasible(x):
            return math.inf
        f = objective(x)
        if not math.isfinite(f):
            return math.inf
        last_feasible = x
        if len(seen) < 2:
            seen.add(f)
        return -f

    for start in starts:
        u0 = (start - lo) / span
        # simplex edges of 10 % of the box, flipped inward near the upper bound
        simplex = np.tile(u0, (space.dim + 1, 1))
        for k in range(space.dim):
            step = 0.1 if u0[k] + 0.1 <= 1.0 else -0.1
            simplex[k + 1, k] = u0[k] + step
        f0 = value(u0)
        scale = max(1.0, abs(f0)) if math.isfinite(f0) else 1.0
        res = minimize(value, u0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * space.dim,
                       options={"initial_simplex": simplex,
                                "maxfev": max(config.max_evals - 1, 1),
                                "xatol": 1e-7, "fatol": config.tolerance * scale})
        candidates = [(res.fun, res.x), (f0, u0)]
        for fun, u in candidates:
            if math.isfinite(fun) and -fun > best_f:
                best_f, best_x = -fun, to_x(u)
        trace.append(best_f)

    if best_x is None:
        raise NoFeasiblePoint("every evaluated point was infeasible")
    plateau = len(seen) == 1
    if plateau:
        best_x = last_feasible
    return MaximizeResult(best_point=np.asarray(best_x, dtype=float), best_value=best_f,
                          evals_used=evals, plateau=plateau, trace=trace)
