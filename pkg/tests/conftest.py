"""Session-scoped experiment grids shared by the harness and acceptance tests.

Building the comparison grids is the dominant cost of the suite, so the
runs are computed once per session.  Every run is deterministic in its
seed, which keeps the assertions stable across machines.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from noisy_sqp import (
    PROBLEM_NAMES,
    NoiseSpec,
    SolveResult,
    SolverConfig,
    get_problem,
    reference_solution,
    solve,
)

EPS_LEVELS = (1e-5, 1e-3, 1e-1)
SEEDS = tuple(range(10))
MISEST_MULTIPLIERS = (1.0, 1e-3, 1e3)


@dataclass
class GridEntry:
    enabled: SolveResult
    disabled: SolveResult
    enabled_dists: np.ndarray   # per-iterate distances plus the final point
    disabled_dists: np.ndarray


def _dists(result: SolveResult, x_star) -> np.ndarray:
    tail = float(np.linalg.norm(result.x - x_star))
    return np.array([r.dist_to_ref for r in result.trace] + [tail])


@pytest.fixture(scope="session")
def experiment_grid():
    """Relaxation on/off runs: 3 problems x 3 noise levels x 10 seeds, 1000 iterations."""
    runs = {}
    timings = {}
    for eps in EPS_LEVELS:
        t0 = time.perf_counter()
        for name in PROBLEM_NAMES:
            p = get_problem(name)
            ref = reference_solution(name)
            for seed in SEEDS:
                spec = NoiseSpec(eps, eps, seed=seed)
                est = spec.bounds(p.n, p.m)
                enabled = solve(
                    p, spec,
                    SolverConfig(max_iters=1000, termination_enabled=False).with_estimates(est),
                    x_ref=ref.x_star,
                )
                disabled = solve(
                    p, spec,
                    SolverConfig(max_iters=1000, termination_enabled=False,
                                 relaxation_enabled=False).with_estimates(est),
                    x_ref=ref.x_star,
                )
                runs[(name, eps, seed)] = GridEntry(
                    enabled=enabled,
                    disabled=disabled,
                    enabled_dists=_dists(enabled, ref.x_star),
                    disabled_dists=_dists(disabled, ref.x_star),
                )
        timings[eps] = time.perf_counter() - t0
    return {"runs": runs, "timings": timings}


@pytest.fixture(scope="session")
def misestimation_grid():
    """Estimate-scaling runs at true eps = 1e-5 with the noisy stop test active."""
    runs = {}
    for name in PROBLEM_NAMES:
        p = get_problem(name)
        ref = reference_solution(name)
        for seed in SEEDS:
            spec = NoiseSpec(1e-5, 1e-5, seed=seed)
            for mult in MISEST_MULTIPLIERS:
                cfg = SolverConfig(max_iters=5000).with_estimates(spec.bounds(p.n, p.m), mult)
                result = solve(p, spec, cfg, x_ref=ref.x_star)
                runs[(name, seed, mult)] = (result, _dists(result, ref.x_star))
    return runs
