"""Solvers for the k-minimum power guarantee on binary configurations.

The objective of a configuration is the cumulative power of the ``k``
receivers that harvest least, ``kmin_power``.  ``brute_force_opt`` is exact
for small ``m``; ``greedy``, ``sampling`` and ``fusion`` are the heuristics,
and ``sampling_ext1``/``sampling_ext2`` relax sampling to fractional levels.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deployment import toy_counterexample
from .maxpower import MAX_EXHAUSTIVE_CHARGERS, _binary_vertices, local_search
from .model import PhysicalParams, k_smallest_sum, kmin_power, phasor_matrix

DEFAULT_SIGMA = 30


@dataclass(frozen=True)
class KMinInstance:
    deployment: object
    params: PhysicalParams
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.deployment.n:
            raise ValueError(f"k must satisfy 1 <= k <= n={self.deployment.n}, got {self.k}")

    def phasors(self) -> np.ndarray:
        d = self.deployment
        if d.m == 0:
            return np.zeros((0, d.n), complex)
        return phasor_matrix(d.chargers, d.receivers, self.params)


@dataclass
class HeuristicResult:
    algorithm: str
    config: np.ndarray
    objective: float
    evaluations: int
    k: int
    seed: Optional[int] = None
    sigma: Optional[int] = None

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm, "k": self.k}
        if self.sigma is not None:
            out["sigma"] = self.sigma
        out.update(seed=self.seed, config=[float(v) for v in self.config],
                   objective_W=self.objective, evaluations=self.evaluations)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _finish(name, inst, x, evaluations, seed=None, sigma=None):
    obj = kmin_power(inst.deployment, x, inst.k, inst.params)
    return HeuristicResult(name, x, obj, evaluations, inst.k, seed, sigma)


def brute_force_opt(instance: KMinInstance, max_chargers: int = MAX_EXHAUSTIVE_CHARGERS) -> HeuristicResult:
    """Exhaustive search over {0,1}^m.

    Among exactly tied optima the lexicographically smallest vector wins.
    """
    m = instance.deployment.m
    if m > max_chargers:
        raise ValueError(f"OPT enumerates 2^m configurations and is capped at m <= {max_chargers} "
                         f"(got m={m}); use greedy, sampling or fusion instead")
    e = instance.phasors()
    g = instance.params.gamma
    chunk = max(1, (1 << 22) // max(instance.deployment.n, 1))
    best_val, best_x = -math.inf, None
    for xs in _binary_vertices(m, chunk):
        vals = k_smallest_sum(g * np.abs(xs @ e) ** 2, instance.k)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_x = float(vals[i]), xs[i].copy()
    return _finish("opt", instance, best_x, 1 << m)


def greedy(instance: KMinInstance, seed=None) -> HeuristicResult:
    """One pass over a random charger order from a random start.

    Each charger takes the level whose k-minimum sum is larger; ties turn it on.
    """
    rng = np.random.default_rng(seed)
    e = instance.phasors()
    g, k = instance.params.gamma, instance.k
    m = e.shape[0]
    x = rng.integers(0, 2, m).astype(float)
    s = x @ e
    for j in rng.permutation(m):
        s0 = s - x[j] * e[j]
        s1 = s0 + e[j]
        p0 = k_smallest_sum(g * np.abs(s0) ** 2, k)
        p1 = k_smallest_sum(g * np.abs(s1) ** 2, k)
        x[j] = 1.0 if p0 <= p1 else 0.0
        s = s1 if x[j] else s0
    return _finish("gre", instance, x, 2 * m, seed)


def _distinct_subsets(rng, n, k, sigma):
    total = math.comb(n, k)
    if total <= 200_000:
        # rank -> subset by walking the lexicographic enumeration
        ranks = np.sort(rng.choice(total, size=sigma, replace=False))
        return [_unrank(int(r), n, k) for r in ranks]
    seen, out = set(), []
    while len(out) < sigma:
        sub = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        if sub not in seen:
            seen.add(sub)
            out.append(list(sub))
    return out


def _unrank(rank, n, k):
    """The ``rank``-th k-subset of range(n) in lexicographic order."""
    out, start = [], 0
    for slot in range(k, 0, -1):
        for v in range(start, n):
            c = math.comb(n - v - 1, slot - 1)
            if rank < c:
                out.append(v)
                start = v + 1
                break
            rank -= c
    return out


def _sampling(instance, sigma, seed, mode):
    n, k = instance.deployment.n, instance.k
    if sigma < 1:
        raise ValueError("sigma must be at least 1")
    total = math.comb(n, k)
    if sigma > total:
        warnings.warn(f"sigma={sigma} exceeds the {total} distinct {k}-sets; using {total}", stacklevel=3)
        sigma = total
    rng = np.random.default_rng(seed)
    subset_rng, perm_rng, *search_rngs = rng.spawn(2 + sigma)
    subsets = np.array(_distinct_subsets(subset_rng, n, k, sigma), dtype=int)
    e = instance.phasors()
    g = instance.params.gamma
    m = e.shape[0]

    xs = np.empty((sigma, m))
    evaluations = 0
    for i, sub in enumerate(subsets):
        r = search_rngs[i]
        x0 = r.integers(0, 2, m).astype(float)
        xs[i], _, _, rounds, _ = local_search(e[:, sub], g, x0, r, record=False)
        evaluations += rounds

    esub = e[:, subsets]                        # (m, sigma, k)
    s = np.einsum("im,mik->ik", xs, esub)       # per-sample fields
    for j in perm_rng.permutation(m):
        ej = esub[j]
        s0 = s - xs[:, j, None] * ej
        s1 = s0 + ej
        p0 = g * np.sum(np.abs(s0) ** 2, axis=1)
        p1 = g * np.sum(np.abs(s1) ** 2, axis=1)
        evaluations += 2 * sigma
        off = p1 <= p0
        gain0 = float(np.sum((p0 - p1)[off]))
        gain1 = float(np.sum((p1 - p0)[~off]))
        if mode == "binary":
            level = 0.0 if gain1 <= gain0 else 1.0
        elif mode == "ext1":
            level = extension1_level(gain1, gain0)
        else:
            level = extension2_level(int(np.count_nonzero(p1 >= p0)), sigma)
        s = s0 + level * ej
        xs[:, j] = level
    return xs[0].copy(), evaluations, sigma


def extension1_level(gain1: float, gain0: float) -> float:
    """Level proportional to the charger's share of beneficial power."""
    total = gain1 + gain0
    return 0.0 if total <= 0 else gain1 / total


def extension2_level(beneficial: int, sigma: int) -> float:
    """Fraction of sampled k-sets for which switching the charger on helps."""
    return beneficial / sigma


def sampling(instance: KMinInstance, sigma: int = DEFAULT_SIGMA, seed=None) -> HeuristicResult:
    """Solve MAX-POWER on ``sigma`` random k-sets, then merge the solutions.

    The merge visits chargers in random order; for each it adds up, over the
    samples, how much power switching off (``gain_0``) or on (``gain_1``)
    preserves, and forces the winning level into every sample.  Ties switch
    the charger off.  The objective is reported on the full receiver set.
    """
    x, ev, sigma = _sampling(instance, sigma, seed, "binary")
    return _finish("sam", instance, x, ev, seed, sigma)


def sampling_ext1(instance: KMinInstance, sigma: int = DEFAULT_SIGMA, seed=None) -> HeuristicResult:
    x, ev, sigma = _sampling(instance, sigma, seed, "ext1")
    return _finish("sam-ext1", instance, x, ev, seed, sigma)


def sampling_ext2(instance: KMinInstance, sigma: int = DEFAULT_SIGMA, seed=None) -> HeuristicResult:
    x, ev, sigma = _sampling(instance, sigma, seed, "ext2")
    return _finish("sam-ext2", instance, x, ev, seed, sigma)


def fusion(instance: KMinInstance, seed=None) -> HeuristicResult:
    """Start from each receiver's own best configuration and fuse them.

    Chargers are visited in random order.  For each, every receiver's power
    is evaluated under its own configuration with the charger off and on;
    the level with the larger k-minimum sum is then forced into all ``n``
    configurations (ties switch it off).
    """
    rng = np.random.default_rng(seed)
    n, k = instance.deployment.n, instance.k
    perm_rng, *search_rngs = rng.spawn(1 + n)
    e = instance.phasors()
    g = instance.params.gamma
    m = e.shape[0]

    xs = np.empty((n, m))
    evaluations = 0
    for r in range(n):
        sub_rng = search_rngs[r]
        x0 = sub_rng.integers(0, 2, m).astype(float)
        xs[r], _, _, rounds, _ = local_search(e[:, [r]], g, x0, sub_rng, record=False)
        evaluations += rounds

    s = np.einsum("rm,mr->r", xs, e)
    for j in perm_rng.permutation(m):
        s0 = s - xs[:, j] * e[j]
        s1 = s0 + e[j]
        p0 = k_smallest_sum(g * np.abs(s0) ** 2, k)
        p1 = k_smallest_sum(g * np.abs(s1) ** 2, k)
        evaluations += 2
        if p1 <= p0:
            xs[:, j], s = 0.0, s0
        else:
            xs[:, j], s = 1.0, s1
    return _finish("fus", instance, xs[0].copy(), evaluations, seed)


ALGORITHMS = {
    "opt": lambda inst, seed=None, sigma=DEFAULT_SIGMA: brute_force_opt(inst),
    "gre": lambda inst, seed=None, sigma=DEFAULT_SIGMA: greedy(inst, seed),
    "sam": lambda inst, seed=None, sigma=DEFAULT_SIGMA: sampling(inst, sigma, seed),
    "sam-ext1": lambda inst, seed=None, sigma=DEFAULT_SIGMA: sampling_ext1(inst, sigma, seed),
    "sam-ext2": lambda inst, seed=None, sigma=DEFAULT_SIGMA: sampling_ext2(inst, sigma, seed),
    "fus": lambda inst, seed=None, sigma=DEFAULT_SIGMA: fusion(inst, seed),
}


def solve(algorithm: str, instance: KMinInstance, seed=None, sigma: int = DEFAULT_SIGMA) -> HeuristicResult:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    result = fn(instance, seed=seed, sigma=sigma)
    result.seed = seed
    return result


@dataclass
class CounterexampleReport:
    vertex_powers: dict       # binary config -> per-receiver powers
    best_binary: float
    best_binary_config: tuple
    grid_best: float
    grid_config: tuple
    vertex_on_grid: float     # grid value at (1, 1)

    @property
    def margin(self) -> float:
        return self.grid_best - self.best_binary


def fractional_counterexample_check(step: float = 1e-3) -> CounterexampleReport:
    """Show that fractional levels can beat every binary configuration.

    Two chargers at (0,0), (4,0), receivers at (-3/4,0), (13/4,0),
    lambda = beta = gamma = 1 and k = 1.  A grid search over ``[0, 1]^2``
    finds a better worst-receiver power than any vertex.
    """
    dep = toy_counterexample()
    params = PhysicalParams.unit()
    e = phasor_matrix(dep.chargers, dep.receivers, params)
    vertex_powers = {}
    for cfg in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        vertex_powers[cfg] = tuple(float(v) for v in params.gamma * np.abs(np.array(cfg) @ e) ** 2)
    best_cfg = max(vertex_powers, key=lambda c: (min(vertex_powers[c]), [-v for v in c]))
    count = int(round(1.0 / step)) + 1
    grid = np.linspace(0.0, 1.0, count)
    x1, x2 = grid[:, None, None], grid[None, :, None]
    worst = (params.gamma * np.abs(x1 * e[0] + x2 * e[1]) ** 2).min(axis=2)
    i, j = np.unravel_index(int(np.argmax(worst)), worst.shape)
    return CounterexampleReport(vertex_powers, min(vertex_powers[best_cfg]), best_cfg,
                                float(worst[i, j]), (float(grid[i]), float(grid[j])),
                                float(worst[-1, -1]))


__all__ = [
    "ALGORITHMS", "CounterexampleReport", "DEFAULT_SIGMA", "HeuristicResult", "KMinInstance",
    "brute_force_opt", "extension1_level", "extension2_level", "fractional_counterexample_check",
    "fusion", "greedy", "sampling", "sampling_ext1", "sampling_ext2", "solve",
]
