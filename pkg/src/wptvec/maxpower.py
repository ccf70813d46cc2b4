"""Distributed coordinate-flip search for the configuration of maximum total power.

Total power ``x^T H x`` is convex along every coordinate, so some maximiser
lies on a vertex of ``[0, 1]^m``.  ``iterative_max_power`` simulates the
round-based protocol in which one charger per round asks the receivers inside
its communication range for their current field vector and picks the level
(0 or 1) that maximises the power of those receivers.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .model import PhysicalParams, build_quadratic_form, phasor_matrix

UNTIL_CONVERGED = "until-converged"
TRACE_COLUMNS = ("round", "charger", "level", "messages", "total_power_W")
MAX_EXHAUSTIVE_CHARGERS = 20


@dataclass(frozen=True)
class CommunicationRange:
    """Disc radius within which a charger talks to receivers; ``None`` means open."""

    radius: Optional[float] = None

    def __post_init__(self):
        if self.radius is not None and not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"communication radius must be positive, got {self.radius!r}")

    @property
    def is_open(self) -> bool:
        return self.radius is None

    @classmethod
    def limited(cls, radius: float) -> "CommunicationRange":
        return cls(float(radius))

    @classmethod
    def parse(cls, value) -> "CommunicationRange":
        """Accept a range object, ``None``/``"open"``/``inf``, or a radius."""
        if isinstance(value, CommunicationRange):
            return value
        if value is None or (isinstance(value, str) and value.strip().lower() == "open"):
            return OPEN
        radius = float(value)
        return OPEN if math.isinf(radius) else cls(radius)

    def __str__(self):
        return "open" if self.radius is None else repr(self.radius)


OPEN = CommunicationRange()


@dataclass(frozen=True)
class RoundRecord:
    round: int
    charger: int
    level: int
    messages: int
    total_power: float


@dataclass
class SolverResult:
    config: np.ndarray
    trace: List[RoundRecord]
    converged: bool
    initial_config: np.ndarray
    final_power: float
    rounds: int = 0
    total_messages: int = 0
    empty_range_chargers: List[int] = field(default_factory=list)
    initial_power: float = 0.0


def nodes_in_range(deployment, charger_index: int, comm_range) -> np.ndarray:
    """Indices of receivers within ``comm_range`` of the charger (boundary inclusive)."""
    comm_range = CommunicationRange.parse(comm_range)
    if comm_range.is_open:
        return np.arange(deployment.n)
    c = deployment.chargers[charger_index]
    d = np.hypot(*(deployment.receivers - c).T)
    return np.nonzero(d <= comm_range.radius)[0]


def _as_phasors(fields) -> np.ndarray:
    f = np.asarray(fields)
    if np.iscomplexobj(f):
        return f
    f = f.reshape(-1, 2)
    return f[:, 0] + 1j * f[:, 1]


def flip_gain(cached_fields, deployment, config, j: int, a: int, params: PhysicalParams,
              receivers: Optional[Sequence[int]] = None) -> float:
    """Power change of the chosen receivers if charger ``j`` moves to level ``a``.

    ``cached_fields`` holds the current total field at every receiver, as an
    (n, 2) array or complex phasors.  Only the receivers listed in
    ``receivers`` (default: all) are summed, which is what a charger with a
    limited communication range can see.  Cost is linear in that count.
    """
    s = _as_phasors(cached_fields)
    step = a - float(config[j])
    idx = np.arange(deployment.n) if receivers is None else np.asarray(receivers, dtype=int)
    if step == 0 or idx.size == 0:
        return 0.0
    e = phasor_matrix(deployment.chargers[j:j + 1], deployment.receivers[idx], params)[0]
    s = s[idx]
    return float(params.gamma * np.sum(np.abs(s + step * e) ** 2 - np.abs(s) ** 2))


def apply_flip(cached_fields, deployment, config, j: int, a: int, params: PhysicalParams) -> np.ndarray:
    """Updated (n, 2) field array after charger ``j`` moves to level ``a``."""
    s = _as_phasors(cached_fields)
    e = phasor_matrix(deployment.chargers[j:j + 1], deployment.receivers, params)[0]
    s = s + (a - float(config[j])) * e
    return np.stack([s.real, s.imag], axis=1)


def _improvement_floor(total):
    # exact arithmetic would accept any positive gain; floats need a floor
    return 1e-12 * (total + 1.0)


def _best_single_flip(e, gamma, x, s):
    """Gains of flipping each charger, computed against fresh fields ``s``."""
    d = 1.0 - 2.0 * x
    cross = (np.conj(s)[None, :] * e).real.sum(axis=1)
    return gamma * (2.0 * d * cross + (np.abs(e) ** 2).sum(axis=1))


def local_search(e: np.ndarray, gamma: float, x0, rng: np.random.Generator,
                 in_range: Optional[List[np.ndarray]] = None,
                 rounds: Union[int, str] = UNTIL_CONVERGED, schedule: str = "random",
                 record: bool = True):
    """Round loop on a precomputed phasor matrix ``e`` of shape (m, n).

    ``in_range[j]`` lists the receivers charger ``j`` hears from (``None`` for
    open range).  Returns ``(x, trace, converged, rounds, messages)``.
    """
    m, n = e.shape
    x = np.array(x0, dtype=float)
    s = x @ e
    total = gamma * float(np.sum(np.abs(s) ** 2))
    until = rounds == UNTIL_CONVERGED
    if not until and (int(rounds) != rounds or rounds < 0):
        raise ValueError(f"rounds must be a non-negative integer or {UNTIL_CONVERGED!r}")
    patience = int(math.ceil(m * math.log(m) + m)) if m else 0
    trace = []
    messages = 0
    t = 0
    misses = 0
    converged = False
    while True:
        if not until and t >= rounds:
            break
        if until and misses >= patience:
            # certificate sweep over every single flip, from fresh sums
            s = x @ e
            total = gamma * float(np.sum(np.abs(s) ** 2))
            if np.max(_best_single_flip(e, gamma, x, s)) <= _improvement_floor(total):
                converged = True
                break
            misses = 0
        t += 1
        j = int(rng.integers(m)) if schedule == "random" else (t - 1) % m
        idx = None if in_range is None else in_range[j]
        d = 1.0 - 2.0 * x[j]
        if idx is None:
            ej, sj = e[j], s
        else:
            ej, sj = e[j, idx], s[idx]
        gain = gamma * float(np.sum(2.0 * d * (np.conj(sj) * ej).real + np.abs(ej) ** 2))
        count = n if idx is None else len(idx)
        messages += 2 * count
        if count and gain > _improvement_floor(total):
            s = s + d * e[j]
            x[j] = 1.0 - x[j]
            total = gamma * float(np.sum(np.abs(s) ** 2))
            misses = 0
        else:
            misses += 1
        if record:
            trace.append(RoundRecord(t, j, int(x[j]), 2 * count, total))
    if not until:
        s = x @ e
        total = gamma * float(np.sum(np.abs(s) ** 2))
        converged = m == 0 or bool(np.max(_best_single_flip(e, gamma, x, s)) <= _improvement_floor(total))
    return x, trace, converged, t, messages


def iterative_max_power(deployment, params: PhysicalParams, comm_range=OPEN,
                        rounds: Union[int, str] = UNTIL_CONVERGED, seed=None,
                        schedule: str = "random", initial=None, record: bool = True) -> SolverResult:
    """Simulate the distributed MAX-POWER search.

    Starts from a seeded random binary configuration (or ``initial``).  Each
    round a charger is picked uniformly at random (or round-robin with
    ``schedule="round-robin"``), collects the field vectors of the receivers
    in range and switches level only if that strictly raises their power;
    exact ties keep the current level.  A charger with nobody in range keeps
    its level, and the round still counts.

    With open range and ``rounds="until-converged"`` the run stops once a
    full sweep certifies that no single flip raises the total power.  A
    limited range needs a fixed round budget because local decisions can
    oscillate.
    """
    comm_range = CommunicationRange.parse(comm_range)
    if deployment.m < 1:
        raise ValueError("at least one charger is required")
    if rounds == UNTIL_CONVERGED and not comm_range.is_open:
        raise ValueError("until-converged needs open range; give a fixed round budget instead")
    if schedule not in ("random", "round-robin"):
        raise ValueError(f"unknown schedule {schedule!r}")
    rng = np.random.default_rng(seed)
    if initial is None:
        x0 = rng.integers(0, 2, deployment.m).astype(float)
    else:
        x0 = np.asarray(initial, dtype=float).copy()
        if x0.shape != (deployment.m,) or not np.all((x0 == 0) | (x0 == 1)):
            raise ValueError("initial configuration must be a binary vector of length m")
    e = (phasor_matrix(deployment.chargers, deployment.receivers, params)
         if deployment.n else np.zeros((deployment.m, 0), complex))

    in_range = None
    empty = []
    if not comm_range.is_open:
        in_range = [nodes_in_range(deployment, j, comm_range) for j in range(deployment.m)]
        empty = [j for j, idx in enumerate(in_range) if idx.size == 0]
        if empty:
            warnings.warn(f"{len(empty)} of {deployment.m} chargers have no receivers within "
                          f"range {comm_range}; they keep their initial level", stacklevel=2)

    x, trace, converged, t, messages = local_search(
        e, params.gamma, x0, rng, in_range, rounds, schedule, record)
    final = params.gamma * float(np.sum(np.abs(x @ e) ** 2))
    start = params.gamma * float(np.sum(np.abs(x0 @ e) ** 2))
    return SolverResult(x, trace, converged, x0, final, t, messages, empty, start)


def _binary_vertices(m, chunk=1 << 14):
    """All of {0,1}^m in lexicographic order, yielded in blocks."""
    total = 1 << m
    shifts = np.arange(m - 1, -1, -1)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        yield ((codes[:, None] >> shifts) & 1).astype(float)


def min_increment_delta(deployment, params: PhysicalParams) -> float:
    """Smallest nonzero change in total power that a single flip can cause.

    Enumerates every binary configuration and every flip, so ``m <= 20``.
    Returns 0.0 when no flip changes the power at all.
    """
    m = deployment.m
    if m > MAX_EXHAUSTIVE_CHARGERS:
        raise ValueError(f"exhaustive delta needs m <= {MAX_EXHAUSTIVE_CHARGERS}, got {m}")
    if m == 0:
        return 0.0
    h = build_quadratic_form(deployment, params)
    diag = np.diag(h)
    best = math.inf
    for xs in _binary_vertices(m):
        d = 1.0 - 2.0 * xs
        change = np.abs(2.0 * d * (xs @ h) + diag)
        change = change[change > 0]
        if change.size:
            best = min(best, float(change.min()))
    return 0.0 if math.isinf(best) else best


def runtime_bound(n: int, m: int, delta: float) -> float:
    """The pseudo-polynomial round bound ``n m^5 / delta`` (reported, not enforced)."""
    return math.inf if delta <= 0 else n * m ** 5 / delta


def trace_csv(result: SolverResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in result.trace:
        w.writerow([r.round, r.charger, r.level, r.messages, repr(r.total_power)])
    return buf.getvalue()


def write_trace_csv(result: SolverResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_csv(result))


def read_trace_csv(path) -> List[RoundRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RoundRecord(int(r["round"]), int(r["charger"]), int(r["level"]),
                        int(r["messages"]), float(r["total_power_W"])) for r in rows]


__all__ = [
    "CommunicationRange", "OPEN", "RoundRecord", "SolverResult", "TRACE_COLUMNS", "UNTIL_CONVERGED",
    "apply_flip", "flip_gain", "iterative_max_power", "local_search", "min_increment_delta",
    "nodes_in_range", "read_trace_csv", "runtime_bound", "trace_csv", "write_trace_csv",
]
