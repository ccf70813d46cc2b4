"""Metrics and replicated simulation campaigns with normal-approximation CIs."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .deployment import FieldSpec, InfeasibleDeploymentError, generate_random
from .kmin import ALGORITHMS as KMIN_ALGORITHMS, DEFAULT_SIGMA, KMinInstance, solve
from .maxpower import UNTIL_CONVERGED, CommunicationRange, iterative_max_power
from .model import PhysicalParams, receiver_powers, total_power

Z95 = 1.96
ALGORITHMS = ("maxpower", "all-on") + tuple(KMIN_ALGORITHMS)
SWEEPS = ("range", "k", "chargers", "nodes", "algorithm", "rounds", "sigma")
METRICS = ("power_efficiency", "cumulative_power", "message_count", "power_balance")
DERIVED_METRICS = ("power_per_message",)


def power_efficiency(deployment, config, params: PhysicalParams) -> float:
    """Harvested power over power fuelled into the chargers.

    A charger at level ``x`` radiates ``P_C * x^2`` (its field scales with
    ``x``), so on binary configurations the denominator is ``P_C`` times the
    number of chargers switched on.
    """
    if params.charger_power is None:
        raise ValueError("power efficiency needs params.charger_power")
    x = np.asarray(config, dtype=float)
    fuelled = params.charger_power * float(np.sum(x ** 2))
    if fuelled == 0:
        raise ZeroDivisionError("no charger is operating; efficiency is undefined")
    return total_power(deployment, x, params) / fuelled


def power_balance(deployment, config, params: PhysicalParams, method: str = "std") -> float:
    """Spread of per-receiver power: sample standard deviation or ``"range"`` (max - min)."""
    p = receiver_powers(deployment, config, params)
    if p.size < 2:
        return 0.0
    if method == "std":
        return float(np.std(p, ddof=1))
    if method == "range":
        return float(p.max() - p.min())
    raise ValueError(f"unknown balance statistic {method!r}")


@dataclass(frozen=True)
class MetricSet:
    power_efficiency: float
    cumulative_power: float
    message_count: int
    power_balance: float


@dataclass
class CampaignSpec:
    """Inputs of a replicated experiment.

    ``cumulative_power`` is the algorithm's own objective: total power for
    ``maxpower``/``all-on`` and the k-minimum sum for the k-min solvers.
    ``sweep`` names the varied input; every sweep value reuses the same
    replication seeds, so comparisons across sweep values are paired.
    """

    field: FieldSpec = dc_field(default_factory=lambda: FieldSpec(10.0, 10.0))
    chargers: int = 15
    nodes: int = 200
    params: PhysicalParams = dc_field(default_factory=PhysicalParams.from_hardware)
    algorithm: str = "maxpower"
    comm_range: object = "open"
    rounds: object = 90
    schedule: str = "random"
    k: Optional[int] = None
    sigma: int = DEFAULT_SIGMA
    reps: int = 100
    base_seed: int = 0
    sweep: Optional[str] = None
    sweep_values: list = dc_field(default_factory=list)
    balance: str = "std"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.sweep is not None and self.sweep not in SWEEPS:
            raise ValueError(f"unknown sweep variable {self.sweep!r}; choose from {SWEEPS}")
        if self.sweep is None and self.sweep_values:
            raise ValueError("sweep_values given without a sweep variable")
        labels = [str(v) for v in self.sweep_values]
        if len(set(labels)) != len(labels):
            raise ValueError("sweep values must be distinct")
        algos = self.sweep_values if self.sweep == "algorithm" else [self.algorithm]
        for a in algos:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")

    def points(self) -> list:
        return list(self.sweep_values) if self.sweep else [None]

    def at(self, value) -> "CampaignSpec":
        """The single-point spec for one sweep value."""
        if self.sweep is None:
            return self
        key = {"range": "comm_range", "chargers": "chargers", "nodes": "nodes", "k": "k",
               "algorithm": "algorithm", "rounds": "rounds", "sigma": "sigma"}[self.sweep]
        return replace(self, sweep=None, sweep_values=[], **{key: value})


@dataclass
class Aggregate:
    mean: float
    sd: float
    half_width: float
    values: tuple

    @property
    def reps(self) -> int:
        return len(self.values)

    @classmethod
    def of(cls, values) -> "Aggregate":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(math.nan, math.nan, math.nan, ())
        sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        return cls(float(np.mean(v)), sd, Z95 * sd / math.sqrt(v.size), tuple(float(x) for x in v))


@dataclass
class CampaignRow:
    sweep_value: object
    replication: int
    seed: int
    metrics: Optional[MetricSet]
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.metrics is not None


@dataclass
class CampaignResult:
    spec: CampaignSpec
    rows: List[CampaignRow]

    @property
    def failed(self) -> int:
        return sum(not r.ok for r in self.rows)

    def values(self, metric: str, sweep_value=None) -> np.ndarray:
        """Raw per-replication values of one metric at one sweep value (successful reps only).

        Power per message is undefined for replications that sent no
        messages; those are left out.
        """
        out = []
        for r in self.rows:
            if r.ok and str(r.sweep_value) == str(sweep_value):
                out.append(_metric(r.metrics, metric))
        out = np.array(out, dtype=float)
        return out[~np.isnan(out)]

    def summary(self, metric: str) -> Dict[str, Aggregate]:
        return {str(v): Aggregate.of(self.values(metric, v)) for v in self.spec.points()}

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "sweep_value", "replication", "seed", "status", *RAW_COLUMNS])
        for r in self.rows:
            cells = ([_fmt(getattr(r.metrics, f.name)) for f in fields(MetricSet)]
                     if r.ok else [""] * len(RAW_COLUMNS))
            w.writerow([self.spec.sweep or "", _label(r.sweep_value), r.replication, r.seed,
                        "ok" if r.ok else "failed", *cells])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for v in self.spec.points():
            failed = sum(1 for r in self.rows if not r.ok and str(r.sweep_value) == str(v))
            for metric in METRICS + DERIVED_METRICS:
                a = Aggregate.of(self.values(metric, v))
                w.writerow([self.spec.sweep or "", _label(v), metric, a.reps, failed,
                            _fmt(a.mean), _fmt(a.sd), _fmt(a.half_width)])
        return buf.getvalue()

    def write(self, raw_path, aggregate_path) -> None:
        Path(raw_path).write_text(self.raw_csv())
        Path(aggregate_path).write_text(self.aggregate_csv())


RAW_COLUMNS = ("power_efficiency", "cumulative_power_W", "message_count", "power_balance_W")
AGGREGATE_COLUMNS = ("sweep", "sweep_value", "metric", "reps", "failed", "mean", "sd", "ci95_half_width")


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))


def _label(v) -> str:
    return "" if v is None else str(v)


def _metric(ms: MetricSet, name: str) -> float:
    if name == "power_per_message":
        return ms.cumulative_power / ms.message_count if ms.message_count else math.nan
    return getattr(ms, name)


def run_single(spec: CampaignSpec, seed: int) -> MetricSet:
    """One replication of a sweep-free spec."""
    dep_seed = np.random.SeedSequence([seed, 0])
    algo_seed = int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])
    params = spec.params
    dep = generate_random(spec.field, spec.chargers, spec.nodes, params, dep_seed)
    messages = 0
    if spec.algorithm == "maxpower":
        with warnings.catch_warnings():
            # empty in-range sets are routine at short radii
            warnings.simplefilter("ignore")
            res = iterative_max_power(dep, params, CommunicationRange.parse(spec.comm_range),
                                      spec.rounds, algo_seed, spec.schedule, record=False)
        x, objective, messages = res.config, res.final_power, res.total_messages
    elif spec.algorithm == "all-on":
        x = np.ones(dep.m)
        objective = total_power(dep, x, params)
    else:
        if spec.k is None:
            raise ValueError(f"algorithm {spec.algorithm!r} needs k")
        res = solve(spec.algorithm, KMinInstance(dep, params, int(spec.k)), algo_seed, spec.sigma)
        x, objective = res.config, res.objective
    try:
        eff = power_efficiency(dep, x, params)
    except ZeroDivisionError:
        eff = 0.0
    return MetricSet(eff, float(objective), int(messages), power_balance(dep, x, params, spec.balance))


def _task(args):
    spec, value, r, seed = args
    try:
        return CampaignRow(value, r, seed, run_single(spec.at(value), seed))
    except InfeasibleDeploymentError as exc:
        return CampaignRow(value, r, seed, None, str(exc))


def run_campaign(spec: CampaignSpec, workers: int = 1) -> CampaignResult:
    """Run every (sweep value, replication) pair; replication ``r`` uses seed ``base_seed ^ r``.

    Infeasible deployments are kept as failed rows and left out of the
    aggregates.  Results do not depend on ``workers``.
    """
    tasks = [(spec, v, r, spec.base_seed ^ r) for v in spec.points() for r in range(spec.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_task(t) for t in tasks]
    return CampaignResult(spec, rows)


def messages_vs_range(spec: CampaignSpec, workers: int = 1) -> CampaignResult:
    """Range sweep of the distributed search; read ``summary("message_count")``."""
    if spec.sweep != "range" or spec.algorithm != "maxpower":
        raise ValueError("messages_vs_range needs a maxpower spec swept over 'range'")
    return run_campaign(spec, workers)


def power_per_message(spec: CampaignSpec, workers: int = 1) -> CampaignResult:
    """Range sweep; read ``summary("power_per_message")`` (final power / messages per replication)."""
    return messages_vs_range(spec, workers)


# -- spec files -------------------------------------------------------------

def params_from_dict(d: Optional[dict]) -> PhysicalParams:
    if not d:
        return PhysicalParams.from_hardware()
    d = dict(d)
    if "beta" in d or "gamma" in d:
        return PhysicalParams(**d)
    return PhysicalParams.from_hardware(**d)


def spec_from_dict(d: dict) -> CampaignSpec:
    d = dict(d)
    known = {f.name for f in fields(CampaignSpec)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown campaign keys: {sorted(unknown)}")
    if "field" in d:
        d["field"] = FieldSpec(**d["field"])
    d["params"] = params_from_dict(d.get("params"))
    return CampaignSpec(**d)


def load_campaign_spec(path) -> CampaignSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def spec_to_dict(spec: CampaignSpec) -> dict:
    out = {f.name: getattr(spec, f.name) for f in fields(CampaignSpec)}
    f = spec.field
    out["field"] = {"width": f.width, "height": f.height}
    if f.x0 or f.y0:
        out["field"].update(x0=f.x0, y0=f.y0)
    out["params"] = spec.params.to_dict()
    return out


__all__ = [
    "Aggregate", "CampaignResult", "CampaignRow", "CampaignSpec", "METRICS", "MetricSet", "UNTIL_CONVERGED",
    "load_campaign_spec", "messages_vs_range", "power_balance", "power_efficiency", "power_per_message",
    "run_campaign", "run_single", "spec_from_dict", "spec_to_dict",
]
