"""Charger/receiver placements: validation, random generation, JSON files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .model import PhysicalParams, Point2D


class InfeasibleDeploymentError(RuntimeError):
    """Rejection sampling ran out of attempts."""


class DeploymentFormatError(ValueError):
    """A deployment or configuration file does not follow the schema."""


@dataclass(frozen=True)
class FieldSpec:
    width: float
    height: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"field width and height must be positive, got {self.width} x {self.height}")

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return ((p[:, 0] >= self.x0) & (p[:, 0] <= self.x0 + self.width)
                & (p[:, 1] >= self.y0) & (p[:, 1] <= self.y0 + self.height))


def _frozen_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    arr = arr.reshape(0, 2) if arr.size == 0 else arr.reshape(-1, 2).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Deployment:
    """Immutable placement of ``m`` chargers and ``n`` receivers.

    ``wavelength``, ``beta`` and ``gamma`` are optional metadata carried by
    deployment files so that a file fully determines how it is evaluated.
    """

    chargers: np.ndarray
    receivers: np.ndarray
    field: FieldSpec
    wavelength: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "chargers", _frozen_points(self.chargers))
        object.__setattr__(self, "receivers", _frozen_points(self.receivers))

    @property
    def m(self) -> int:
        return self.chargers.shape[0]

    @property
    def n(self) -> int:
        return self.receivers.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return (self.field == other.field
                and self.wavelength == other.wavelength
                and self.beta == other.beta and self.gamma == other.gamma
                and np.array_equal(self.chargers, other.chargers)
                and np.array_equal(self.receivers, other.receivers))

    __hash__ = None

    def with_receivers(self, idx) -> "Deployment":
        return Deployment(self.chargers, self.receivers[np.asarray(idx, dtype=int)], self.field,
                          self.wavelength, self.beta, self.gamma)

    def params(self, default: Optional[PhysicalParams] = None) -> PhysicalParams:
        """Physical parameters implied by the file metadata.

        Hardware-derived defaults are used for anything the deployment does
        not specify.
        """
        base = default or PhysicalParams.from_hardware()
        if self.wavelength is not None and self.wavelength != base.wavelength:
            base = base.with_wavelength(self.wavelength)
        if self.beta is None and self.gamma is None:
            return base
        return PhysicalParams(base.wavelength,
                              self.beta if self.beta is not None else base.beta,
                              self.gamma if self.gamma is not None else base.gamma,
                              charger_power=base.charger_power)


@dataclass(frozen=True)
class Violation:
    kind: str  # charger-receiver | receiver-receiver | charger-outside | receiver-outside
    first: int
    second: Optional[int]
    distance: float

    def __str__(self):
        if self.kind == "charger-receiver":
            return f"charger {self.first} - receiver {self.second}: distance {self.distance:.6g}"
        if self.kind == "receiver-receiver":
            return f"receiver {self.first} - receiver {self.second}: distance {self.distance:.6g}"
        return f"{self.kind.split('-')[0]} {self.first} lies outside the field"


def validate_placement(deployment: Deployment, params: PhysicalParams) -> List[Violation]:
    """Report every pair breaking the far-field placement rules.

    Chargers must be at least one wavelength from every receiver and
    receivers at least ``lambda / (2 pi)`` from each other.  Points outside
    the field rectangle are reported too.  An empty list means the placement
    is valid.
    """
    lam = params.wavelength
    out = []
    c, r = deployment.chargers, deployment.receivers
    if deployment.m and deployment.n:
        d = np.hypot(c[:, None, 0] - r[None, :, 0], c[:, None, 1] - r[None, :, 1])
        for i, j in zip(*np.nonzero(d < lam)):
            out.append(Violation("charger-receiver", int(i), int(j), float(d[i, j])))
    if deployment.n > 1:
        d = np.hypot(r[:, None, 0] - r[None, :, 0], r[:, None, 1] - r[None, :, 1])
        iu = np.triu_indices(deployment.n, k=1)
        close = d[iu] < lam / (2 * math.pi)
        for i, j in zip(iu[0][close], iu[1][close]):
            out.append(Violation("receiver-receiver", int(i), int(j), float(d[i, j])))
    for i in np.nonzero(~deployment.field.contains(c))[0]:
        out.append(Violation("charger-outside", int(i), None, math.nan))
    for i in np.nonzero(~deployment.field.contains(r))[0]:
        out.append(Violation("receiver-outside", int(i), None, math.nan))
    return out


def generate_random(field: FieldSpec, m: int, n: int, params: PhysicalParams, seed=None,
                    max_attempts: Optional[int] = None) -> Deployment:
    """Uniform random placement, resampling single points that break the rules.

    Chargers are drawn first; each receiver is then redrawn until it keeps
    ``lambda`` from all chargers and ``lambda / (2 pi)`` from the receivers
    already placed.  This is uniform per point given the earlier points, which
    approximates (but is not exactly) a jointly uniform valid placement.
    """
    if m < 0 or n < 0:
        raise ValueError("m and n must be non-negative")
    rng = np.random.default_rng(seed)
    if max_attempts is None:
        max_attempts = 10 * (m + n) * 1000
    lam = params.wavelength
    min_rr = lam / (2 * math.pi)
    lo = np.array([field.x0, field.y0])
    span = np.array([field.width, field.height])

    chargers = lo + span * rng.random((m, 2))
    attempts = m
    receivers = np.empty((n, 2))
    for i in range(n):
        while True:
            if attempts >= max_attempts:
                raise InfeasibleDeploymentError(
                    f"could not place receiver {i} of {n} after {attempts} draws")
            attempts += 1
            p = lo + span * rng.random(2)
            if m and np.min(np.hypot(*(chargers - p).T)) < lam:
                continue
            if i and np.min(np.hypot(*(receivers[:i] - p).T)) < min_rr:
                continue
            receivers[i] = p
            break
    return Deployment(chargers, receivers, field, wavelength=lam)


# -- files ---------------------------------------------------------------

def to_dict(deployment: Deployment) -> dict:
    f = deployment.field
    out = {"field": {"width": float(f.width), "height": float(f.height)}}
    if f.x0 or f.y0:
        out["field"].update(x0=float(f.x0), y0=float(f.y0))
    for key in ("wavelength", "beta", "gamma"):
        value = getattr(deployment, key)
        if value is not None:
            out[key] = float(value)
    out["chargers"] = deployment.chargers.tolist()
    out["receivers"] = deployment.receivers.tolist()
    return out


def dumps(deployment: Deployment) -> str:
    # float repr is the shortest string that parses back to the same double
    return json.dumps(to_dict(deployment), indent=1) + "\n"


def save(deployment: Deployment, path) -> None:
    Path(path).write_text(dumps(deployment))


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DeploymentFormatError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _point_list(data, key):
    items = data.get(key)
    if not isinstance(items, list):
        raise DeploymentFormatError(f"'{key}': expected a list of [x, y] pairs")
    pts = []
    for i, item in enumerate(items):
        if not isinstance(item, list) or len(item) != 2:
            raise DeploymentFormatError(f"'{key}'[{i}]: expected [x, y], got {item!r}")
        pts.append([_number(v, f"'{key}'[{i}]") for v in item])
    return pts


def from_dict(data) -> Deployment:
    if not isinstance(data, dict):
        raise DeploymentFormatError("top level must be a JSON object")
    known = {"field", "wavelength", "beta", "gamma", "chargers", "receivers", "config"}
    unknown = set(data) - known
    if unknown:
        raise DeploymentFormatError(f"unknown keys: {sorted(unknown)}")
    f = data.get("field")
    if not isinstance(f, dict) or "width" not in f or "height" not in f:
        raise DeploymentFormatError("'field': expected an object with width and height")
    try:
        fs = FieldSpec(*(_number(f.get(k, 0.0), f"'field'.{k}") for k in ("width", "height", "x0", "y0")))
    except ValueError as exc:
        raise DeploymentFormatError(f"'field': {exc}") from None
    meta = {}
    for key in ("wavelength", "beta", "gamma"):
        if key in data:
            meta[key] = _number(data[key], f"'{key}'")
            if meta[key] <= 0:
                raise DeploymentFormatError(f"'{key}': must be positive")
    dep = Deployment(_point_list(data, "chargers"), _point_list(data, "receivers"), fs, **meta)
    if "config" in data:
        config_from_obj(data["config"], dep.m)
    return dep


def _parse_json(text, path):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeploymentFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load(path) -> Deployment:
    data = _parse_json(Path(path).read_text(), path)
    try:
        return from_dict(data)
    except DeploymentFormatError as exc:
        raise DeploymentFormatError(f"{path}: {exc}") from None


def config_from_obj(obj, m: Optional[int] = None) -> np.ndarray:
    """Validate a configuration given as a list of levels or ``{"config": [...]}``."""
    if isinstance(obj, dict):
        if "config" not in obj:
            raise DeploymentFormatError("expected a 'config' key")
        obj = obj["config"]
    if not isinstance(obj, list):
        raise DeploymentFormatError("'config': expected a list of levels")
    levels = [_number(v, f"'config'[{i}]") for i, v in enumerate(obj)]
    for i, v in enumerate(levels):
        if not 0.0 <= v <= 1.0:
            raise DeploymentFormatError(f"'config'[{i}]: level {v!r} outside [0, 1]")
    if m is not None and len(levels) != m:
        raise DeploymentFormatError(f"'config': {len(levels)} levels for {m} chargers")
    return np.array(levels, dtype=float)


def load_config(path, m: Optional[int] = None) -> np.ndarray:
    return config_from_obj(_parse_json(Path(path).read_text(), path), m)


# -- hand-worked instances -------------------------------------------------

def toy_superposition() -> Deployment:
    """Two chargers at (0,0), (2,0); receivers at (1,0) and (5/4,0); lambda = beta = gamma = 1."""
    return Deployment([[0.0, 0.0], [2.0, 0.0]], [[1.0, 0.0], [1.25, 0.0]],
                      FieldSpec(2.0, 1.0), wavelength=1.0, beta=1.0, gamma=1.0)


def toy_counterexample() -> Deployment:
    """Chargers (0,0), (4,0); receivers (-3/4,0), (13/4,0); lambda = beta = gamma = 1."""
    return Deployment([[0.0, 0.0], [4.0, 0.0]], [[-0.75, 0.0], [3.25, 0.0]],
                      FieldSpec(5.0, 1.0, x0=-1.0), wavelength=1.0, beta=1.0, gamma=1.0)


__all__ = [
    "Deployment", "DeploymentFormatError", "FieldSpec", "InfeasibleDeploymentError", "Point2D",
    "Violation", "config_from_obj", "dumps", "from_dict", "generate_random", "load", "load_config",
    "save", "to_dict", "toy_counterexample", "toy_superposition", "validate_placement",
]
