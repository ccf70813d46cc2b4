"""Vector (phasor superposition) charging model.

Every charger at full power creates a 2-D field vector at a receiver::

    E(C, R) = beta / d * [cos(2 pi d / lam), sin(2 pi d / lam)]

Fields from all chargers add as vectors and a receiver harvests
``gamma * |sum|^2``.  Internally the field vectors are handled as complex
phasors ``u + i v``; the public functions that return a single field vector
give a length-2 real array ``[u, v]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

FREE_SPACE_IMPEDANCE = 376.73


class PlacementError(ValueError):
    """A charger/receiver pair is closer than the far-field bound allows."""


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class PhysicalParams:
    """Constants of the charging model.

    ``beta`` scales the field amplitude and ``gamma`` converts squared field
    into harvested watts.  The optional hardware quantities are only kept for
    reference and for the efficiency metric, which needs the charger output
    power.
    """

    wavelength: float
    beta: float
    gamma: float
    impedance: Optional[float] = None
    charger_gain: Optional[float] = None
    charger_power: Optional[float] = None
    receiver_gain: Optional[float] = None

    def __post_init__(self):
        for name in ("wavelength", "beta", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        hw = (self.impedance, self.charger_gain, self.charger_power, self.receiver_gain)
        if all(v is not None for v in hw):
            beta, gamma = _derive(self.wavelength, *hw)
            if not (math.isclose(beta, self.beta, rel_tol=1e-12)
                    and math.isclose(gamma, self.gamma, rel_tol=1e-12)):
                raise ValueError("beta/gamma inconsistent with the supplied hardware inputs")

    @classmethod
    def from_hardware(cls, wavelength: float = 0.29, charger_power: float = 2.0,
                      charger_gain: float = 10 ** (2 / 10), receiver_gain: float = 10 ** (1 / 10),
                      impedance: float = FREE_SPACE_IMPEDANCE) -> "PhysicalParams":
        """Derive beta and gamma so one charger alone reproduces the Friis power.

        The defaults are a 2 W charger with 2 dBi gain, a 1 dBi receiver and a
        29 cm wavelength.
        """
        beta, gamma = _derive(wavelength, impedance, charger_gain, charger_power, receiver_gain)
        return cls(wavelength, beta, gamma, impedance, charger_gain, charger_power, receiver_gain)

    @classmethod
    def unit(cls) -> "PhysicalParams":
        """lambda = beta = gamma = 1, the setting of the hand-worked examples."""
        return cls(1.0, 1.0, 1.0)

    def with_wavelength(self, wavelength: float) -> "PhysicalParams":
        if self.charger_power is not None and self.impedance is not None:
            return PhysicalParams.from_hardware(wavelength, self.charger_power, self.charger_gain,
                                                self.receiver_gain, self.impedance)
        return PhysicalParams(wavelength, self.beta, self.gamma)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _derive(wavelength, impedance, charger_gain, charger_power, receiver_gain):
    beta = math.sqrt(impedance * charger_gain * charger_power / (4 * math.pi))
    gamma = receiver_gain * wavelength ** 2 / (4 * math.pi * impedance)
    return beta, gamma


def _points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    return arr.reshape(-1, 2)


def _phasor(distance, params: PhysicalParams):
    phase = 2 * np.pi * distance / params.wavelength
    return params.beta / distance * (np.cos(phase) + 1j * np.sin(phase))


def _check_distances(d, params, strict):
    if np.any(d == 0):
        raise PlacementError("charger and receiver coincide (distance 0)")
    if strict and np.any(d < params.wavelength):
        raise PlacementError(
            f"charger-receiver distance {float(np.min(d)):.6g} is below the wavelength "
            f"{params.wavelength:.6g} (near field)")


def phasor_matrix(chargers, receivers, params: PhysicalParams, strict: bool = False) -> np.ndarray:
    """Complex (m, n) matrix of full-power fields ``E(C_j, R_i)``."""
    c = _points(chargers)
    r = _points(receivers)
    d = np.hypot(c[:, None, 0] - r[None, :, 0], c[:, None, 1] - r[None, :, 1])
    _check_distances(d, params, strict)
    return _phasor(d, params)


def efield(charger_pos, level: float, receiver_pos, params: PhysicalParams,
           strict: bool = False) -> np.ndarray:
    """Field vector ``[u, v]`` created by one charger operating at ``level``.

    A zero distance always raises :class:`PlacementError`; distances below the
    wavelength only raise when ``strict`` is set.
    """
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"operation level must lie in [0, 1], got {level!r}")
    d = math.dist(tuple(charger_pos), tuple(receiver_pos))
    _check_distances(np.array([d]), params, strict)
    e = level * _phasor(d, params)
    return np.array([e.real, e.imag])


def _check_config(deployment, config) -> np.ndarray:
    x = np.asarray(config, dtype=float).reshape(-1)
    if x.shape[0] != deployment.m:
        raise ValueError(f"configuration has {x.shape[0]} levels but there are {deployment.m} chargers")
    if np.any((x < 0) | (x > 1)) or not np.all(np.isfinite(x)):
        raise ValueError("configuration levels must lie in [0, 1]")
    return x


def efield_total(deployment, config, receiver_pos, params: PhysicalParams) -> np.ndarray:
    """Vector sum of all chargers' fields at ``receiver_pos``."""
    x = _check_config(deployment, config)
    if deployment.m == 0:
        return np.zeros(2)
    e = x @ phasor_matrix(deployment.chargers, [receiver_pos], params)[:, 0]
    return np.array([e.real, e.imag])


def received_power(deployment, config, receiver_pos, params: PhysicalParams) -> float:
    u, v = efield_total(deployment, config, receiver_pos, params)
    return float(params.gamma * (u * u + v * v))


def receiver_powers(deployment, config, params: PhysicalParams) -> np.ndarray:
    """Power harvested by every receiver of the deployment, in receiver order."""
    x = _check_config(deployment, config)
    if deployment.m == 0 or deployment.n == 0:
        return np.zeros(deployment.n)
    fields = x @ phasor_matrix(deployment.chargers, deployment.receivers, params)
    return params.gamma * np.abs(fields) ** 2


def total_power(deployment, config, params: PhysicalParams) -> float:
    return float(np.sum(receiver_powers(deployment, config, params)))


def k_smallest_sum(powers, k: int) -> float:
    """Sum of the ``k`` smallest entries, i.e. the worst cumulative power of a k-set."""
    powers = np.asarray(powers, dtype=float)
    if not 1 <= k <= powers.shape[-1]:
        raise ValueError(f"k must satisfy 1 <= k <= {powers.shape[-1]}, got {k}")
    return np.sort(powers, axis=-1)[..., :k].sum(axis=-1)


def kmin_power(deployment, config, k: int, params: PhysicalParams) -> float:
    """Minimum cumulative power over all k-subsets of receivers."""
    if not 1 <= k <= deployment.n:
        raise ValueError(f"k must satisfy 1 <= k <= n={deployment.n}, got {k}")
    return float(k_smallest_sum(receiver_powers(deployment, config, params), k))


def build_quadratic_form(deployment, params: PhysicalParams) -> np.ndarray:
    """Symmetric PSD matrix ``H`` with total power ``x^T H x``.

    Each receiver contributes ``Q^T Q`` where the columns of the 2 x m matrix
    ``Q`` are ``sqrt(gamma) * E(C_j, R)``.
    """
    m = deployment.m
    if m == 0:
        return np.zeros((0, 0))
    if deployment.n == 0:
        return np.zeros((m, m))
    e = phasor_matrix(deployment.chargers, deployment.receivers, params)
    # rows: (u, v) components of every receiver stacked, columns: chargers
    q = math.sqrt(params.gamma) * np.concatenate([e.real.T, e.imag.T], axis=0)
    h = q.T @ q
    return 0.5 * (h + h.T)


def eval_quadratic(h, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ np.asarray(h) @ x)


def scalar_model_power(deployment, config, receiver_pos, params: PhysicalParams) -> float:
    """Friis-style baseline: per-charger powers simply add, phases ignored."""
    x = _check_config(deployment, config)
    if deployment.m == 0:
        return 0.0
    e = phasor_matrix(deployment.chargers, [receiver_pos], params)[:, 0]
    return float(params.gamma * np.sum(x ** 2 * np.abs(e) ** 2))


def power_upper_bound(m: int, n: int, params: PhysicalParams) -> float:
    """Largest total power possible when every charger-receiver distance is >= lambda.

    Each field has magnitude at most beta / lambda, so a receiver gets at most
    ``gamma (m beta / lambda)^2``.  (The cruder constant
    ``n m^2 gamma beta^2 4 pi^2 / lambda^2`` is also valid but looser.)
    """
    return n * params.gamma * (m * params.beta / params.wavelength) ** 2
