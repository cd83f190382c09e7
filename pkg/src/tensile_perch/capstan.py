"""Static stability of a tether wrapped around a branch.

The holding tension ratio follows the capstan relation over ``loops`` full
turns, with the friction coefficient attenuated by the branch incline::

    mu_eff = mu * (1 - k * sin(beta))
    ratio  = exp(-mu_eff * 2 * pi * loops)

A single loop on a branch inclined at or beyond the critical angle slides
axially off the branch regardless of counterweight; that case is reported
as a ratio of exactly 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MU = 0.18
DEFAULT_ANGLE_SENSITIVITY = 0.15
DEFAULT_CRITICAL_ANGLE = math.radians(30.0)

# Pod share of the total system weight on the reference platform.
REFERENCE_POD_RATIO = 0.308

CSV_HEADER = ("loops", "branch_angle_deg", "weight_ratio")


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class StabilityModel:
    friction_coeff: float = DEFAULT_MU
    angle_sensitivity: float = DEFAULT_ANGLE_SENSITIVITY
    critical_single_loop_angle: float = DEFAULT_CRITICAL_ANGLE

    def __post_init__(self) -> None:
        if self.friction_coeff < 0:
            raise ValueError("friction_coeff must be >= 0")
        if self.angle_sensitivity < 0:
            raise ValueError("angle_sensitivity must be >= 0")
        if not 0 < self.critical_single_loop_angle <= math.pi / 2:
            raise ValueError("critical_single_loop_angle must lie in (0, pi/2]")

    @classmethod
    def from_config(cls, config) -> StabilityModel:
        return cls(
            friction_coeff=config.branch.friction_coeff,
            angle_sensitivity=config.stability.angle_sensitivity,
            critical_single_loop_angle=config.stability.critical_single_loop_angle,
        )


@dataclass(frozen=True)
class CounterweightSample:
    loops: int
    branch_angle: float
    weight_ratio: float

    def __post_init__(self) -> None:
        if self.loops < 1:
            raise ValueError("loops must be >= 1")
        if not 0 < self.weight_ratio <= 1:
            raise ValueError("weight_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class FrictionFit:
    """Result of :func:`fit_friction`."""

    model: StabilityModel
    residual_norm: float
    mu_stderr: float
    k_stderr: float


def effective_friction(model: StabilityModel, branch_angle: float) -> float:
    return model.friction_coeff * (1.0 - model.angle_sensitivity * math.sin(branch_angle))


def axial_slide(model: StabilityModel, loops: int, branch_angle: float) -> bool:
    """True when a single loop slides along an inclined branch."""
    return loops == 1 and branch_angle >= model.critical_single_loop_angle


def min_counterweight_ratio(model: StabilityModel, loops: int, branch_angle: float) -> float:
    """Smallest pod/total weight ratio that holds the drone side."""
    if loops < 1:
        raise ValueError(f"loops must be >= 1, got {loops}")
    if not 0 <= branch_angle < math.pi / 2:
        raise ValueError(f"branch_angle must lie in [0, pi/2), got {branch_angle}")
    if axial_slide(model, loops, branch_angle):
        return 1.0
    mu_eff = effective_friction(model, branch_angle)
    return min(1.0, math.exp(-mu_eff * 2.0 * math.pi * loops))


def is_feasible(model: StabilityModel, weight_ratio: float, loops: int, branch_angle: float) -> bool:
    if not 0 < weight_ratio <= 1:
        raise ValueError(f"weight_ratio must lie in (0, 1], got {weight_ratio}")
    if axial_slide(model, loops, branch_angle):
        return False
    return weight_ratio >= min_counterweight_ratio(model, loops, branch_angle)


def fit_friction(samples: Sequence[CounterweightSample]) -> FrictionFit:
    """Least-squares fit of (mu, k) to measured minimum counterweights.

    The model is linear in ``(mu, mu*k)`` once logged::

        log(r) = -2 pi n mu + 2 pi n sin(beta) (mu k)

    so a plain linear solve is exact; ``k`` is recovered as the ratio.
    Standard errors use the residual variance when the fit is over-determined.
    """
    if len(samples) < 2:
        raise DegenerateDataError("need at least two samples")
    keys = {(s.loops, s.branch_angle) for s in samples}
    if len(keys) < 2:
        raise DegenerateDataError("samples must have distinct (loops, angle)")
    for s in samples:
        if s.loops == 1 and s.branch_angle >= DEFAULT_CRITICAL_ANGLE:
            raise ValueError("single-loop samples at or beyond the critical angle carry no friction data")

    n = np.array([s.loops for s in samples], dtype=float)
    beta = np.array([s.branch_angle for s in samples], dtype=float)
    y = np.log(np.array([s.weight_ratio for s in samples], dtype=float))
    A = np.column_stack([-2.0 * math.pi * n, 2.0 * math.pi * n * np.sin(beta)])
    if np.linalg.matrix_rank(A) < 2:
        raise DegenerateDataError("design matrix is rank-deficient (vary the branch angle)")

    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    mu, muk = float(coef[0]), float(coef[1])
    resid = y - A @ coef
    residual_norm = float(np.linalg.norm(resid))

    dof = len(samples) - 2
    cov = np.linalg.inv(A.T @ A)
    sigma2 = residual_norm**2 / dof if dof > 0 else 0.0
    mu_var = sigma2 * cov[0, 0]
    k = muk / mu if mu != 0 else 0.0
    # delta method for k = muk / mu
    if mu != 0:
        grad = np.array([-muk / mu**2, 1.0 / mu])
        k_var = float(grad @ (sigma2 * cov) @ grad)
    else:
        k_var = math.inf

    model = StabilityModel(friction_coeff=max(mu, 0.0), angle_sensitivity=max(k, 0.0))
    return FrictionFit(model, residual_norm, math.sqrt(mu_var), math.sqrt(max(k_var, 0.0)))


def counterweight_table(model: StabilityModel, loops: Iterable[int], angles_deg: Iterable[float],
                        pod_ratio: float = REFERENCE_POD_RATIO) -> list[tuple[int, float, float, bool]]:
    """Rows of ``(loops, angle_deg, min_ratio, feasible_at_pod_ratio)``."""
    angles = list(angles_deg)
    rows = []
    for n in loops:
        for a in angles:
            beta = math.radians(a)
            rows.append((n, a, min_counterweight_ratio(model, n, beta),
                         is_feasible(model, pod_ratio, n, beta)))
    return rows


def read_samples(path: str | Path) -> list[CounterweightSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)}")
        return [
            CounterweightSample(int(row["loops"]), math.radians(float(row["branch_angle_deg"])),
                                float(row["weight_ratio"]))
            for row in reader
        ]


def write_samples(samples: Iterable[CounterweightSample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow([s.loops, repr(math.degrees(s.branch_angle)), repr(s.weight_ratio)])
