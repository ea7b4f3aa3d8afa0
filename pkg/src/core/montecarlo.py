"""
Monte Carlo Risk Harness

Seeded risk estimation for the measurement model y = A x + z. Each trial
draws its randomness from a Philox counter-based stream spawned from
(seed, trial), so a trial is a pure function of those two numbers and the
average is taken in ascending trial order.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from .errors import DimensionMismatchError, EstimatorFailure, PreconditionError, SimulationError
from .estimators import Estimator
from .linalg import DenseMatrix
from .packing import PackingSet, SparseVector

logger = logging.getLogger(__name__)

# Failed trials are dropped only while they stay below this fraction.
FAILURE_TOLERANCE = 0.01

# Spawn-key prefixes keep noise, design and signal streams disjoint.
NOISE_STREAM = 0
DESIGN_STREAM = 1
SIGNAL_STREAM = 2


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the child stream ``key`` of ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in key))
    return np.random.Generator(np.random.Philox(seq))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Noise stream of one trial; Gaussians come from numpy's ziggurat sampler."""
    return stream_rng(seed, NOISE_STREAM, trial)


def gaussian_design(m: int, n: int, seed: int, index: int = 0) -> DenseMatrix:
    """m x n design with i.i.d. N(0, 1/n) entries."""
    if m < 1 or n < 1:
        raise PreconditionError(f"design dimensions must be positive, got {m}x{n}")
    rng = stream_rng(seed, DESIGN_STREAM, index)
    return DenseMatrix(rng.standard_normal((m, n)) / math.sqrt(n))


@dataclass(frozen=True, eq=False)
class EstimationInstance:
    """One draw of the measurement model."""
    a: DenseMatrix
    x_true: SparseVector
    sigma: float
    y: np.ndarray
    seed: int
    trial: int = 0


def generate_instance(a: DenseMatrix, x_true: SparseVector, sigma: float, seed: int, trial: int = 0) -> EstimationInstance:
    """y = A x + z with z ~ N(0, sigma^2 I) from the (seed, trial) stream."""
    if x_true.n != a.cols:
        raise DimensionMismatchError(f"signal dimension {x_true.n} does not match {a.cols} columns")
    if sigma < 0:
        raise PreconditionError(f"sigma must be non-negative, got {sigma}")
    z = sigma * trial_rng(seed, trial).standard_normal(a.rows)
    y = a.array @ x_true.to_dense() + z
    return EstimationInstance(a, x_true, sigma, y, seed, trial)


@dataclass(frozen=True)
class RiskEstimate:
    """Mean of (1/n)||x_hat - x||^2 over successful trials."""
    estimator: str
    mean_risk: float
    std_error: float
    trials: int
    seed: int
    failures: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator,
            "mean_risk": self.mean_risk,
            "std_error": self.std_error,
            "trials": self.trials,
            "seed": self.seed,
            "failures": self.failures,
        }


def _summarize(name: str, losses: List[float], trials: int, seed: int, failures: int, tolerance: float) -> RiskEstimate:
    if failures >= tolerance * trials:
        raise SimulationError(f"{name}: {failures} of {trials} trials failed")
    if failures:
        logger.warning("%s: excluded %d failed trials out of %d", name, failures, trials)
    values = np.asarray(losses)
    count = values.size
    if count < 2:
        raise SimulationError(f"{name}: fewer than two successful trials")
    mean = math.fsum(losses) / count
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in losses) / (count - 1))
    return RiskEstimate(name, mean, std / math.sqrt(count), trials, seed, failures)


def mc_risk(
    a: DenseMatrix,
    estimator: Estimator,
    x_true: SparseVector,
    sigma: float,
    trials: int,
    seed: int,
    failure_tolerance: float = FAILURE_TOLERANCE,
) -> RiskEstimate:
    """Risk of ``estimator`` at the fixed signal ``x_true``."""
    if trials < 2:
        raise PreconditionError(f"need at least 2 trials, got {trials}")
    n = a.cols
    x_dense = x_true.to_dense()
    losses: List[float] = []
    failures = 0
    for trial in range(trials):
        inst = generate_instance(a, x_true, sigma, seed, trial)
        try:
            estimate = estimator(a, inst.y, x_true.support)
        except EstimatorFailure as e:
            failures += 1
            logger.debug("trial %d failed: %s", trial, e)
            continue
        err = estimate - x_dense
        losses.append(float(err @ err) / n)
    result = _summarize(estimator.name, losses, trials, seed, failures, failure_tolerance)
    logger.info("%s risk %.6g +- %.2g over %d trials", estimator.name, result.mean_risk, result.std_error, trials)
    return result


def packing_bayes_risk(
    a: DenseMatrix,
    packing: PackingSet,
    level: float,
    estimator: Estimator,
    sigma: float,
    trials: int,
    seed: int,
    failure_tolerance: float = FAILURE_TOLERANCE,
) -> RiskEstimate:
    """Bayes risk with x uniform on the packing rescaled by 4 sqrt(n * level)."""
    if packing.scale != 1.0:
        raise PreconditionError(f"expected a unit-scale packing, got scale {packing.scale}")
    if not level > 0:
        raise PreconditionError(f"risk level must be positive, got {level}")
    if trials < 2:
        raise PreconditionError(f"need at least 2 trials, got {trials}")
    n = packing.n
    if a.cols != n:
        raise DimensionMismatchError(f"design has {a.cols} columns but packing lives in R^{n}")

    scaled = packing.scaled(4.0 * math.sqrt(n * level))
    dense = scaled.dense()
    images = dense @ a.array.T
    losses: List[float] = []
    failures = 0
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        i = int(rng.integers(scaled.size))
        y = images[i] + sigma * rng.standard_normal(a.rows)
        try:
            estimate = estimator(a, y, scaled.points[i].support)
        except EstimatorFailure as e:
            failures += 1
            logger.debug("trial %d failed: %s", trial, e)
            continue
        err = estimate - dense[i]
        losses.append(float(err @ err) / n)
    return _summarize(estimator.name, losses, trials, seed, failures, failure_tolerance)


def worst_case_risk(
    a: DenseMatrix,
    estimator: Estimator,
    signals: Sequence[SparseVector],
    sigma: float,
    trials: int,
    seed: int,
) -> RiskEstimate:
    """Largest mc_risk over ``signals``; signal i uses stream seed + i."""
    if not signals:
        raise PreconditionError("need at least one signal")
    estimates = [mc_risk(a, estimator, x, sigma, trials, seed + i) for i, x in enumerate(signals)]
    return max(estimates, key=lambda r: r.mean_risk)
