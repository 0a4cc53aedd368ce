import math
from typing import Optional, Tuple

import numpy as np

from recovgraph.core.errors import ContractError
from recovgraph.models.schemas import DistanceResult, GraphSampleSet

DEFAULT_SCALE_HELLINGER = 1e15
DEFAULT_SCALE_KL = 1e25


def _check_pairable(a: GraphSampleSet, b: GraphSampleSet) -> None:
    if a.n_samples != b.n_samples:
        raise ContractError(f"sample sets differ in size: {a.n_samples} vs {b.n_samples}")
    if a.n_nodes != b.n_nodes:
        raise ContractError(f"sample sets differ in node count: {a.n_nodes} vs {b.n_nodes}")


def hellinger(a: GraphSampleSet, b: GraphSampleSet, scale: float = DEFAULT_SCALE_HELLINGER) -> float:
    """Discretised Hellinger distance between paired draws of two graph posteriors.

    Each posterior value is multiplied by `scale` before the square roots; draw r
    of `a` is paired with draw r of `b`.
    """
    _check_pairable(a, b)
    log_scale = math.log(scale)
    root_a = np.exp(0.5 * (a.log_posterior + log_scale))
    root_b = np.exp(0.5 * (b.log_posterior + log_scale))
    return float(np.sqrt(np.mean((root_a - root_b) ** 2)))


def kl_divergence(later: GraphSampleSet, earlier: GraphSampleSet, scale: float = DEFAULT_SCALE_KL) -> float:
    """Sum over paired draws of pi_later * log(pi_later / pi_earlier).

    Only the weight is scaled; the log ratio is taken in log space. The result
    may be negative.
    """
    _check_pairable(later, earlier)
    weight = np.exp(later.log_posterior + math.log(scale))
    return float(np.sum(weight * (later.log_posterior - earlier.log_posterior)))


def compare_sessions(
    later: GraphSampleSet,
    earlier: GraphSampleSet,
    scale_hellinger: float = DEFAULT_SCALE_HELLINGER,
    scale_kl: float = DEFAULT_SCALE_KL,
    instance_pair: Optional[Tuple[int, int]] = None,
) -> DistanceResult:
    return DistanceResult(
        hellinger=hellinger(later, earlier, scale_hellinger),
        kl=kl_divergence(later, earlier, scale_kl),
        n_samples=later.n_samples,
        scale_hellinger=scale_hellinger,
        scale_kl=scale_kl,
        instance_pair=instance_pair,
    )
