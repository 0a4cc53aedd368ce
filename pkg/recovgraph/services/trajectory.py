import logging
from itertools import accumulate
from typing import Dict, Iterable, List, Literal, Optional, Sequence

import numpy as np
from scipy import stats

from recovgraph.core.errors import ContractError, UndefinedRecoveryError
from recovgraph.models.schemas import (
    DistanceResult,
    GameSummary,
    RecommendationSeries,
    RecoveryPoint,
    RecoveryTrajectory,
)

logger = logging.getLogger(__name__)

MIN_INSTANCES_FOR_RECOMMENDATION = 4
ALPHA_DENOMINATOR_FLOOR = 1e-12


def _check_contiguous(distances: Sequence[DistanceResult]) -> None:
    for j, d in enumerate(distances, start=1):
        if d.instance_pair is not None and tuple(d.instance_pair) != (j, j + 1):
            raise ContractError(f"missing instance pair ({j},{j + 1}); found {tuple(d.instance_pair)}")


def _differences(values: Sequence[float]) -> List[float]:
    return [b - a for a, b in zip(values, values[1:])]


def mrs_trajectory(
    distances: Sequence[DistanceResult],
    patient_id: str,
    game_id: str,
    platform_points: Optional[List[Optional[int]]] = None,
    origin: Literal["zero", "half_first_step"] = "zero",
) -> RecoveryTrajectory:
    """Cumulative Mobility Recovery Score over successive instances.

    MRS(1) is 0, or half the first step with origin="half_first_step".
    MRS(j) = D(j-1, j) + MRS(j-1).
    """
    _check_contiguous(distances)
    steps_h = [d.hellinger for d in distances]
    steps_kl = [d.kl for d in distances]

    start_h = start_kl = 0.0
    if origin == "half_first_step" and distances:
        start_h, start_kl = steps_h[0] / 2, steps_kl[0] / 2

    mrs_h = list(accumulate(steps_h, initial=start_h))
    mrs_kl = list(accumulate(steps_kl, initial=start_kl))
    return RecoveryTrajectory(
        patient_id=patient_id,
        game_id=game_id,
        mrs_hellinger=mrs_h,
        mrs_kl=mrs_kl,
        # mrs[j] - mrs[j - 1] == rate[j - 1] exactly
        rate_hellinger=_differences(mrs_h),
        rate_kl=_differences(mrs_kl),
        platform_points=platform_points,
    )


def recovery_parameter(traj: RecoveryTrajectory) -> float:
    """Normalised range of the KL-based MRS: (MRS(N) - MRS(2)) / MRS(N)."""
    if traj.n_instances < 2:
        raise UndefinedRecoveryError(
            f"P{traj.patient_id}/{traj.game_id}: at least two instances are needed for alpha"
        )
    final = traj.mrs_kl[-1]
    if abs(final) < ALPHA_DENOMINATOR_FLOOR:
        raise UndefinedRecoveryError(f"P{traj.patient_id}/{traj.game_id}: final KL MRS is zero")
    return (final - traj.mrs_kl[1]) / final


def recovery_point(traj: RecoveryTrajectory, initial_score: Optional[int] = None) -> RecoveryPoint:
    if initial_score is None:
        initial_score = traj.platform_points[0] if traj.platform_points else None
    if initial_score is None:
        raise ContractError(f"P{traj.patient_id}/{traj.game_id}: no initial platform score")
    return RecoveryPoint(
        patient_id=traj.patient_id,
        game_id=traj.game_id,
        alpha=recovery_parameter(traj),
        initial_score=initial_score,
        n_instances=traj.n_instances,
    )


def recommendation_table(points: Iterable[RecoveryPoint]) -> Dict[str, RecommendationSeries]:
    """Group alpha against initial score per game, keeping patients with enough instances."""
    table: Dict[str, RecommendationSeries] = {}
    for point in points:
        series = table.setdefault(point.game_id, RecommendationSeries(game_id=point.game_id))
        if point.n_instances < MIN_INSTANCES_FOR_RECOMMENDATION:
            continue
        series.patients.append(point.patient_id)
        series.initial_scores.append(point.initial_score)
        series.alphas.append(point.alpha)

    for series in table.values():
        order = sorted(range(len(series.alphas)), key=lambda i: (series.initial_scores[i], series.patients[i]))
        series.patients = [series.patients[i] for i in order]
        series.initial_scores = [series.initial_scores[i] for i in order]
        series.alphas = [series.alphas[i] for i in order]
    return dict(sorted(table.items()))


def summarize_games(table: Dict[str, RecommendationSeries]) -> List[GameSummary]:
    summaries = []
    for game_id, series in table.items():
        summary = GameSummary(game_id=game_id, n_patients=len(series.alphas))
        if series.alphas:
            alphas = np.asarray(series.alphas)
            summary.mean_alpha = float(alphas.mean())
            summary.alpha_spread = float(alphas.std(ddof=1)) if alphas.size > 1 else 0.0
        if len(set(series.initial_scores)) >= 2:
            summary.slope = float(stats.linregress(series.initial_scores, series.alphas).slope)
        summaries.append(summary)
    return summaries


def build_recovery_points(
    trajectories: Iterable[RecoveryTrajectory],
    initial_scores: Optional[Dict[tuple, int]] = None,
) -> List[RecoveryPoint]:
    """Recovery points for every trajectory with a defined alpha; others are logged and skipped."""
    initial_scores = initial_scores or {}
    points = []
    for traj in trajectories:
        try:
            points.append(recovery_point(traj, initial_scores.get((traj.patient_id, traj.game_id))))
        except (UndefinedRecoveryError, ContractError) as e:
            logger.warning("Excluded from recommendation: %s", e)
    return points
