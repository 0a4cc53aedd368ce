import logging
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import groupby
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from recovgraph.core.config import RunConfig
from recovgraph.domain.context import SessionContext
from recovgraph.domain.stages import CorrelationStage, IngestStage, SamplingStage
from recovgraph.models import artifacts
from recovgraph.models.schemas import (
    DistanceResult,
    GraphSampleSet,
    ManifestEntry,
    RecoveryTrajectory,
    SessionStatus,
    joint_names_for,
)
from recovgraph.services import distance, graph, ingest, trajectory

logger = logging.getLogger(__name__)

GroupKey = Tuple[str, str]


def build_pipeline(config: RunConfig) -> list:
    return [
        IngestStage(config.n_joints),
        CorrelationStage(config.ridge_ladder, config.cond_limit),
        SamplingStage(
            config.n_samples,
            config.proposal,
            config.seed,
            u_bound=config.u_bound,
            direct=config.direct_sampling,
        ),
    ]


def process_session(entry: ManifestEntry, stages: Sequence) -> SessionContext:
    ctx = SessionContext(entry=entry, status=SessionStatus.running)
    try:
        for stage in stages:
            started = time.perf_counter()
            ctx = stage.run(ctx)
            ctx.timings[type(stage).__name__] = time.perf_counter() - started
        ctx.status = SessionStatus.completed
        logger.info("%s: graph posterior sampled", ctx.key)
    except (ValueError, OSError) as e:
        ctx.status = SessionStatus.failed
        ctx.error = str(e)
        logger.error("%s: session skipped: %s", ctx.key, e)
    return ctx


def process_sessions(entries: Sequence[ManifestEntry], config: RunConfig) -> List[SessionContext]:
    stages = build_pipeline(config)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        # map keeps manifest order whatever the completion order
        return list(pool.map(lambda entry: process_session(entry, stages), entries))


def group_sessions(contexts: Sequence[SessionContext]) -> Dict[GroupKey, List[SessionContext]]:
    ordered = sorted(contexts, key=lambda c: (c.entry.patient_id, c.entry.game_id, c.entry.instance))
    return {
        key: list(group)
        for key, group in groupby(ordered, key=lambda c: (c.entry.patient_id, c.entry.game_id))
    }


def incomplete_reason(group: Sequence[SessionContext]) -> Optional[str]:
    instances = [c.entry.instance for c in group]
    expected = list(range(1, len(group) + 1))
    if instances != expected:
        missing = sorted(set(range(1, max(instances) + 1)) - set(instances))
        duplicated = sorted({i for i in instances if instances.count(i) > 1})
        if duplicated:
            return f"duplicated instance(s) {duplicated}"
        return f"missing instance(s) {missing}"
    failed = [c.entry.instance for c in group if c.status is not SessionStatus.completed]
    if failed:
        return f"failed instance(s) {failed}"
    return None


def successive_distances(group: Sequence[SessionContext], config: RunConfig) -> List[DistanceResult]:
    return [
        distance.compare_sessions(
            later.samples,
            earlier.samples,
            config.scale_hellinger,
            config.scale_kl,
            instance_pair=(earlier.entry.instance, later.entry.instance),
        )
        for earlier, later in zip(group, group[1:])
    ]


def all_pair_distances(group: Sequence[SessionContext], config: RunConfig) -> List[DistanceResult]:
    return [
        distance.compare_sessions(
            later.samples,
            earlier.samples,
            config.scale_hellinger,
            config.scale_kl,
            instance_pair=(earlier.entry.instance, later.entry.instance),
        )
        for i, earlier in enumerate(group)
        for later in group[i + 1:]
    ]


def _group_name(key: GroupKey) -> str:
    return f"{key[0]}_{key[1]}"


def write_session_artifacts(contexts: Sequence[SessionContext], config: RunConfig) -> None:
    labels = joint_names_for(config.n_joints)
    for ctx in contexts:
        if ctx.status is not SessionStatus.completed:
            continue
        if config.dump_correlation:
            artifacts.write_matrix_csv(ctx.correlation.pearson, labels, config.output_dir / "correlation" / f"pearson_{ctx.key}.csv")
            artifacts.write_matrix_csv(ctx.correlation.partial, labels, config.output_dir / "correlation" / f"partial_{ctx.key}.csv")
        if config.save_samples:
            artifacts.write_sample_set(ctx.samples, config.output_dir / "samples" / f"{ctx.key}.rgg")


def write_realizations(samples: Dict[str, GraphSampleSet], taus: Sequence[float], output_dir: Path) -> None:
    density_rows = []
    for key, sample_set in samples.items():
        labels = joint_names_for(sample_set.n_nodes)
        for tau in taus:
            realization = graph.realize_graph(sample_set, tau)
            artifacts.write_realization(
                realization,
                sample_set.edge_freq,
                labels,
                output_dir / "graphs" / f"edges_{key}_tau{tau:g}.csv",
                output_dir / "graphs" / f"adjacency_{key}_tau{tau:g}.csv",
            )
            n_edges = len(realization.edge_list())
            density_rows.append({"session": key, "tau": tau, "n_edges": n_edges, "density": n_edges / sample_set.n_edges})

    artifacts.write_density_csv(density_rows, output_dir / "graphs" / "density.csv")


def _session_metadata(ctx: SessionContext) -> dict:
    meta = {"status": ctx.status.value, "error": ctx.error, "timings": ctx.timings}
    if ctx.correlation is not None:
        meta["ridge_applied"] = ctx.correlation.ridge_applied
    if ctx.samples is not None:
        meta["mean_acceptance_rate"] = float(np.mean(ctx.samples.acceptance_rate))
        meta["min_acceptance_rate"] = float(np.min(ctx.samples.acceptance_rate))
        meta["rng_seed"] = ctx.samples.rng_seed
        meta["proposal_clamped"] = ctx.samples.proposal_clamped
        meta["direct_pairs"] = ctx.samples.direct_pairs
    return meta


def run_pipeline(config: RunConfig) -> int:
    """Run the full recovery-trajectory computation and write all artifacts.

    Returns the process exit status: 0 when at least one trajectory was produced.
    """
    if config.manifest_path is None:
        raise ValueError("A manifest path is required to run the pipeline")
    started = time.perf_counter()
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    entries = ingest.load_manifest(config.manifest_path)
    contexts = process_sessions(entries, config)
    write_session_artifacts(contexts, config)
    write_realizations(
        {c.key: c.samples for c in contexts if c.status is SessionStatus.completed},
        config.taus,
        output_dir,
    )

    trajectories: List[RecoveryTrajectory] = []
    incomplete: Dict[str, str] = {}
    initial_scores: Dict[GroupKey, int] = {}
    for key, group in group_sessions(contexts).items():
        reason = incomplete_reason(group)
        if reason:
            incomplete[_group_name(key)] = reason
            logger.warning("Trajectory %s incomplete: %s", _group_name(key), reason)
            continue

        distances = successive_distances(group, config)
        artifacts.write_distances_csv(distances, output_dir / f"distances_{_group_name(key)}.csv")
        if config.all_pairs:
            artifacts.write_distances_csv(all_pair_distances(group, config), output_dir / f"all_pairs_{_group_name(key)}.csv")

        points = [c.entry.platform_points for c in group]
        traj = trajectory.mrs_trajectory(
            distances,
            patient_id=key[0],
            game_id=key[1],
            platform_points=points if any(p is not None for p in points) else None,
            origin=config.mrs_origin,
        )
        artifacts.write_trajectory_csv(traj, output_dir / f"trajectory_{_group_name(key)}.csv")
        trajectories.append(traj)
        if points[0] is not None:
            initial_scores[key] = points[0]

    points = trajectory.build_recovery_points(trajectories, initial_scores)
    table = trajectory.recommendation_table(points)
    n_instances = {(t.patient_id, t.game_id): t.n_instances for t in trajectories}
    artifacts.write_recommendation_csv(table, n_instances, output_dir / "recommendation.csv")
    artifacts.write_game_summary_csv(trajectory.summarize_games(table), output_dir / "game_summary.csv")
    artifacts.write_json(artifacts.plot_data(trajectories, table), output_dir / "plot_data.json")

    artifacts.write_json(
        {
            "config": config.model_dump(mode="json"),
            "seed": config.seed,
            "sessions": {c.key: _session_metadata(c) for c in contexts},
            "ridge_events": {
                c.key: c.correlation.ridge_applied
                for c in contexts
                if c.correlation is not None and c.correlation.ridge_applied > 0
            },
            "incomplete": incomplete,
            "n_trajectories": len(trajectories),
            "elapsed_seconds": time.perf_counter() - started,
        },
        output_dir / "run_metadata.json",
    )

    logger.info("Wrote %d trajectories to %s", len(trajectories), output_dir)
    return 0 if trajectories else 1
