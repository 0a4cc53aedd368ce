import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from recovgraph.core.config import RunConfig, load_config
from recovgraph.core.logging import configure_logging
from recovgraph.domain import pipeline
from recovgraph.models import artifacts
from recovgraph.models.schemas import Proposal, SessionStatus
from recovgraph.services import distance, ingest, synth, trajectory

logger = logging.getLogger("recovgraph.cli")

# argparse dests that map one-to-one onto RunConfig fields
CONFIG_DESTS = (
    "manifest_path",
    "output_dir",
    "n_samples",
    "proposal",
    "seed",
    "taus",
    "scale_hellinger",
    "scale_kl",
    "ridge_ladder",
    "n_joints",
    "u_bound",
    "threads",
    "direct_sampling",
    "all_pairs",
    "dump_correlation",
    "save_samples",
    "mrs_origin",
    "log_level",
)


def _add_sampling_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", dest="n_samples", type=int, help="Graph samples per session (default 50000)")
    parser.add_argument("--proposal", choices=[p.value for p in Proposal], help="Edge proposal distribution")
    parser.add_argument("--seed", type=int, help="Unsigned 64-bit RNG seed shared by every session")
    parser.add_argument("--ridge-ladder", dest="ridge_ladder", type=float, nargs="+", help="Ridge values tried in order")
    parser.add_argument("--joints", dest="n_joints", type=int, help="Joints per frame (default 20)")
    parser.add_argument("--u-bound", dest="u_bound", type=float, help="Upper bound of the edge-weight prior")
    parser.add_argument("--direct-sampling", dest="direct_sampling", action="store_true", default=None,
                        help="Draw edges straight from the Bernoulli marginal instead of by rejection")


def _add_tau_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", dest="taus", type=float, nargs="+", help="Edge-frequency thresholds in [0, 1]")


def _add_scale_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scale-hellinger", dest="scale_hellinger", type=float, help="Hellinger scale (default 1e15)")
    parser.add_argument("--scale-kl", dest="scale_kl", type=float, help="KL scale (default 1e25)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recovgraph",
        description="Learn joint-interaction graph posteriors from exergame sessions and score mobility recovery.",
    )
    parser.add_argument("--config", type=Path, help="TOML or INI config file")
    parser.add_argument("--log-level", dest="log_level", help="Logging level (default INFO)")
    parser.add_argument("--threads", type=int, help="Worker threads for per-session work")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="Run the full pipeline over a manifest")
    analyze.add_argument("manifest_path", type=Path, help="manifest.json or a directory of session CSVs")
    analyze.add_argument("output_dir", type=Path, help="Directory for all artifacts")
    _add_sampling_flags(analyze)
    _add_tau_flag(analyze)
    _add_scale_flags(analyze)
    analyze.add_argument("--all-pairs", dest="all_pairs", action="store_true", default=None,
                         help="Also compare every instance pair, not only successive ones")
    analyze.add_argument("--dump-correlation", dest="dump_correlation", action="store_true", default=None,
                         help="Write Pearson and partial correlation matrices per session")
    analyze.add_argument("--save-samples", dest="save_samples", action="store_true", default=None,
                         help="Write each session's graph samples as a binary container")
    analyze.add_argument("--mrs-origin", dest="mrs_origin", choices=["zero", "half_first_step"],
                         help="Value of the score at the first instance")

    graph_cmd = sub.add_parser("graph", help="Threshold graph posteriors into realizations")
    graph_cmd.add_argument("inputs", type=Path, nargs="+", help="A manifest, or one or more .rgg sample containers")
    graph_cmd.add_argument("--out", dest="output_dir", type=Path, required=True, help="Output directory")
    _add_sampling_flags(graph_cmd)
    _add_tau_flag(graph_cmd)

    distance_cmd = sub.add_parser("distance", help="Compare two sample containers, later session first")
    distance_cmd.add_argument("later", type=Path)
    distance_cmd.add_argument("earlier", type=Path)
    distance_cmd.add_argument("--out", type=Path, required=True, help="Distance CSV to write")
    distance_cmd.add_argument("--pair", type=int, nargs=2, metavar=("EARLIER", "LATER"),
                              help="Instance numbers recorded in the row")
    _add_scale_flags(distance_cmd)

    traj_cmd = sub.add_parser("trajectory", help="Accumulate a distance CSV into a recovery trajectory")
    traj_cmd.add_argument("distances", type=Path)
    traj_cmd.add_argument("--patient", required=True)
    traj_cmd.add_argument("--game", required=True)
    traj_cmd.add_argument("--points", type=int, nargs="+", help="Platform score per instance")
    traj_cmd.add_argument("--mrs-origin", dest="mrs_origin", choices=["zero", "half_first_step"])
    traj_cmd.add_argument("--out", type=Path, required=True, help="Trajectory CSV to write")

    rec_cmd = sub.add_parser("recommend", help="Tabulate recovery against initial score per game")
    rec_cmd.add_argument("trajectories", type=Path, help="Directory holding trajectory_<patient>_<game>.csv files")
    rec_cmd.add_argument("manifest", type=Path, help="Manifest carrying the platform scores")
    rec_cmd.add_argument("--out", dest="output_dir", type=Path, required=True, help="Output directory")

    synth_cmd = sub.add_parser("synth", help="Generate synthetic sessions from a correlation spec")
    synth_cmd.add_argument("spec", type=Path, help="JSON spec (object, list or {\"specs\": [...]})")
    synth_cmd.add_argument("output_dir", type=Path)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {
        dest: getattr(args, dest) for dest in CONFIG_DESTS if getattr(args, dest, None) is not None
    }
    return load_config(args.config, **overrides)


def _cmd_analyze(args: argparse.Namespace, config: RunConfig) -> int:
    return pipeline.run_pipeline(config)


def _cmd_graph(args: argparse.Namespace, config: RunConfig) -> int:
    if all(p.suffix == ".rgg" for p in args.inputs):
        samples = {p.stem: artifacts.read_sample_set(p) for p in args.inputs}
    elif len(args.inputs) == 1:
        contexts = pipeline.process_sessions(ingest.load_manifest(args.inputs[0]), config)
        samples = {c.key: c.samples for c in contexts if c.status is SessionStatus.completed}
    else:
        raise ValueError("graph takes a single manifest or a list of .rgg containers")
    if not samples:
        logger.error("No graph samples to realize")
        return 1
    pipeline.write_realizations(samples, config.taus, Path(config.output_dir))
    logger.info("Wrote realizations for %d session(s) at tau %s", len(samples), config.taus)
    return 0


def _cmd_distance(args: argparse.Namespace, config: RunConfig) -> int:
    result = distance.compare_sessions(
        artifacts.read_sample_set(args.later),
        artifacts.read_sample_set(args.earlier),
        config.scale_hellinger,
        config.scale_kl,
        instance_pair=tuple(args.pair) if args.pair else None,
    )
    artifacts.write_distances_csv([result], args.out)
    logger.info("Hellinger %.6g, KL %.6g", result.hellinger, result.kl)
    return 0


def _cmd_trajectory(args: argparse.Namespace, config: RunConfig) -> int:
    distances = artifacts.read_distances_csv(args.distances, config.scale_hellinger, config.scale_kl, config.n_samples)
    traj = trajectory.mrs_trajectory(
        distances,
        patient_id=args.patient,
        game_id=args.game,
        platform_points=args.points,
        origin=config.mrs_origin,
    )
    artifacts.write_trajectory_csv(traj, args.out)
    return 0


def _cmd_recommend(args: argparse.Namespace, config: RunConfig) -> int:
    entries = ingest.load_manifest(args.manifest)
    initial_scores = {
        (e.patient_id, e.game_id): e.platform_points
        for e in entries
        if e.instance == 1 and e.platform_points is not None
    }
    trajectories = []
    for patient_id, game_id in sorted({(e.patient_id, e.game_id) for e in entries}):
        path = args.trajectories / f"trajectory_{patient_id}_{game_id}.csv"
        if not path.exists():
            logger.warning("No trajectory for %s/%s in %s", patient_id, game_id, args.trajectories)
            continue
        trajectories.append(artifacts.read_trajectory_csv(path, patient_id, game_id))

    table = trajectory.recommendation_table(trajectory.build_recovery_points(trajectories, initial_scores))
    n_instances = {(t.patient_id, t.game_id): t.n_instances for t in trajectories}
    output_dir = Path(config.output_dir)
    artifacts.write_recommendation_csv(table, n_instances, output_dir / "recommendation.csv")
    artifacts.write_game_summary_csv(trajectory.summarize_games(table), output_dir / "game_summary.csv")
    artifacts.write_json(artifacts.plot_data(trajectories, table), output_dir / "plot_data.json")
    return 0 if trajectories else 1


def _cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    synth.write_cohort(synth.load_specs(args.spec), config.output_dir)
    return 0


COMMANDS = {
    "analyze": _cmd_analyze,
    "graph": _cmd_graph,
    "distance": _cmd_distance,
    "trajectory": _cmd_trajectory,
    "recommend": _cmd_recommend,
    "synth": _cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as e:
        configure_logging(args.log_level or "INFO")
        logger.error("Invalid configuration: %s", e)
        return 2

    configure_logging(config.log_level)
    try:
        return COMMANDS[args.command](args, config)
    except (ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 2
