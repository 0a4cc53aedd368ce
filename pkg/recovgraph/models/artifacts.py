import json
import re
import struct
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from recovgraph.core.errors import ContractError
from recovgraph.models.schemas import (
    DistanceResult,
    GameSummary,
    GraphRealization,
    GraphSampleSet,
    Proposal,
    RawSession,
    RecommendationSeries,
    RecoveryTrajectory,
)

CONTAINER_MAGIC = b"RGGSAMP1"
CONTAINER_HEADER = struct.Struct("<8sIIQQB")
PROPOSAL_CODES = {Proposal.uniform: 0, Proposal.bernoulli: 1}

DISTANCE_COLUMNS = ["instance_pair", "hellinger", "kl"]
TRAJECTORY_COLUMNS = ["instance", "mrs_hellinger", "mrs_kl", "rate_hellinger", "rate_kl", "platform_points"]
RECOMMENDATION_COLUMNS = ["game", "patient", "initial_score", "alpha", "n_instances"]
GAME_SUMMARY_COLUMNS = ["game", "n_patients", "mean_alpha", "alpha_spread", "slope"]

_PAIR_PATTERN = re.compile(r"\((\d+),(\d+)\)")


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_session_csv(raw: RawSession, path: Path) -> None:
    columns = [f"joint{i}_{axis}" for i in range(1, raw.n_joints + 1) for axis in "xyz"]
    frame = pd.DataFrame(raw.frames.reshape(raw.n_frames, -1), columns=columns)
    frame.to_csv(_ensure_parent(path), index=False)


def write_matrix_csv(matrix: np.ndarray, labels: Sequence[str], path: Path) -> None:
    pd.DataFrame(matrix, index=labels, columns=labels).to_csv(_ensure_parent(path))


def write_sample_set(sample_set: GraphSampleSet, path: Path) -> None:
    header = CONTAINER_HEADER.pack(
        CONTAINER_MAGIC,
        sample_set.n_nodes,
        sample_set.n_edges,
        sample_set.n_samples,
        sample_set.rng_seed,
        PROPOSAL_CODES[sample_set.proposal],
    )
    with open(_ensure_parent(path), "wb") as fh:
        fh.write(header)
        fh.write(np.packbits(sample_set.edges, axis=1).tobytes())
        fh.write(sample_set.log_posterior.astype("<f8").tobytes())


def read_sample_set(path: Path) -> GraphSampleSet:
    data = Path(path).read_bytes()
    if len(data) < CONTAINER_HEADER.size:
        raise ContractError(f"{path}: truncated sample container")
    magic, n_nodes, n_edges, n_samples, seed, code = CONTAINER_HEADER.unpack_from(data)
    if magic != CONTAINER_MAGIC:
        raise ContractError(f"{path}: not a graph sample container")
    if n_edges != n_nodes * (n_nodes - 1) // 2:
        raise ContractError(f"{path}: edge count {n_edges} does not match {n_nodes} nodes")

    row_bytes = (n_edges + 7) // 8
    offset = CONTAINER_HEADER.size
    packed_size = n_samples * row_bytes
    if len(data) != offset + packed_size + 8 * n_samples:
        raise ContractError(f"{path}: container size does not match its header")

    packed = np.frombuffer(data, dtype=np.uint8, count=packed_size, offset=offset).reshape(n_samples, row_bytes)
    edges = np.unpackbits(packed, axis=1, count=n_edges).astype(bool)
    log_posterior = np.frombuffer(data, dtype="<f8", count=n_samples, offset=offset + packed_size).astype(float)
    proposal = {v: k for k, v in PROPOSAL_CODES.items()}[code]

    return GraphSampleSet(
        n_samples=n_samples,
        n_nodes=n_nodes,
        edges=edges,
        log_posterior=log_posterior,
        edge_freq=edges.mean(axis=0),
        proposal=proposal,
        rng_seed=seed,
    )


def write_realization(
    realization: GraphRealization,
    edge_freq: np.ndarray,
    labels: Sequence[str],
    edges_path: Path,
    adjacency_path: Path,
) -> None:
    n_nodes = realization.adjacency.shape[0]
    rows, cols = np.triu_indices(n_nodes, k=1)
    freq = np.zeros((n_nodes, n_nodes))
    freq[rows, cols] = edge_freq
    edge_rows = [
        {"source": labels[s], "target": labels[t], "nu": freq[s, t]}
        for s, t in realization.edge_list()
    ]
    pd.DataFrame(edge_rows, columns=["source", "target", "nu"]).to_csv(_ensure_parent(edges_path), index=False)
    write_matrix_csv(realization.adjacency, labels, adjacency_path)


def write_distances_csv(distances: Sequence[DistanceResult], path: Path) -> None:
    rows = [
        {
            "instance_pair": f"({d.instance_pair[0]},{d.instance_pair[1]})" if d.instance_pair else "",
            "hellinger": d.hellinger,
            "kl": d.kl,
        }
        for d in distances
    ]
    pd.DataFrame(rows, columns=DISTANCE_COLUMNS).to_csv(_ensure_parent(path), index=False)


def read_distances_csv(
    path: Path,
    scale_hellinger: float = 1e15,
    scale_kl: float = 1e25,
    n_samples: int = 50_000,
) -> List[DistanceResult]:
    frame = pd.read_csv(path, dtype={"instance_pair": str})
    missing = set(DISTANCE_COLUMNS) - set(frame.columns)
    if missing:
        raise ContractError(f"{path}: missing columns {sorted(missing)}")

    results = []
    for row in frame.itertuples(index=False):
        match = _PAIR_PATTERN.fullmatch(str(row.instance_pair).replace(" ", ""))
        if not match:
            raise ContractError(f"{path}: cannot parse instance pair {row.instance_pair!r}")
        results.append(
            DistanceResult(
                hellinger=row.hellinger,
                kl=row.kl,
                n_samples=n_samples,
                scale_hellinger=scale_hellinger,
                scale_kl=scale_kl,
                instance_pair=(int(match[1]), int(match[2])),
            )
        )
    return results


def write_trajectory_csv(traj: RecoveryTrajectory, path: Path) -> None:
    n = traj.n_instances
    frame = pd.DataFrame(
        {
            "instance": np.arange(1, n + 1),
            "mrs_hellinger": traj.mrs_hellinger,
            "mrs_kl": traj.mrs_kl,
            "rate_hellinger": [np.nan, *traj.rate_hellinger],
            "rate_kl": [np.nan, *traj.rate_kl],
            "platform_points": pd.array(traj.platform_points or [None] * n, dtype="Int64"),
        },
        columns=TRAJECTORY_COLUMNS,
    )
    frame.to_csv(_ensure_parent(path), index=False)


def read_trajectory_csv(path: Path, patient_id: str, game_id: str) -> RecoveryTrajectory:
    frame = pd.read_csv(path, dtype={"platform_points": "Int64"}).sort_values("instance")
    points = [None if pd.isna(p) else int(p) for p in frame["platform_points"]]
    return RecoveryTrajectory(
        patient_id=patient_id,
        game_id=game_id,
        mrs_hellinger=frame["mrs_hellinger"].tolist(),
        mrs_kl=frame["mrs_kl"].tolist(),
        rate_hellinger=frame["rate_hellinger"].iloc[1:].tolist(),
        rate_kl=frame["rate_kl"].iloc[1:].tolist(),
        platform_points=points if any(p is not None for p in points) else None,
    )


def write_recommendation_csv(table: Dict[str, RecommendationSeries], n_instances: Dict[tuple, int], path: Path) -> None:
    rows = [
        {
            "game": game_id,
            "patient": patient,
            "initial_score": score,
            "alpha": alpha,
            "n_instances": n_instances[(patient, game_id)],
        }
        for game_id, series in table.items()
        for patient, score, alpha in zip(series.patients, series.initial_scores, series.alphas)
    ]
    pd.DataFrame(rows, columns=RECOMMENDATION_COLUMNS).to_csv(_ensure_parent(path), index=False)


def write_game_summary_csv(summaries: Sequence[GameSummary], path: Path) -> None:
    rows = [
        {
            "game": s.game_id,
            "n_patients": s.n_patients,
            "mean_alpha": s.mean_alpha,
            "alpha_spread": s.alpha_spread,
            "slope": s.slope,
        }
        for s in summaries
    ]
    pd.DataFrame(rows, columns=GAME_SUMMARY_COLUMNS).to_csv(_ensure_parent(path), index=False)


def plot_data(trajectories: Sequence[RecoveryTrajectory], table: Dict[str, RecommendationSeries]) -> Dict[str, Any]:
    return {
        "trajectories": [
            {
                "patient": t.patient_id,
                "game": t.game_id,
                "x": list(range(1, t.n_instances + 1)),
                "mrs_hellinger": t.mrs_hellinger,
                "mrs_kl": t.mrs_kl,
            }
            for t in trajectories
        ],
        "recommendation": {
            game_id: {"x": s.initial_scores, "y": s.alphas, "patients": s.patients}
            for game_id, s in table.items()
        },
    }


def write_json(data: Any, path: Path, default: Optional[Any] = str) -> None:
    with open(_ensure_parent(path), "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=default)


def write_density_csv(rows: Sequence[Dict[str, Any]], path: Path) -> None:
    pd.DataFrame(list(rows), columns=["session", "tau", "n_edges", "density"]).to_csv(_ensure_parent(path), index=False)
