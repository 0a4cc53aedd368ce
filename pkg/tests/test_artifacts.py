import numpy as np
import pandas as pd
import pytest

from recovgraph.core.errors import ContractError
from recovgraph.models import artifacts
from recovgraph.models.schemas import DistanceResult, Proposal
from recovgraph.services import graph, trajectory


@pytest.fixture
def sample_set():
    partial = np.array([[1.0, 0.8, 0.1, 0.05], [0.8, 1.0, 0.3, 0.2], [0.1, 0.3, 1.0, 0.6], [0.05, 0.2, 0.6, 1.0]])
    return graph.sample_edges(partial, 37, proposal=Proposal.bernoulli, seed=2**63 + 5)


def test_sample_container_layout(tmp_path, sample_set):
    path = tmp_path / "P1_GBall_J1.rgg"
    artifacts.write_sample_set(sample_set, path)

    data = path.read_bytes()
    magic, n_nodes, n_edges, n_samples, seed, code = artifacts.CONTAINER_HEADER.unpack_from(data)
    assert (magic, n_nodes, n_edges, n_samples, seed, code) == (b"RGGSAMP1", 4, 6, 37, 2**63 + 5, 1)
    assert len(data) == artifacts.CONTAINER_HEADER.size + 37 * 1 + 37 * 8

    loaded = artifacts.read_sample_set(path)
    np.testing.assert_array_equal(loaded.edges, sample_set.edges)
    np.testing.assert_array_equal(loaded.log_posterior, sample_set.log_posterior)
    assert loaded.proposal is Proposal.bernoulli


def test_corrupt_container_rejected(tmp_path, sample_set):
    path = tmp_path / "bad.rgg"
    artifacts.write_sample_set(sample_set, path)
    path.write_bytes(b"NOTMAGIC" + path.read_bytes()[8:])

    with pytest.raises(ContractError, match="not a graph sample container"):
        artifacts.read_sample_set(path)

    path.write_bytes(b"RGG")
    with pytest.raises(ContractError, match="truncated"):
        artifacts.read_sample_set(path)


def test_distances_csv_layout(tmp_path):
    rows = [
        DistanceResult(hellinger=0.10604219, kl=0.05, n_samples=10, instance_pair=(1, 2)),
        DistanceResult(hellinger=0.10589288, kl=-2.5e-5, n_samples=10, instance_pair=(2, 3)),
    ]
    path = tmp_path / "distances.csv"
    artifacts.write_distances_csv(rows, path)

    frame = pd.read_csv(path, dtype={"instance_pair": str})
    assert list(frame.columns) == ["instance_pair", "hellinger", "kl"]
    assert frame["instance_pair"].tolist() == ["(1,2)", "(2,3)"]

    loaded = artifacts.read_distances_csv(path, n_samples=10)
    assert [d.instance_pair for d in loaded] == [(1, 2), (2, 3)]
    assert loaded[1].kl == pytest.approx(-2.5e-5)


def test_trajectory_csv_leaves_first_rate_empty(tmp_path):
    distances = [
        DistanceResult(hellinger=h, kl=h / 2, n_samples=10, instance_pair=(j, j + 1))
        for j, h in enumerate([0.1, 0.2], start=1)
    ]
    traj = trajectory.mrs_trajectory(distances, "1", "Ball", platform_points=[30, None, 34])
    path = tmp_path / "trajectory_1_Ball.csv"
    artifacts.write_trajectory_csv(traj, path)

    lines = path.read_text().splitlines()
    assert lines[0] == "instance,mrs_hellinger,mrs_kl,rate_hellinger,rate_kl,platform_points"
    assert lines[1] == "1,0.0,0.0,,,30"

    loaded = artifacts.read_trajectory_csv(path, "1", "Ball")
    assert loaded.mrs_hellinger == pytest.approx(traj.mrs_hellinger)
    assert loaded.platform_points == [30, None, 34]


def test_realization_files(tmp_path, sample_set):
    realization = graph.realize_graph(sample_set, 0.0)
    labels = ["a", "b", "c", "d"]
    artifacts.write_realization(realization, sample_set.edge_freq, labels, tmp_path / "edges.csv", tmp_path / "adj.csv")

    edges = pd.read_csv(tmp_path / "edges.csv")
    assert len(edges) == 6
    assert edges.iloc[0][["source", "target"]].tolist() == ["a", "b"]
    assert edges.iloc[0]["nu"] == pytest.approx(sample_set.edge_freq[0])

    adjacency = pd.read_csv(tmp_path / "adj.csv", index_col=0)
    assert adjacency.to_numpy().sum() == 12


def test_plot_data_shape():
    traj = trajectory.mrs_trajectory([], "1", "Ball")
    data = artifacts.plot_data([traj], {})

    assert data["trajectories"][0]["x"] == [1]
    assert data["recommendation"] == {}
