import numpy as np
import pytest

from recovgraph.core.config import RunConfig
from recovgraph.models.schemas import GraphSampleSet, Proposal
from recovgraph.services import synth

DRIFT_RHOS = [0.9, 0.75, 0.6, 0.45, 0.3, 0.1]
PLATFORM_POINTS = [40, 44, 47, 52, 55, 60]


@pytest.fixture
def drift_spec():
    return synth.SynthSpec(
        patient_id="S1",
        game_id="Synthetic",
        n_joints=4,
        n_frames=300,
        seed=11,
        structure="paired",
        drift_rhos=DRIFT_RHOS,
        platform_points=PLATFORM_POINTS,
    )


@pytest.fixture
def cohort_manifest(tmp_path, drift_spec):
    return synth.write_cohort([drift_spec], tmp_path / "cohort")


@pytest.fixture
def small_config(tmp_path, cohort_manifest):
    return RunConfig(
        manifest_path=cohort_manifest,
        output_dir=tmp_path / "out",
        n_samples=2000,
        n_joints=4,
        seed=7,
        threads=1,
    )


def constant_sample_set(n_samples: int, log_value: float, g: bool = True) -> GraphSampleSet:
    """Single-edge sample set whose every draw has the same posterior."""
    edges = np.full((n_samples, 1), g)
    return GraphSampleSet(
        n_samples=n_samples,
        n_nodes=2,
        edges=edges,
        log_posterior=np.full(n_samples, log_value),
        edge_freq=edges.mean(axis=0),
        proposal=Proposal.uniform,
        rng_seed=0,
    )
