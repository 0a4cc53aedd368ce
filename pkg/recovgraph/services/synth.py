import json
import logging
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from recovgraph.core.errors import SpecError
from recovgraph.models.artifacts import write_session_csv
from recovgraph.models.schemas import ArrayModel, RawSession, session_key

logger = logging.getLogger(__name__)

# keeps r + offset positive so the norm never folds the Gaussian channel
LOCATION_OFFSET = 10.0
# spawn-key namespace of session data; graph sampling uses 1 and 2
DATA_STREAM = 0


def equicorrelation(n_joints: int, rho: float) -> np.ndarray:
    matrix = np.full((n_joints, n_joints), float(rho))
    np.fill_diagonal(matrix, 1.0)
    return matrix


def paired_correlation(n_joints: int, rho: float) -> np.ndarray:
    """Joints (0,1), (2,3), ... correlated at rho, all other pairs independent."""
    matrix = np.eye(n_joints)
    for s in range(0, n_joints - 1, 2):
        matrix[s, s + 1] = matrix[s + 1, s] = rho
    return matrix


STRUCTURES = {"equicorrelated": equicorrelation, "paired": paired_correlation}


class SynthSpec(ArrayModel):
    patient_id: str = "S1"
    game_id: str = "Synthetic"
    n_joints: int = Field(default=20, ge=2)
    n_frames: int = Field(default=1000, ge=3)
    seed: int = Field(default=0, ge=0, lt=2**64)
    population_correlation: Optional[np.ndarray] = None
    drift: Optional[List[np.ndarray]] = None
    # shorthand: build the matrices from a structure and correlation levels
    structure: Literal["equicorrelated", "paired"] = "equicorrelated"
    rho: Optional[float] = Field(default=None, gt=-1, lt=1)
    drift_rhos: Optional[List[float]] = None
    n_instances: Optional[int] = Field(default=None, ge=1)
    platform_points: Optional[List[int]] = None

    @field_validator("population_correlation", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        return None if v is None else np.asarray(v, dtype=float)

    @field_validator("drift", mode="before")
    @classmethod
    def _as_matrices(cls, v):
        return None if v is None else [np.asarray(m, dtype=float) for m in v]

    @model_validator(mode="after")
    def _resolve(self) -> "SynthSpec":
        build = STRUCTURES[self.structure]
        if self.population_correlation is None:
            if self.rho is None and not self.drift_rhos:
                raise ValueError("give population_correlation, rho or drift_rhos")
            self.population_correlation = build(self.n_joints, self.rho if self.rho is not None else self.drift_rhos[0])
        if self.drift is None and self.drift_rhos:
            self.drift = [build(self.n_joints, r) for r in self.drift_rhos]
        if self.n_instances is None:
            self.n_instances = len(self.drift) if self.drift else 1
        return self

    def correlation_for(self, instance: int) -> np.ndarray:
        if self.drift:
            if not 1 <= instance <= len(self.drift):
                raise SpecError(f"instance {instance} outside the drift schedule of {len(self.drift)}")
            return self.drift[instance - 1]
        return self.population_correlation


def _cholesky_factor(matrix: np.ndarray, n_joints: int) -> np.ndarray:
    if matrix.shape != (n_joints, n_joints):
        raise SpecError(f"correlation matrix must be {n_joints}x{n_joints}, got {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=1e-12) or not np.allclose(np.diag(matrix), 1.0):
        raise SpecError("correlation matrix must be symmetric with unit diagonal")
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise SpecError("correlation matrix is not positive definite")


def generate_session(spec: SynthSpec, instance: int) -> RawSession:
    factor = _cholesky_factor(spec.correlation_for(instance), spec.n_joints)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(DATA_STREAM, instance)))
    channels = rng.standard_normal((spec.n_frames, spec.n_joints)) @ factor.T

    frames = np.zeros((spec.n_frames, spec.n_joints, 3))
    frames[:, :, 0] = channels + LOCATION_OFFSET
    return RawSession(
        patient_id=spec.patient_id,
        game_id=spec.game_id,
        instance=instance,
        frames=frames,
    )


def write_cohort(specs: List[SynthSpec], output_dir: Path) -> Path:
    """Write every instance of every spec as a session CSV plus a manifest.json."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    sessions = []
    for spec in specs:
        for instance in range(1, spec.n_instances + 1):
            raw = generate_session(spec, instance)
            name = f"{session_key(spec.patient_id, spec.game_id, instance)}.csv"
            write_session_csv(raw, output_dir / name)
            entry = {
                "path": name,
                "patient_id": spec.patient_id,
                "game_id": spec.game_id,
                "instance": instance,
            }
            if spec.platform_points and instance <= len(spec.platform_points):
                entry["platform_points"] = spec.platform_points[instance - 1]
            sessions.append(entry)

    manifest = output_dir / "manifest.json"
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump({"sessions": sessions}, fh, indent=2)
    logger.info("Wrote %d synthetic sessions to %s", len(sessions), output_dir)
    return manifest


def load_specs(path: Path) -> List[SynthSpec]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    items = data if isinstance(data, list) else data.get("specs", [data])
    return [SynthSpec(**item) for item in items]
