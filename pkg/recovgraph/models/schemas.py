from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_JOINT_NAMES = [
    "hipcentre", "spine", "head",
    "shoulderleft", "elbowleft", "wristleft", "handleft",
    "shoulderright", "elbowright", "wristright", "handright",
    "hipleft", "kneeleft", "ankleleft", "footleft",
    "hipright", "kneeright", "ankleright", "footright",
    "shouldercentre",
]


def joint_names_for(n_joints: int) -> List[str]:
    if n_joints == len(DEFAULT_JOINT_NAMES):
        return list(DEFAULT_JOINT_NAMES)
    return [f"joint{i}" for i in range(1, n_joints + 1)]


def session_key(patient_id: str, game_id: str, instance: int) -> str:
    return f"P{patient_id}_G{game_id}_J{instance}"


class Proposal(str, Enum):
    uniform = "uniform"
    bernoulli = "bernoulli"


class SessionStatus(str, Enum):
    pending = "pending"
    running = "running"
    completed = "completed"
    failed = "failed"


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class ManifestEntry(BaseModel):
    path: Path
    patient_id: str
    game_id: str
    instance: int = Field(ge=1)
    platform_points: Optional[int] = None
    sample_interval: Optional[float] = Field(default=None, gt=0)

    @property
    def key(self) -> str:
        return session_key(self.patient_id, self.game_id, self.instance)


class RawSession(ArrayModel):
    patient_id: str
    game_id: str
    instance: int = Field(ge=1)
    frames: np.ndarray  # (q, S, 3) coordinates in metres
    sample_interval: Optional[float] = Field(default=None, gt=0)

    @field_validator("frames", mode="before")
    @classmethod
    def _as_coordinates(cls, v) -> np.ndarray:
        frames = np.asarray(v, dtype=float)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (q, S, 3), got {frames.shape}")
        return frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    @property
    def key(self) -> str:
        return session_key(self.patient_id, self.game_id, self.instance)


class SessionSeries(ArrayModel):
    patient_id: str
    game_id: str
    instance: int = Field(ge=1)
    values: np.ndarray  # (q, S) standardised location norms
    joint_names: List[str]
    column_means: np.ndarray
    column_stds: np.ndarray
    degenerate: List[bool]

    @model_validator(mode="after")
    def _check_shapes(self) -> "SessionSeries":
        q, s = self.values.shape
        if len(self.joint_names) != s or len(self.degenerate) != s:
            raise ValueError(f"expected {s} joint names and degenerate flags")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("standardised series contains non-finite values")
        return self

    @property
    def q(self) -> int:
        return self.values.shape[0]

    @property
    def n_joints(self) -> int:
        return self.values.shape[1]

    @property
    def key(self) -> str:
        return session_key(self.patient_id, self.game_id, self.instance)


class CorrelationStructure(ArrayModel):
    pearson: np.ndarray
    precision: np.ndarray
    partial: np.ndarray
    ridge_applied: float = Field(default=0.0, ge=0)


class GraphSampleSet(ArrayModel):
    n_samples: int = Field(ge=1)
    n_nodes: int = Field(ge=2)
    edges: np.ndarray  # (N, E) bool, pairs in row-major upper-triangle order
    log_posterior: np.ndarray
    edge_freq: np.ndarray
    proposal: Proposal
    rng_seed: int = Field(ge=0, lt=2**64)
    proposal_clamped: bool = False
    acceptance_rate: Optional[np.ndarray] = None
    direct_pairs: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_shapes(self) -> "GraphSampleSet":
        n_edges = self.n_nodes * (self.n_nodes - 1) // 2
        if self.edges.shape != (self.n_samples, n_edges):
            raise ValueError(
                f"edges must have shape ({self.n_samples}, {n_edges}), got {self.edges.shape}"
            )
        if self.log_posterior.shape != (self.n_samples,):
            raise ValueError("log_posterior must hold one value per sample")
        if self.edge_freq.shape != (n_edges,):
            raise ValueError("edge_freq must hold one value per node pair")
        if not np.all(np.isfinite(self.log_posterior)):
            raise ValueError("log_posterior contains non-finite values")
        return self

    @property
    def n_edges(self) -> int:
        return self.edges.shape[1]


class GraphRealization(ArrayModel):
    adjacency: np.ndarray
    tau: float = Field(ge=0, le=1)

    def edge_list(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(rows.tolist(), cols.tolist()))


class DistanceResult(BaseModel):
    hellinger: float = Field(ge=0)
    kl: float
    n_samples: int = Field(ge=1)
    scale_hellinger: float = 1e15
    scale_kl: float = 1e25
    instance_pair: Optional[Tuple[int, int]] = None


class RecoveryTrajectory(BaseModel):
    patient_id: str
    game_id: str
    mrs_hellinger: List[float]
    mrs_kl: List[float]
    rate_hellinger: List[float]
    rate_kl: List[float]
    platform_points: Optional[List[Optional[int]]] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "RecoveryTrajectory":
        n = len(self.mrs_hellinger)
        if len(self.mrs_kl) != n or len(self.rate_hellinger) != n - 1 or len(self.rate_kl) != n - 1:
            raise ValueError("trajectory vectors have inconsistent lengths")
        if self.platform_points is not None and len(self.platform_points) != n:
            raise ValueError("platform_points must have one entry per instance")
        return self

    @property
    def n_instances(self) -> int:
        return len(self.mrs_hellinger)


class RecoveryPoint(BaseModel):
    patient_id: str
    game_id: str
    alpha: float
    initial_score: int
    n_instances: int = Field(ge=1)


class RecommendationSeries(BaseModel):
    game_id: str
    patients: List[str] = Field(default_factory=list)
    initial_scores: List[int] = Field(default_factory=list)
    alphas: List[float] = Field(default_factory=list)

    def pairs(self) -> List[Tuple[int, float]]:
        return list(zip(self.initial_scores, self.alphas))


class GameSummary(BaseModel):
    game_id: str
    n_patients: int
    mean_alpha: Optional[float] = None
    alpha_spread: Optional[float] = None
    slope: Optional[float] = None
