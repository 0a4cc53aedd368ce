import json
import logging
import re
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from recovgraph.core.errors import DataError, SessionParseError, SessionTooShortError
from recovgraph.models.schemas import ManifestEntry, RawSession, SessionSeries, joint_names_for

logger = logging.getLogger(__name__)

SESSION_FILE_PATTERN = re.compile(r"^P(?P<patient>[^_]+)_G(?P<game>.+)_J(?P<instance>\d+)\.csv$")
MIN_FRAMES = 3
DEGENERATE_STD = 1e-12


def parse_session_filename(path: Path) -> Optional[ManifestEntry]:
    match = SESSION_FILE_PATTERN.match(Path(path).name)
    if not match:
        return None
    return ManifestEntry(
        path=Path(path),
        patient_id=match["patient"],
        game_id=match["game"],
        instance=int(match["instance"]),
    )


def load_manifest(path: Path) -> List[ManifestEntry]:
    """Read a manifest JSON, or scan a directory for P<id>_G<name>_J<j>.csv files."""
    path = Path(path)
    if path.is_dir():
        entries = [e for e in (parse_session_filename(p) for p in sorted(path.glob("*.csv"))) if e]
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        entries = []
        for item in data.get("sessions", []):
            entry = ManifestEntry(**item)
            if not entry.path.is_absolute():
                entry.path = path.parent / entry.path
            entries.append(entry)

    entries.sort(key=lambda e: (e.patient_id, e.game_id, e.instance))
    logger.info("Loaded %d session entries from %s", len(entries), path)
    return entries


def _expected_columns(n_joints: int) -> tuple:
    xyz = [f"joint{i}_{axis}" for i in range(1, n_joints + 1) for axis in "xyz"]
    norms = [f"joint{i}_r" for i in range(1, n_joints + 1)]
    return xyz, norms


def read_session_csv(entry: ManifestEntry, n_joints: int = 20) -> RawSession:
    xyz_cols, norm_cols = _expected_columns(n_joints)
    try:
        df = pd.read_csv(entry.path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as e:
        raise SessionParseError(f"{entry.path}: malformed row ({e})")

    header = [c.strip() for c in df.columns]
    if header == xyz_cols:
        width = 3 * n_joints
    elif header == norm_cols:
        width = n_joints
    else:
        raise SessionParseError(
            f"{entry.path}: header must be joint<i>_x,joint<i>_y,joint<i>_z or joint<i>_r for {n_joints} joints"
        )

    # short rows are padded with NaN by the parser; empty cells stay ""
    missing = df.isna() | (df == "")
    if missing.values.any():
        frame = int(np.argmax(missing.values.any(axis=1)))
        raise SessionParseError(f"{entry.path}: frame {frame} does not have {width} values")

    try:
        values = df.to_numpy().astype(float)
    except ValueError as e:
        raise SessionParseError(f"{entry.path}: non-numeric value ({e})")

    if not np.all(np.isfinite(values)):
        frame = int(np.argmax(~np.isfinite(values).all(axis=1)))
        raise DataError(f"{entry.path}: non-finite coordinate in frame {frame}")

    if width == n_joints:
        # pre-normed variant: carried as (r, 0, 0) so the norm stage is unchanged
        frames = np.zeros((values.shape[0], n_joints, 3))
        frames[:, :, 0] = values
    else:
        frames = values.reshape(values.shape[0], n_joints, 3)

    return RawSession(
        patient_id=entry.patient_id,
        game_id=entry.game_id,
        instance=entry.instance,
        frames=frames,
        sample_interval=entry.sample_interval,
    )


def location_norms(raw: RawSession) -> np.ndarray:
    if not np.all(np.isfinite(raw.frames)):
        raise DataError(f"{raw.key}: non-finite coordinate")
    return np.linalg.norm(raw.frames, axis=2)


def standardize(
    norms: np.ndarray,
    patient_id: str = "synthetic",
    game_id: str = "synthetic",
    instance: int = 1,
    joint_names: Optional[List[str]] = None,
) -> SessionSeries:
    norms = np.asarray(norms, dtype=float)
    q, n_joints = norms.shape
    if q < MIN_FRAMES:
        raise SessionTooShortError(f"session has {q} frames, at least {MIN_FRAMES} are required")

    means = norms.sum(axis=0) / q
    stds = np.sqrt(((norms - means) ** 2).sum(axis=0) / (q - 1))
    degenerate = stds <= DEGENERATE_STD * np.maximum(1.0, np.abs(means))

    values = np.zeros_like(norms)
    live = ~degenerate
    values[:, live] = (norms[:, live] - means[live]) / stds[live]

    if degenerate.any():
        logger.warning(
            "Session P%s_G%s_J%d: %d constant joint column(s) set to zero",
            patient_id, game_id, instance, int(degenerate.sum()),
        )

    return SessionSeries(
        patient_id=patient_id,
        game_id=game_id,
        instance=instance,
        values=values,
        joint_names=joint_names or joint_names_for(n_joints),
        column_means=means,
        column_stds=stds,
        degenerate=degenerate.tolist(),
    )


def prepare_session(raw: RawSession) -> SessionSeries:
    return standardize(
        location_norms(raw),
        patient_id=raw.patient_id,
        game_id=raw.game_id,
        instance=raw.instance,
    )
