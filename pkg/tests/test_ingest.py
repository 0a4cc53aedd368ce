import numpy as np
import pytest

from recovgraph.core.errors import DataError, SessionParseError, SessionTooShortError
from recovgraph.models.schemas import ManifestEntry, RawSession
from recovgraph.services import ingest

XYZ_HEADER = "joint1_x,joint1_y,joint1_z,joint2_x,joint2_y,joint2_z"


def _entry(path, instance=1):
    return ManifestEntry(path=path, patient_id="3071", game_id="Airplane", instance=instance)


def _write(tmp_path, body, name="P3071_GAirplane_J1.csv"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


def test_parse_session_filename():
    entry = ingest.parse_session_filename("data/P3071_GAirplane_J4.csv")

    assert entry.patient_id == "3071"
    assert entry.game_id == "Airplane"
    assert entry.instance == 4
    assert entry.key == "P3071_GAirplane_J4"
    assert ingest.parse_session_filename("notes.csv") is None


def test_load_manifest_scans_directory_in_instance_order(tmp_path):
    for j in (3, 1, 2):
        _write(tmp_path, XYZ_HEADER + "\n", name=f"P3071_GAirplane_J{j}.csv")
    _write(tmp_path, "unrelated\n", name="readme.csv")

    entries = ingest.load_manifest(tmp_path)

    assert [e.instance for e in entries] == [1, 2, 3]


def test_load_manifest_resolves_relative_paths(tmp_path):
    (tmp_path / "manifest.json").write_text(
        '{"sessions": [{"path": "a.csv", "patient_id": "1", "game_id": "Ball", "instance": 1, "platform_points": 30}]}',
        encoding="utf-8",
    )

    entries = ingest.load_manifest(tmp_path / "manifest.json")

    assert entries[0].path == tmp_path / "a.csv"
    assert entries[0].platform_points == 30


def test_read_session_csv_xyz(tmp_path):
    path = _write(tmp_path, XYZ_HEADER + "\n1,2,2,0,3,4\n2,0,0,0,0,1\n")

    raw = ingest.read_session_csv(_entry(path), n_joints=2)

    assert raw.frames.shape == (2, 2, 3)
    np.testing.assert_allclose(ingest.location_norms(raw), [[3.0, 5.0], [2.0, 1.0]])


def test_read_session_csv_prenormed_variant(tmp_path):
    path = _write(tmp_path, "joint1_r,joint2_r\n1.5,2.5\n3.0,4.0\n")

    raw = ingest.read_session_csv(_entry(path), n_joints=2)

    np.testing.assert_allclose(ingest.location_norms(raw), [[1.5, 2.5], [3.0, 4.0]])


def test_short_row_names_the_frame(tmp_path):
    path = _write(tmp_path, XYZ_HEADER + "\n1,2,2,0,3,4\n1,2,2,0,3\n")

    with pytest.raises(SessionParseError, match="frame 1"):
        ingest.read_session_csv(_entry(path), n_joints=2)


def test_non_numeric_value_is_a_parse_error(tmp_path):
    path = _write(tmp_path, XYZ_HEADER + "\n1,2,x,0,3,4\n")

    with pytest.raises(SessionParseError):
        ingest.read_session_csv(_entry(path), n_joints=2)


def test_wrong_header_is_a_parse_error(tmp_path):
    path = _write(tmp_path, "a,b,c\n1,2,3\n")

    with pytest.raises(SessionParseError, match="header"):
        ingest.read_session_csv(_entry(path), n_joints=2)


def test_non_finite_value_is_a_data_error(tmp_path):
    path = _write(tmp_path, XYZ_HEADER + "\n1,2,2,0,3,4\n1,inf,2,0,3,4\n")

    with pytest.raises(DataError, match="frame 1"):
        ingest.read_session_csv(_entry(path), n_joints=2)


def test_standardize_zero_mean_unit_sample_std():
    rng = np.random.default_rng(3)
    norms = rng.normal(5.0, 2.0, size=(50, 3))

    series = ingest.standardize(norms)

    np.testing.assert_allclose(series.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(series.values.std(axis=0, ddof=1), 1.0, rtol=1e-12)
    assert series.degenerate == [False, False, False]


def test_constant_column_is_zeroed_and_flagged():
    norms = np.array([[1.0, 2.0], [2.0, 2.0], [4.0, 2.0]])

    series = ingest.standardize(norms)

    assert series.degenerate == [False, True]
    np.testing.assert_array_equal(series.values[:, 1], 0.0)


def test_too_few_frames():
    with pytest.raises(SessionTooShortError):
        ingest.standardize(np.ones((2, 3)))


def test_default_joint_labels_for_twenty_joints():
    series = ingest.standardize(np.random.default_rng(0).normal(size=(10, 20)))

    assert series.joint_names[0] == "hipcentre"
    assert series.joint_names[-1] == "shouldercentre"


def test_location_norm_examples():
    frames = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 4.0, 12.0]]])
    raw = RawSession(patient_id="1", game_id="Ball", instance=1, frames=frames)

    np.testing.assert_allclose(ingest.location_norms(raw), [[0.0, 1.0, 13.0]])


def test_standardize_worked_column():
    series = ingest.standardize(np.array([[1.0], [2.0], [3.0]]))

    assert series.column_means[0] == 2.0
    assert series.column_stds[0] == 1.0
    np.testing.assert_allclose(series.values[:, 0], [-1.0, 0.0, 1.0])

    again = ingest.standardize(series.values)
    np.testing.assert_allclose(again.values, series.values, atol=1e-12)


def test_location_norms_ignore_coordinate_signs():
    frames = np.random.default_rng(9).normal(size=(25, 4, 3))
    raw = RawSession(patient_id="1", game_id="Ball", instance=1, frames=frames)
    flipped = raw.model_copy(update={"frames": -frames})

    np.testing.assert_array_equal(ingest.location_norms(flipped), ingest.location_norms(raw))
