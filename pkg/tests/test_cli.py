from pathlib import Path

import pytest

from gbec import io, reporting
from gbec.cli import main
from gbec.geometry import RigidTransform, rotation_angle_between, translation_distance

DOCS = Path(__file__).resolve().parent.parent / "docs"


SMALL_CONFIG = """campaign: small
seed: 77
scene:
  attachment: builtin:tms_holder
  handeye:
    translation_mm: 32.0 -18.0 116.0
    rotation_rpy_deg: 8.0 -12.0 25.0
  camera_from_base:
    translation_mm: -1450.0 260.0 840.0
    rotation_rpy_deg: 2.0 41.0 -97.0
noise:
  tracker_sigma_mm: 0.25
workspaces:
  ws_a:
    center_mm: 620.0 90.0 410.0
    n_poses: 20
  ws_b:
    center_mm: 340.0 -420.0 520.0
    n_poses: 20
methods:
  gbec:
    trials: 4
  axxb:
    trials: 4
alignment:
  n_alignments: 4
"""


def _write_small_config(tmp_path):
    path = tmp_path / "small.config"
    path.write_text(SMALL_CONFIG)
    return path


def _simulate(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(_write_small_config(tmp_path)), "--out", str(out)])
    assert code == 0
    return out


def test_simulate_writes_archive_and_campaign(tmp_path):
    out = _simulate(tmp_path)
    assert (out / "archive.jsonl").exists()
    assert (out / "campaign.json").exists()
    trials = io.read_archive(out / "archive.jsonl")
    assert len(trials) == (4 + 4) * 2


def test_simulate_is_reproducible_and_seed_sensitive(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out3 = tmp_path / "c"
    cfg = _write_small_config(tmp_path)
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "archive.jsonl").read_bytes() == (out2 / "archive.jsonl").read_bytes()
    assert (out1 / "campaign.json").read_bytes() == (out2 / "campaign.json").read_bytes()
    assert main(["simulate", "--config", str(cfg), "--out", str(out3), "--seed", "78"]) == 0
    assert (out1 / "archive.jsonl").read_bytes() != (out3 / "archive.jsonl").read_bytes()


def test_simulate_malformed_config_exits_2_without_output(tmp_path):
    bad = tmp_path / "bad.config"
    bad.write_text("campaign mini\n")
    out = tmp_path / "nope"
    assert main(["simulate", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()


def test_calibrate_gbec_round_trips_scene_truth(tmp_path):
    out = tmp_path / "cal"
    code = main([
        "calibrate",
        "--spec", "builtin:tms_holder",
        "--dig", str(DOCS / "example_digitization.txt"),
        "--out", str(out),
    ])
    assert code == 0
    record = io.read_transform_record(out / "transform.txt")
    truth = RigidTransform.from_rpy_deg((8.0, -12.0, 25.0), (32.0, -18.0, 116.0))
    assert rotation_angle_between(record.transform, truth) <= 1e-9
    assert translation_distance(record.transform, truth) <= 1e-9
    headers, rows = reporting.parse_csv((out / "residuals.csv").read_text())
    assert headers[0] == "feature"
    assert len(rows) == 8 + 1  # per groove plus overall


def test_calibrate_axxb_from_pose_file(tmp_path):
    out = tmp_path / "calax"
    code = main(["calibrate", "--method", "axxb", "--dig", str(DOCS / "example_poses.txt"), "--out", str(out)])
    assert code == 0
    record = io.read_transform_record(out / "transform.txt")
    truth = RigidTransform.from_rpy_deg((8.0, -12.0, 25.0), (32.0, -18.0, 116.0))
    assert rotation_angle_between(record.transform, truth) <= 1e-9


def test_calibrate_degenerate_digitization_exits_4(tmp_path):
    dig = io.read_digitization(str(DOCS / "example_digitization.txt"))
    clouds = dict(dig.clouds)
    clouds["groove_1"] = clouds["groove_1"][:1]
    from gbec.pipelines import DigitizationSet

    broken = tmp_path / "broken.txt"
    io.write_digitization(broken, DigitizationSet(clouds, attachment=dig.attachment,
                                                  points_per_groove=dig.points_per_groove))
    out = tmp_path / "cal"
    code = main(["calibrate", "--spec", "builtin:tms_holder", "--dig", str(broken), "--out", str(out)])
    assert code == 4
    assert not (out / "transform.txt").exists()


def test_report_kinds_write_tables_and_figures(tmp_path):
    out = _simulate(tmp_path)
    for kind in ("residuals", "fle", "repeatability", "workspace", "alignment"):
        assert main(["report", str(out), "--report", kind]) == 0
        assert (out / f"{kind}.csv").exists()
        assert (out / f"{kind}.txt").exists()
        assert (out / f"{kind}.png").exists()
    assert (out / "workspace_vectors.csv").exists()
    assert (out / "residuals_series.csv").exists()
    assert (out / "fle_series.csv").exists()
    headers, rows = reporting.parse_csv((out / "residuals_series.csv").read_text())
    assert headers == ["workspace", "trial", "feature", "mean_mm"]
    assert len(rows) == 8 * 8  # 8 gbec trials x 8 grooves


def test_report_machine_and_human_tables_agree(tmp_path):
    out = _simulate(tmp_path)
    assert main(["report", str(out), "--report", "repeatability"]) == 0
    headers, rows = reporting.parse_csv((out / "repeatability.csv").read_text())
    text_lines = [
        ln for ln in (out / "repeatability.txt").read_text().splitlines()[2:] if ln.strip()
    ]
    text_rows = [ln.split() for ln in text_lines[1:]]
    for csv_row, txt_row in zip(rows, text_rows):
        for csv_cell, txt_cell in zip(csv_row, txt_row):
            try:
                a = float(csv_cell)
                b = float(txt_cell)
            except ValueError:
                assert csv_cell == txt_cell
                continue
            assert b == pytest.approx(a, rel=1e-4, abs=1e-9)


def test_report_errors(tmp_path):
    out = _simulate(tmp_path)
    assert main(["report", str(out), "--report", "nonsense"]) == 5
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "archive.jsonl").write_text("")
    assert main(["report", str(empty), "--report", "residuals"]) == 5
    assert main(["report", str(tmp_path / "missing"), "--report", "residuals"]) == 5


def test_bundled_campaign_counts(tmp_path):
    out = tmp_path / "tms57"
    assert main(["simulate", "--config", "builtin:tms57", "--out", str(out)]) == 0
    trials = io.read_archive(out / "archive.jsonl")
    methods = {}
    for t in trials:
        methods[t.method] = methods.get(t.method, 0) + 1
    assert methods == {"gbec": 57, "axxb": 39}

    out2 = tmp_path / "fem"
    assert main(["simulate", "--config", "builtin:femoroplasty39", "--out", str(out2)]) == 0
    trials2 = io.read_archive(out2 / "archive.jsonl")
    counts = {}
    for t in trials2:
        counts[t.method] = counts.get(t.method, 0) + 1
    assert counts == {"gbec": 39, "axxb": 39}
