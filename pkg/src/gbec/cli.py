"""Command-line front end.

Subcommands: ``simulate`` runs an experiment campaign from a config file
and archives every trial; ``calibrate`` solves one calibration from a
digitization or pose-stream file; ``report`` turns an archive into tables
(CSV + aligned text) and figures (PNG).

Exit codes: 0 ok, 2 config/input validation error, 3 simulation or solver
failure, 4 calibration degeneracy, 5 report error.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import figures, io, metrics, reporting
from .errors import ConfigInvalid, GbecError
from .models import load_attachment
from .pipelines import GBEC, AXXB, build_motion_pairs, run_gbec, solve_axxb
from .simulator import run_experiment_campaign
from .textformat import atomic_write_text


def _fail(message: str, code: int) -> int:
    print(f"gbec: {message}", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    try:
        config = io.load_experiment_config(args.config)
    except ConfigInvalid as exc:
        return _fail(f"config error: {exc}", 2)
    if args.seed is not None:
        config.seed = args.seed
        config.noise = replace(config.noise, seed=args.seed)
    out = args.out or config.output or config.campaign
    try:
        report = run_experiment_campaign(config)
    except GbecError as exc:
        return _fail(f"simulation failed: {exc}", 3)

    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_archive(outdir / "archive.jsonl", report.trials)
    io.write_campaign_report(outdir / "campaign.json", report)
    counts = ", ".join(f"{n * len(report.workspaces)} {m}" for m, n in report.methods.items())
    print(f"campaign {report.campaign}: archived {counts} trials to {outdir}")
    return 0


def cmd_calibrate(args) -> int:
    try:
        if args.method == GBEC:
            if not args.spec:
                return _fail("calibrate --method gbec requires --spec", 2)
            spec = load_attachment(args.spec)
            dig = io.read_digitization(args.dig)
            trial = run_gbec(spec, dig)
            residual_headers = ["feature", "n", "mean_mm", "std_mm"]
            rep = metrics.landmark_residuals(trial)
            residual_rows = [[fid, s.n, s.mean, s.std] for fid, s in rep.per_feature.items()]
            residual_rows.append(["OVERALL", len(rep.per_feature), rep.overall_mean, rep.overall_std])
            rms = float(trial.registration.rms_residual)
            meta = {"attachment": spec.name, "features": str(len(spec.feature_ids()))}
        else:
            poses = io.read_poses(args.dig)
            pairs = build_motion_pairs(poses)
            trial = solve_axxb(pairs)
            residual_headers = ["pair", "rotation_residual_deg", "translation_residual_mm"]
            residual_rows = [
                [i, float(r), float(t)]
                for i, (r, t) in enumerate(
                    zip(trial.axxb.rotation_residual_deg, trial.axxb.translation_residual_mm)
                )
            ]
            rms = float(np.sqrt(np.mean(trial.axxb.translation_residual_mm**2)))
            meta = {"pose_samples": str(len(poses)), "pairs": str(trial.axxb.n_pairs)}
    except ConfigInvalid as exc:
        return _fail(f"input error: {exc}", 2)
    except GbecError as exc:
        return _fail(f"calibration failed: {exc}", 4)

    meta["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    record = io.TransformRecord(trial.result, method=args.method, rms_residual=rms, metadata=meta)
    io.write_transform_record(outdir / "transform.txt", record)
    atomic_write_text(outdir / "residuals.csv", reporting.render_csv(residual_headers, residual_rows))
    print(f"{args.method} calibration written to {outdir} (rms residual {rms:.4f} mm)")
    return 0


def _report_inputs(archive_arg: str):
    path = Path(archive_arg)
    if path.is_dir():
        archive_path = path / "archive.jsonl"
        campaign_path = path / "campaign.json"
    else:
        archive_path = path
        campaign_path = path.parent / "campaign.json"
    if not archive_path.exists():
        raise ConfigInvalid(f"archive not found: {archive_path}")
    reports = io.read_archive(archive_path)
    alignment_errors = []
    if campaign_path.exists():
        alignment_errors = io.read_campaign_report(campaign_path).alignment_errors
    return reports, alignment_errors, archive_path.parent


def _render_report_figure(kind: str, reports, alignment_errors, rows, png_path) -> None:
    if kind == "residuals":
        series = {}
        for rep in reports:
            if rep.method == GBEC:
                for fid, vals in rep.per_feature_residuals.items():
                    series.setdefault(fid, []).append(float(np.mean(vals)))
        figures.save_residuals_figure(png_path, series)
    elif kind == "fle":
        features = [r[0] for r in rows]
        figures.save_fle_figure(
            png_path, features, [r[2] for r in rows], [r[3] for r in rows], [r[4] for r in rows]
        )
    elif kind == "repeatability":
        figures.save_repeatability_figure(
            png_path, [r[0] for r in rows], [r[3:6] for r in rows], [r[6:9] for r in rows]
        )
    elif kind == "workspace":
        _, vec_rows = reporting.rows_workspace_vectors(reports)
        groups: dict[str, list] = {}
        for row in vec_rows:
            groups.setdefault(f"{row[0]}/{row[1]}", []).append(row[3:])
        figures.save_workspace_figure(png_path, groups)
    elif kind == "alignment":
        table = metrics.alignment_table(alignment_errors)
        figures.save_alignment_figure(png_path, table.mean, table.std)


def cmd_report(args) -> int:
    kind = args.report
    if kind not in reporting.REPORT_KINDS:
        return _fail(f"unknown report kind {kind!r}; choose from {reporting.REPORT_KINDS}", 5)
    try:
        reports, alignment_errors, default_out = _report_inputs(args.archive)
    except ConfigInvalid as exc:
        return _fail(str(exc), 5)
    if not reports:
        return _fail("no trials in archive", 5)

    try:
        if kind == "residuals":
            headers, rows = reporting.rows_residuals(reports)
        elif kind == "fle":
            headers, rows = reporting.rows_fle(reports)
        elif kind == "repeatability":
            headers, rows = reporting.rows_repeatability(reports, args.drop_outliers)
        elif kind == "workspace":
            headers, rows = reporting.rows_workspace(reports)
        else:
            headers, rows = reporting.rows_alignment(alignment_errors)
    except ValueError as exc:
        return _fail(str(exc), 5)

    outdir = Path(args.out) if args.out else default_out
    outdir.mkdir(parents=True, exist_ok=True)

    # render the figure first so a plotting failure leaves nothing behind
    fd, tmp_png = tempfile.mkstemp(dir=outdir, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        _render_report_figure(kind, reports, alignment_errors, rows, tmp_png)
        atomic_write_text(outdir / f"{kind}.csv", reporting.render_csv(headers, rows))
        atomic_write_text(
            outdir / f"{kind}.txt", reporting.render_table(headers, rows, title=f"{kind} report")
        )
        series_builders = {
            "residuals": ("residuals_series.csv", reporting.rows_residuals_series),
            "fle": ("fle_series.csv", reporting.rows_fle_series),
            "workspace": ("workspace_vectors.csv", reporting.rows_workspace_vectors),
        }
        if kind in series_builders:
            name, builder = series_builders[kind]
            s_headers, s_rows = builder(reports)
            atomic_write_text(outdir / name, reporting.render_csv(s_headers, s_rows))
        os.replace(tmp_png, outdir / f"{kind}.png")
    except BaseException:
        if os.path.exists(tmp_png):
            os.unlink(tmp_png)
        raise
    print(f"{kind} report written to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbec",
        description="Geometry-based end-effector calibration: simulate, calibrate, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment campaign from a config file")
    sim.add_argument("--config", required=True, help="config path or builtin:<name>")
    sim.add_argument("--out", help="output directory (overrides the config)")
    sim.add_argument("--seed", type=int, help="master seed (overrides the config)")
    sim.set_defaults(func=cmd_simulate)

    cal = sub.add_parser("calibrate", help="solve one calibration from data files")
    cal.add_argument("--spec", help="attachment spec path or builtin:<name> (gbec)")
    cal.add_argument("--dig", required=True, help="digitization file (gbec) or pose-stream file (axxb)")
    cal.add_argument("--method", choices=(GBEC, AXXB), default=GBEC)
    cal.add_argument("--out", required=True, help="output directory")
    cal.set_defaults(func=cmd_calibrate)

    rep = sub.add_parser("report", help="emit tables and figures from a trial archive")
    rep.add_argument("archive", help="archive directory or archive.jsonl path")
    rep.add_argument("--report", required=True, help="|".join(reporting.REPORT_KINDS))
    rep.add_argument("--out", help="output directory (default: alongside the archive)")
    rep.add_argument("--drop-outliers", type=int, default=0,
                     help="repeatability: drop k most-deviant trials before statistics")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
