"""Command-line surface: impair audio, parse transcripts, score answers,
build and serve experiments, run the robot, analyze results."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analysis as analysis_mod
from . import robot as robot_mod
from .channel import get_codec, impair_file, split_frames
from .model import DEFAULT_LEAD, ExperimentManifest, ImpairmentSpec, normalize_answer
from .parser import METRICS, parse_transcript
from .scoring import report_with_truth, report_without_truth
from .service.builder import ExperimentConfig, build_experiment
from .service.store import Store


@click.group()
def main():
    """Listening-experiment harness for impaired mission-critical voice."""


@main.command()
@click.option("--in", "wav_in", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "wav_out", required=True, type=click.Path(dir_okay=False))
@click.option("--codec", default="passthrough", show_default=True,
              help="passthrough or external:<command>")
@click.option("--pgb", default=0.01, show_default=True, help="Good-to-Bad transition probability")
@click.option("--pbg", default=None, type=float, help="Bad-to-Good transition probability (default 1 - pgb)")
@click.option("--k", "burst_k", default=1, show_default=True, help="bit-error burst size")
@click.option("--frame-drop", default=0.0, show_default=True, help="per-frame drop probability")
@click.option("--seed", default=42, show_default=True)
@click.option("--frame-size", default=320, show_default=True, help="codec frame size in bytes")
def impair(wav_in, wav_out, codec, pgb, pbg, burst_k, frame_drop, seed, frame_size):
    """Impair one WAVE file through the codec and burst-error channel."""
    spec = ImpairmentSpec(codec=codec, p_gb=pgb, p_bg=pbg, burst_k=burst_k,
                          frame_drop_p=frame_drop, seed=seed)
    impair_file(wav_in, wav_out, spec, get_codec(codec, frame_size))
    click.echo(f"wrote {wav_out}")


@main.command()
@click.option("--text", required=True)
@click.option("--metric", default="levscore", show_default=True, type=click.Choice(METRICS))
@click.option("--lead", default=DEFAULT_LEAD, show_default=True)
def parse(text, metric, lead):
    """Extract a plate from transcribed text; prints JSON {plate, matches}."""
    plate, matches = parse_transcript(text, lead=lead, metric=metric)
    click.echo(json.dumps({"plate": plate, "matches": [m.to_dict() for m in matches]}, indent=2))


@main.command()
@click.option("--answers", "answers_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help='JSON {"answers": [{"recording_id", "text"}]}')
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", default="auto", show_default=True,
              type=click.Choice(["auto", "with-truth", "without-truth"]))
@click.option("--metric", default="levscore", show_default=True, type=click.Choice(METRICS))
@click.option("--use-sum", is_flag=True, help="literal per-token sum instead of the mean (compatibility)")
def score(answers_path, manifest_path, mode, metric, use_sum):
    """Score submitted answers against a manifest; prints a report as JSON."""
    manifest = ExperimentManifest.loads(Path(manifest_path).read_text())
    answers = json.loads(Path(answers_path).read_text())["answers"]
    truths = {r.id: r.ground_truth.text if r.ground_truth else None for r in manifest.recordings}
    unknown = [a["recording_id"] for a in answers if a["recording_id"] not in truths]
    if unknown:
        raise click.ClickException(f"answers reference unknown recordings: {unknown}")
    if mode == "auto":
        mode = "with-truth" if all(truths[a["recording_id"]] for a in answers) else "without-truth"
    if mode == "with-truth":
        missing = [a["recording_id"] for a in answers if not truths[a["recording_id"]]]
        if missing:
            raise click.ClickException(f"no ground truth for: {missing}")
        report = report_with_truth([
            (a["recording_id"], normalize_answer(a["text"]), truths[a["recording_id"]])
            for a in answers
        ])
    else:
        token_scores = []
        for a in answers:
            _, matches = parse_transcript(a["text"], lead=manifest.lead_sentence, metric=metric)
            token_scores.append((a["recording_id"], [m.score for m in matches]))
        report = report_without_truth(token_scores, use_sum=use_sum)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", required=True, envvar="MCVLAB_DATA_DIR", type=click.Path(file_okay=False))
@click.option("--id", "experiment_id", default=None, help="experiment id (default: derived from seed)")
def build(config_path, data_dir, experiment_id):
    """Build an experiment (plates, conditions, impaired audio) into the data directory."""
    config = ExperimentConfig.from_dict(json.loads(Path(config_path).read_text()))
    manifest = build_experiment(config, Store(data_dir), experiment_id=experiment_id)
    click.echo(json.dumps({"experiment_id": manifest.id, "n_recordings": len(manifest.recordings)}))


@main.command()
@click.option("--data-dir", required=True, envvar="MCVLAB_DATA_DIR", type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True, envvar="MCVLAB_HOST")
@click.option("--port", default=8000, show_default=True, envvar="MCVLAB_PORT")
@click.option("--admin-token", required=True, envvar="MCVLAB_ADMIN_TOKEN")
@click.option("--static-dir", default=None, envvar="MCVLAB_STATIC_DIR",
              help="optional built web UI to serve at /")
def serve(data_dir, host, port, admin_token, static_dir):
    """Run the experiment HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(data_dir, admin_token, static_dir), host=host, port=port)


@main.group()
def robot():
    """Machine test subject."""


@robot.command("run")
@click.option("--url", required=True, help="service base URL")
@click.option("--experiment", required=True, help="experiment id or shared link")
@click.option("--engine", "engine_spec", required=True,
              help="mock:table.json | external:CMD | http:URL")
@click.option("--metric", default="levscore", show_default=True, type=click.Choice(METRICS))
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False))
@click.option("--admin-token", default=None, envvar="MCVLAB_ADMIN_TOKEN",
              help="enables with-truth scoring")
@click.option("--state", "state_path", default=None, type=click.Path(dir_okay=False),
              help="progress file for resumable runs")
@click.option("--engine-timeout", default=120.0, show_default=True)
def robot_run(url, experiment, engine_spec, metric, report_path, admin_token, state_path, engine_timeout):
    """Walk one session: fetch, transcribe, parse, submit, score."""
    engine = robot_mod.make_engine(engine_spec, timeout_s=engine_timeout)
    report = robot_mod.run_session(url, experiment, engine, metric=metric,
                                   admin_token=admin_token, state_path=state_path)
    payload = json.dumps(report.to_dict(), indent=2)
    if report_path:
        Path(report_path).write_text(payload + "\n")
        click.echo(f"wrote {report_path}")
    else:
        click.echo(payload)


@main.group()
def analyze():
    """Descriptive analysis of exported results."""


@analyze.command("tabulate")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", required=True, type=click.Path(dir_okay=False))
def analyze_tabulate(results_path, csv_path):
    """Per-condition cells: mean distances and correctness by codec/burst/subject."""
    results = json.loads(Path(results_path).read_text())
    cells = analysis_mod.tabulate(results)
    Path(csv_path).write_text(analysis_mod.cells_csv(cells))
    click.echo(f"wrote {csv_path} ({len(cells)} cells)")


@analyze.command("trials")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", required=True, type=click.Path(dir_okay=False))
def analyze_trials(results_path, csv_path):
    """Tidy one-row-per-trial table for external statistics software."""
    results = json.loads(Path(results_path).read_text())
    rows = analysis_mod.trial_rows(results)
    Path(csv_path).write_text(analysis_mod.trials_csv(results))
    click.echo(f"wrote {csv_path} ({len(rows)} trials)")


@analyze.command("bh")
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--pvalues", "pvalues_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="text file, one p-value per line")
def analyze_bh(alpha, pvalues_path):
    """Benjamini-Hochberg adjustment of externally supplied p-values."""
    p_values = [float(line) for line in Path(pvalues_path).read_text().split()]
    rejected, adjusted = analysis_mod.bh_adjust(p_values, alpha)
    click.echo(json.dumps({
        "alpha": alpha,
        "results": [
            {"p": p, "rejected": r, "adjusted": a}
            for p, r, a in zip(p_values, rejected, adjusted)
        ],
    }, indent=2))


@main.command()
@click.option("--metric", default="levscore", show_default=True, type=click.Choice(METRICS))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def collisions(metric, out_path):
    """Single-edit enumeration over the lexicon: cases the matcher cannot
    uniquely recover. Emitted as a JSON report."""
    from .parser import one_edit_collision_report

    report = one_edit_collision_report(metric=metric)
    payload = json.dumps({"metric": metric, "collisions": report}, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(payload)
        click.echo(f"wrote {out_path} ({len(report)} collisions)")
    else:
        click.echo(payload)


@main.group(name="codec-stub", hidden=True)
def codec_stub():
    """Reference implementation of the external codec protocol (pass-through)."""


@codec_stub.command("encode")
@click.option("--frame-size", default=320, show_default=True)
def stub_encode(frame_size):
    data = sys.stdin.buffer.read()
    sys.stdout.buffer.write(data)


@codec_stub.command("decode")
@click.option("--frame-size", default=320, show_default=True)
@click.option("--dropped", default="", help="comma-separated dropped frame indices")
def stub_decode(frame_size, dropped):
    data = sys.stdin.buffer.read()
    drop_set = {int(i) for i in dropped.split(",") if i != ""}
    out = bytearray()
    for i, frame in enumerate(split_frames(data, frame_size)):
        out += b"\x00" * len(frame) if i in drop_set else frame
    sys.stdout.buffer.write(bytes(out))


if __name__ == "__main__":
    main()
