"""Command-line driver.

Exit codes: 0 success, 1 analysis-level failure or runtime error, 2 usage or
config error.
"""

from __future__ import annotations

import json
import os
import sys
from importlib import resources
from pathlib import Path

import click

from . import analysis, geometry as geo, sequences
from .config import EXAMPLES, ConfigError, hand_sequence_ex1, load_config
from .expr import EvaluationError
from .problem import property_report


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _config(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        _fail(str(exc), 2)


def _threads(value):
    if value is None:
        env = os.environ.get("SEPWP_THREADS", "1")
        try:
            value = int(env)
        except ValueError:
            _fail(f"SEPWP_THREADS must be an integer, got {env!r}", 2)
    if value < 1:
        _fail("threads must be at least 1", 2)
    return value


threads_option = click.option(
    "--threads", type=int, default=None, help="Worker threads (default: $SEPWP_THREADS or 1)."
)
config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Problem config (JSON)."
)


@click.group()
def main():
    """Sampled analysis of LP well-posedness for perturbed split equilibrium problems."""


@main.command()
@config_option
@click.option("--eps", type=float, required=True)
@click.option("--dump", type=click.Path(dir_okay=False), default=None, help="Write members as CSV.")
@threads_option
def analyze(config_path, eps, dump, threads):
    """Compute the sampled approximate solution set at one eps."""
    if not eps > 0:
        _fail("eps must be positive", 2)
    cfg = _config(config_path)
    threads = _threads(threads)
    try:
        s = analysis.compute_S_eps(cfg.instance, cfg.plan, eps, threads)
    except (EvaluationError, ValueError) as exc:
        _fail(str(exc), 1)
    click.echo(f"eps={eps:.9g} count={s.count}")
    if s.count:
        click.echo(f"diam={geo.diameter(s.members):.9g}")
        box = s.bounding_box()
        names = _coord_names(cfg.instance)
        for name, lo, hi in zip(names, box.lower, box.upper):
            click.echo(f"  {name}: [{lo:.9g}, {hi:.9g}]")
    if dump:
        names = _coord_names(cfg.instance) + [f"p{i + 1}" for i in range(cfg.instance.pdim)]
        rows = [",".join(names)]
        for m, p in zip(s.members, s.witnesses):
            rows.append(",".join(format(v, ".9g") for v in list(m) + list(p)))
        Path(dump).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")


def _coord_names(inst) -> list:
    return [f"z{i + 1}" for i in range(inst.dim1)] + [f"w{i + 1}" for i in range(inst.dim2)]


@main.command()
@config_option
@click.option("--eps-start", type=float, default=0.2, show_default=True)
@click.option("--factor", type=float, default=0.5, show_default=True)
@click.option("--steps", type=int, default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default: stdout).")
@click.option("--timing/--no-timing", default=False, help="Fill the wallclock_ms column.")
@threads_option
def sweep(config_path, eps_start, factor, steps, out, timing, threads):
    """Sweep eps downward and classify well-posedness."""
    cfg = _config(config_path)
    threads = _threads(threads)
    if not (0 < factor < 1):
        _fail("factor must lie in (0, 1)", 2)
    if not eps_start > 0:
        _fail("eps-start must be positive", 2)
    if steps < 2:
        _fail("steps must be at least 2 (classification needs three records)", 2)
    schedule = analysis.geometric_schedule(eps_start, factor, steps)
    if schedule[-1] < cfg.plan.eps_floor:
        _fail(
            f"schedule ends at {schedule[-1]:.9g}, below eps_floor={cfg.plan.eps_floor:.9g}; "
            "raise eps-start or use fewer steps",
            2,
        )
    try:
        result = analysis.sweep(
            cfg.instance,
            cfg.plan,
            schedule,
            k=cfg.kuratowski_k,
            threads=threads,
            tau_point=cfg.tau_point,
            tau_cluster=cfg.tau_cluster,
        )
    except (EvaluationError, ValueError) as exc:
        _fail(str(exc), 1)
    text = analysis.sweep_csv(result, timing=timing)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        click.echo(text, nl=False)
    click.echo(str(result.classification))


@main.command()
@config_option
@click.option("--sequence", "sequence_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(sequences.MODES), default="approximating", show_default=True)
def verify(config_path, sequence_path, mode):
    """Check a step list against the (generalized) approximating-sequence conditions."""
    cfg = _config(config_path)
    try:
        steps = sequences.steps_from_json(json.loads(Path(sequence_path).read_text(encoding="utf-8")))
        for a, b in zip(steps, steps[1:]):
            if b.n != a.n + 1:
                raise ValueError(f"step indices must be consecutive; got {a.n} then {b.n}")
    except OSError as exc:
        _fail(f"cannot read {sequence_path}: {exc.strerror}", 2)
    except (json.JSONDecodeError, ValueError) as exc:
        _fail(f"malformed sequence file: {exc}", 2)
    try:
        floor = analysis.solution_floor(cfg.instance, cfg.plan)
        report = sequences.verify(cfg.instance, steps, mode, cfg.plan.h_inner, floor=floor)
    except (EvaluationError, ValueError) as exc:
        _fail(str(exc), 1)
    click.echo(report.text())
    sys.exit(0 if report.passed else 1)


@main.command()
@config_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=1000, show_default=True)
def properties(config_path, seed, samples):
    """Sampled checks of monotonicity, convexity, hemicontinuity and the Minty equivalence."""
    cfg = _config(config_path)
    if samples < 1:
        _fail("samples must be at least 1", 2)
    try:
        report = property_report(cfg.instance, samples, seed, h=cfg.plan.h_inner)
    except (EvaluationError, ValueError) as exc:
        _fail(str(exc), 1)
    click.echo(report.text())
    sys.exit(0 if report.all_passed else 1)


@main.command()
@click.argument("name")
@click.argument("out_dir", type=click.Path(file_okay=False), default=".")
def example(name, out_dir):
    """Write a bundled worked instance (ex1 or ex2) and its golden sweep output."""
    if name not in EXAMPLES:
        _fail(f"unknown example {name!r}; choose from {', '.join(sorted(EXAMPLES))}", 2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / f"{name}.json"]
    written[0].write_text(json.dumps(EXAMPLES[name], indent=2) + "\n", encoding="utf-8")
    golden = resources.files("sepwp").joinpath("data", f"{name}.sweep.csv")
    written.append(out / f"{name}.sweep.csv")
    written[-1].write_bytes(golden.read_bytes())
    if name == "ex1":
        written.append(out / "seq-ex1.json")
        written[-1].write_text(json.dumps(hand_sequence_ex1(), indent=1) + "\n", encoding="utf-8")
    for p in written:
        click.echo(str(p))


if __name__ == "__main__":
    main()
