"""Command-line front end.

Every command is a pure function of its configuration and input files:
reruns write byte-identical outputs (floats are formatted with ``repr``,
no timestamps or absolute paths appear in any artifact). Each output
directory gets a ``manifest.json`` echoing the resolved configuration plus
SHA-256 hashes of the inputs.

Configuration precedence: a ``--config`` JSON file overrides flags, flags
override the ``MNARX_SEED`` environment fallback. Exit codes: 0 success,
2 configuration/validation error, 3 numeric instability, 4 I/O failure.
"""

import hashlib
import json
import sys
from pathlib import Path

import click

from .benchmark import BenchConfig, run_bench
from .dct2 import DctReduction, read_fields, reduce_fields
from .exceptions import (
    DtMismatchError,
    NumericBlowupError,
    ValidationError,
)
from .manifold import ManifoldNarx, load_manifold, plan_from_dict, save_manifold
from .metrics import compare, write_report
from .series import read_series, write_series
from .springmass import SimConfig, SpringMassParams, build_ed
from .validation import close

__all__ = ["cli", "main"]


def _fail(code, err):
    click.echo(f"error: {err}", err=True)
    raise click.exceptions.Exit(code)


def _guarded(fn):
    """Map package errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericBlowupError as err:
            _fail(3, err)
        except ValidationError as err:
            _fail(2, err)
        except OSError as err:
            _fail(4, err)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _config_hash(config):
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()
    ).hexdigest()


def _write_manifest(outdir, command, config, inputs=()):
    manifest = {
        "schema": "mnarx-manifest-v1",
        "command": command,
        "config": config,
        "config_hash": _config_hash(config),
        "inputs": {Path(p).name: _sha256(p) for p in inputs},
    }
    Path(outdir).mkdir(parents=True, exist_ok=True)
    with open(Path(outdir) / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _resolve(values, config_path):
    """Apply config-file overrides; file entries win over flags."""
    if not config_path:
        return values
    with open(config_path) as fh:
        overrides = json.load(fh)
    unknown = sorted(set(overrides) - set(values))
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    values.update(overrides)
    return values


_config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="JSON file whose entries override flags of this command.")


def _sim_options(fn):
    for option in reversed([
        click.option("--dt", default=0.01, show_default=True, help="Output time step [s]."),
        click.option("--duration", default=30.0, show_default=True, help="Trace length [s]."),
        click.option("--substeps", default=100, show_default=True,
                     help="Integrator sub-steps per output step."),
        click.option("--unit-mode", type=click.Choice(["si", "literal"]), default="si",
                     show_default=True, help="Stiffness unit handling."),
    ]):
        fn = option(fn)
    return fn


@click.group()
def cli():
    """Chained polynomial NARX surrogate toolkit."""


@cli.command()
@click.option("--runs", required=True, type=int, help="Number of simulations.")
@click.option("--seed", type=int, envvar="MNARX_SEED", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@_sim_options
@click.option("--velocities/--no-velocities", default=False,
              help="Also record mass velocities.")
@_config_option
@_guarded
def simulate(runs, seed, out, dt, duration, substeps, unit_mode, velocities,
             config_path):
    """Generate an experimental design from the spring-mass oracle."""
    cfg = _resolve(dict(runs=runs, seed=seed, dt=dt, duration=duration,
                        substeps=substeps, unit_mode=unit_mode,
                        velocities=velocities), config_path)
    if cfg["runs"] < 1:
        raise ValidationError(f"--runs must be >= 1, got {cfg['runs']}")
    sim = SimConfig(dt=cfg["dt"], duration=cfg["duration"],
                    substeps=cfg["substeps"], unit_mode=cfg["unit_mode"],
                    record_velocities=cfg["velocities"])
    params = SpringMassParams()
    runs_data = build_ed(cfg["runs"], cfg["seed"], params, sim)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    for r in runs_data:
        write_series(r.series, outdir / f"run_{r.index:03d}")
    manifest_config = dict(cfg)
    manifest_config["params"] = {"k1": params.k1, "k2": params.k2,
                                 "m1": params.m1, "m2": params.m2}
    manifest_config["excitations"] = [
        {"amplitudes": list(r.excitation.amplitudes),
         "frequencies": list(r.excitation.frequencies),
         "phases": list(r.excitation.phases)}
        for r in runs_data
    ]
    _write_manifest(outdir, "simulate", manifest_config,
                    [config_path] if config_path else [])
    click.echo(f"wrote {cfg['runs']} runs to {out}")


def _load_ed_dir(ed_dir):
    ed_dir = Path(ed_dir)
    bases = sorted(p.with_suffix("") for p in ed_dir.glob("run_*.csv"))
    if not bases:
        raise ValidationError(f"no run_*.csv files in {ed_dir}")
    return [read_series(b) for b in bases]


@cli.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True),
              help="Declarative plan JSON.")
@click.option("--ed", "ed_dir", required=True, type=click.Path(exists=True),
              help="Experimental-design directory.")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, envvar="MNARX_SEED", default=0, show_default=True)
@click.option("--subsample", type=int, default=None,
              help="Design rows per model stage (default: all).")
@click.option("--subsample-mode", type=click.Choice(["random", "strided"]),
              default="random", show_default=True)
@_config_option
@_guarded
def train(plan_path, ed_dir, out, seed, subsample, subsample_mode, config_path):
    """Train every stage of a manifold plan on an experimental design."""
    cfg = _resolve(dict(seed=seed, subsample=subsample,
                        subsample_mode=subsample_mode), config_path)
    with open(plan_path) as fh:
        plan = plan_from_dict(json.load(fh))
    realizations = _load_ed_dir(ed_dir)
    model = ManifoldNarx(plan, sample_count=cfg["subsample"],
                         sample_mode=cfg["subsample_mode"], seed=cfg["seed"])
    model.fit(realizations)
    save_manifold(model, out)
    reports = {"final": model.final_model_.fit_report_}
    for name, stage in model.stage_models_.items():
        reports[name] = stage.fit_report_
    with open(Path(out) / "fit_reports.json", "w") as fh:
        json.dump(reports, fh, indent=2)
        fh.write("\n")
    inputs = [plan_path, *sorted(str(p) for p in Path(ed_dir).glob("run_*.csv"))]
    _write_manifest(out, "train", cfg, inputs)
    click.echo(f"trained {1 + len(model.stage_models_)} model stage(s) into {out}")


@cli.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True),
              help="Trained-manifold directory.")
@click.option("--input", "input_base", required=True, type=click.Path(),
              help="Input series base path (CSV/JSON pair).")
@click.option("--out", required=True, type=click.Path(),
              help="Output directory for prediction and stage traces.")
@click.option("--init", "init_base", type=click.Path(), default=None,
              help="Series base path providing true-output initial values.")
@_guarded
def predict(model_dir, input_base, out, init_base):
    """Run a trained manifold chain on new exogenous input."""
    model = load_manifold(model_dir)
    x = read_series(input_base)
    if model.final_model_.dt_ is not None and not close(x.dt, model.final_model_.dt_):
        raise DtMismatchError(
            f"input dt={x.dt!r} differs from training dt={model.final_model_.dt_!r}"
        )
    inits = {}
    final_init = None
    if init_base is not None:
        truth = read_series(init_base)
        for stage in model.plan.model_stages:
            n = model.stage_models_[stage.name].layout_.max_ar_lag
            inits[stage.name] = truth.channel(stage.name)[:n]
        n = model.final_model_.layout_.max_ar_lag
        final_init = truth.channel(model.plan.final.name)[:n]
    prediction, traces = model.predict_with_traces(x, inits, final_init)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_series(prediction, outdir / "prediction")
    for name, trace in traces.items():
        write_series(trace, outdir / f"trace_{name}")
    _write_manifest(outdir, "predict", {"init": init_base is not None},
                    [str(Path(input_base).with_suffix(".csv"))])
    click.echo(f"prediction written to {out}")


@cli.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--validation", "val_dir", required=True, type=click.Path(exists=True),
              help="Directory of validation runs (with truth channels).")
@click.option("--out", required=True, type=click.Path())
@click.option("--bins", default="fd", show_default=True,
              help="Histogram binning rule or count.")
@click.option("--threads", default=1, show_default=True,
              help="Per-trace prediction workers (outputs are identical).")
@_config_option
@_guarded
def evaluate(model_dir, val_dir, out, bins, threads, config_path):
    """Score a trained chain against oracle validation traces."""
    cfg = _resolve(dict(bins=bins, threads=threads), config_path)
    model = load_manifold(model_dir)
    realizations = _load_ed_dir(val_dir)
    target = model.plan.final.name
    skip = model.final_model_.layout_.max_ar_lag

    def predict_one(realization):
        inits = {
            name: realization.channel(name)[: model.stage_models_[name].layout_.max_ar_lag]
            for name in model.stage_models_
        }
        final_init = realization.channel(target)[:skip]
        return model.predict(realization.select(model.plan.raw_channels),
                             inits, final_init)

    from .benchmark import _collect

    predictions = _collect(predict_one, realizations, max(1, cfg["threads"]))
    report = compare({"mnarx": predictions}, realizations, target, skip)
    write_report({target: report}, out, bins=_parse_bins(cfg["bins"]))
    # thread count never affects outputs, so it stays out of the manifest
    _write_manifest(out, "evaluate",
                    {k: v for k, v in cfg.items() if k != "threads"},
                    sorted(str(p) for p in Path(val_dir).glob("run_*.csv")))
    summary = report.summaries["mnarx"]
    click.echo(f"median RMSE on {target}: {summary.rmse_median!r} "
               f"({summary.n_stable}/{summary.n_traces} stable)")


@cli.command()
@click.option("--fields", "fields_base", required=True, type=click.Path(),
              help="Field-sequence base path (CSV/NPY + JSON header).")
@click.option("--keep", default="3x3", show_default=True,
              help="Retained modes per direction, e.g. 3x3.")
@click.option("--out", required=True, type=click.Path(),
              help="Output series base path.")
@_guarded
def reduce(fields_base, keep, out):
    """Reduce a spatial field sequence to low-frequency mode series."""
    try:
        n_i, n_j = (int(v) for v in keep.lower().split("x"))
    except ValueError:
        raise ValidationError(f"--keep must look like '3x3', got {keep!r}") from None
    fields = read_fields(fields_base)
    nu_y, nu_z = fields.dims
    series = reduce_fields(fields, DctReduction(n_i, n_j, nu_y, nu_z))
    write_series(series, out)
    _write_manifest(Path(out).parent, "reduce", {"keep": keep},
                    [str(Path(fields_base).with_suffix(".json"))])
    click.echo(f"{series.n_channels}-channel mode series written to {out}")


@cli.command()
@click.option("--seed", type=int, envvar="MNARX_SEED", default=0, show_default=True)
@click.option("--runs", default=5, show_default=True, help="Training simulations.")
@click.option("--validation", default=100, show_default=True,
              help="Validation simulations.")
@click.option("--out", required=True, type=click.Path())
@_sim_options
@click.option("--traces/--no-traces", default=True, show_default=True,
              help="Write per-trace CSVs.")
@click.option("--threads", default=1, show_default=True,
              help="Per-trace prediction workers (outputs are identical).")
@_config_option
@_guarded
def bench(seed, runs, validation, out, dt, duration, substeps, unit_mode,
          traces, threads, config_path):
    """Full comparison pipeline: data, training, validation, report."""
    cfg = _resolve(dict(seed=seed, runs=runs, validation=validation, dt=dt,
                        duration=duration, substeps=substeps,
                        unit_mode=unit_mode, traces=traces, threads=threads),
                   config_path)
    bench_cfg = BenchConfig(
        seed=cfg["seed"], n_training=cfg["runs"], n_validation=cfg["validation"],
        dt=cfg["dt"], duration=cfg["duration"], substeps=cfg["substeps"],
        unit_mode=cfg["unit_mode"], write_traces=cfg["traces"],
        threads=max(1, cfg["threads"]),
    )
    result = run_bench(bench_cfg, out)
    # thread count never affects outputs, so it stays out of the manifest
    _write_manifest(out, "bench",
                    {k: v for k, v in cfg.items() if k != "threads"},
                    [config_path] if config_path else [])
    y2 = result.y2_report.summaries
    click.echo(
        "median y2 RMSE: "
        f"narx={y2['narx'].rmse_median!r} mnarx={y2['mnarx'].rmse_median!r}"
    )


def _parse_bins(bins):
    try:
        return int(bins)
    except (TypeError, ValueError):
        return bins


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except click.Abort:
        sys.exit(1)


if __name__ == "__main__":
    main()
