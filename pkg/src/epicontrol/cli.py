"""Command-line interface: fit, validate, run, summarize, serve, benchmark."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .inference import Smc2Config, save_cloud
from .loop import (
    config_from_dict,
    fit_generator,
    ingest,
    reward_ledger,
    run_decision_loop,
    summarize,
    trace_from_csv,
    validation_replay,
    write_metrics,
)
from .loop.generator import load_generator, save_generator
from .model import CompartmentState
from .rng import STREAM_INFER, STREAM_MISC, derive


def _build_config(config, preset, seed, planner, kappa_soec):
    doc = json.loads(Path(config).read_text()) if config else {}
    if preset:
        doc["preset"] = preset
    if seed is not None:
        doc["seed"] = seed
    if planner:
        doc["planner"] = planner
    if kappa_soec is not None:
        doc.setdefault("reward", {})["kappa_soec"] = kappa_soec
    return config_from_dict(doc)


config_opt = click.option("--config", type=click.Path(exists=True),
                          help="JSON config file (see config.schema.json)")
preset_opt = click.option("--preset", type=click.Choice(["desk", "paper"]),
                          default=None, help="configuration preset")
seed_opt = click.option("--seed", type=int, default=None)
out_opt = click.option("--out", type=click.Path(), default="out",
                       show_default=True, help="output directory")


@click.group()
def main():
    """Epidemic decision-support engine."""


@main.command()
@config_opt
@preset_opt
@seed_opt
@out_opt
def fit(config, preset, seed, out):
    """Fit the counterfactual generator to the observed series."""
    cfg = _build_config(config, preset, seed, None, None)
    if not cfg.data_dir:
        raise click.UsageError("fit requires data_dir in the config file")
    ds = ingest(cfg.data_dir)
    e0, i0 = cfg.seed_counts()
    x0 = CompartmentState.seeded(cfg.population, exposed=e0, infectious=i0)
    vax = ds.vax.extended(len(ds) + cfg.t_horizon + cfg.horizon)
    spec, cloud = fit_generator(
        ds.icu[1:], ds.actions, vax, cfg.base_params(), x0.as_array(),
        Smc2Config(n_theta=cfg.n_theta, n_x=cfg.n_x, n_moves=cfg.smc2_moves,
                   ess_fraction=cfg.smc2_ess_fraction),
        derive(cfg.seed, STREAM_INFER), state_day=cfg.warmup_days,
        n_draws=max(cfg.k_draws, 25), return_cloud=True)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    save_generator(spec, out / "generator.npz")
    suffix = "npz" if cfg.checkpoint_format == "npz" else "json"
    save_cloud(cloud, out / f"cloud.{suffix}", fmt=cfg.checkpoint_format)
    summary = {
        "days_assimilated": len(ds) - 1,
        "state_day": spec.day0,
        "theta_mean": spec.thetas.mean(axis=0).tolist(),
        "theta_q05": np.percentile(spec.thetas, 5, axis=0).tolist(),
        "theta_q95": np.percentile(spec.thetas, 95, axis=0).tolist(),
    }
    (out / "fit_summary.json").write_text(json.dumps(summary, indent=2))
    click.echo(f"generator written to {out / 'generator.npz'}")
    click.echo(json.dumps(summary, indent=2))


@main.command()
@config_opt
@preset_opt
@seed_opt
@out_opt
@click.option("--generator", "generator_path", type=click.Path(exists=True),
              help="generator.npz from a previous fit")
@click.option("--n-paths", type=int, default=200, show_default=True)
def validate(config, preset, seed, out, generator_path, n_paths):
    """Replay the historical actions and compare against observed ICU."""
    cfg = _build_config(config, preset, seed, None, None)
    if not cfg.data_dir:
        raise click.UsageError("validate requires data_dir in the config file")
    ds = ingest(cfg.data_dir)
    if generator_path:
        spec = load_generator(generator_path)
    else:
        raise click.UsageError("pass --generator (run `epicontrol fit` first)")
    start = spec.day0
    # bands[i] covers the transition start+i -> start+i+1, observed at
    # date index start+i+1
    n_days = len(ds) - start - 1
    if n_days < 1:
        raise click.UsageError("generator state day leaves no days to replay")
    actions = ds.actions[start:start + n_days]
    observed = ds.icu[start + 1:start + 1 + n_days]
    vax = ds.vax.extended(start + n_days + 1)
    bands = validation_replay(spec, actions, vax, n_paths,
                              derive(cfg.seed, STREAM_MISC),
                              observe_noise=True)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    doc = bands.to_json_dict()
    doc["observed"] = observed.tolist()
    (out / "validation.json").write_text(json.dumps(doc))
    inside = np.mean((observed >= bands.lo) & (observed <= bands.hi))
    click.echo(f"validation bands written to {out / 'validation.json'}; "
               f"observed inside predictive 5-95% band on {inside:.0%} of days")


@main.command()
@config_opt
@preset_opt
@seed_opt
@click.option("--planner",
              type=click.Choice(["threshold", "qlearn", "random",
                                 "historical", "naive_q"]), default=None)
@click.option("--kappa-soec", type=click.Choice(["0.2", "0.5", "0.8"]),
              default=None, help="socio-economic cost weight")
@click.option("--replicates", type=int, default=None,
              help="override the configured replicate count")
@click.option("--jobs", type=int, default=1, show_default=True)
@out_opt
def run(config, preset, seed, planner, kappa_soec, replicates, jobs, out):
    """Run counterfactual replicates under the configured planner."""
    cfg = _build_config(config, preset, seed, planner,
                        float(kappa_soec) if kappa_soec else None)
    if replicates:
        cfg = cfg.replace(replicates=replicates)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    traces = []
    if jobs > 1:
        from joblib import Parallel, delayed
        traces = Parallel(n_jobs=jobs, prefer="processes")(
            delayed(run_decision_loop)(cfg, replicate=r)
            for r in range(cfg.replicates))
    else:
        for r in range(cfg.replicates):
            traces.append(run_decision_loop(cfg, replicate=r))
            click.echo(f"replicate {r}: total reward "
                       f"{traces[-1].total_reward:,.0f}")
    for tr in traces:
        tr.to_csv(out / f"trace_{cfg.planner}_r{tr.replicate}.csv")
    rows = summarize(traces, cfg.reward)
    write_metrics(rows, out)
    plots = {
        "icu": {"replicates": [t.y.tolist() for t in traces],
                "mean": np.mean([t.y for t in traces], axis=0).tolist()},
        "actions": [t.actions.tolist() for t in traces],
        "reward_ledger": reward_ledger(traces),
        "max_delta_curves": {str(t.replicate): t.convergence_curves
                             for t in traces if t.convergence_curves},
        "blocks": [t.block_json() for t in traces],
    }
    (out / "plots.json").write_text(json.dumps(plots))
    click.echo(f"wrote {len(traces)} traces, metrics, and plots.json to {out}")
    for row in rows:
        click.echo(f"  {row['planner']}: mean total reward "
                   f"{row['total_reward_mean']:,.0f} "
                   f"(sd {row['total_reward_sd']:,.0f})")


@main.command()
@click.argument("trace_files", nargs=-1, type=click.Path(exists=True))
@config_opt
@preset_opt
@out_opt
def summarize_cmd(trace_files, config, preset, out):
    """Summarise previously written trace CSVs into a metrics table."""
    cfg = _build_config(config, preset, None, None, None)
    if not trace_files:
        raise click.UsageError("pass one or more trace CSV files")
    traces = []
    for path in trace_files:
        name = Path(path).stem
        planner = name.split("_")[1] if "_" in name else "unknown"
        traces.append(trace_from_csv(path, planner=planner))
    rows = summarize(traces, cfg.reward)
    paths = write_metrics(rows, out)
    click.echo(f"metrics written to {paths['csv']}")


main.add_command(summarize_cmd, name="summarize")


@main.command()
@click.option("--addr", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--session-dir", type=click.Path(), default=None,
              help="directory for per-step session checkpoints")
def serve(addr, port, session_dir):
    """Serve the interactive decision API."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(session_dir=session_dir), host=addr, port=port)


@main.command()
@click.option("--json", "json_out", type=click.Path(), default=None,
              help="also write the rows as JSON")
def benchmark(json_out):
    """Compare the numba kernels against the numpy fallback."""
    from .benchmark import benchmark_cases, format_table
    rows = benchmark_cases()
    click.echo(format_table(rows))
    if json_out:
        Path(json_out).write_text(json.dumps(rows, indent=2))
        click.echo(f"rows written to {json_out}")


if __name__ == "__main__":
    main()
