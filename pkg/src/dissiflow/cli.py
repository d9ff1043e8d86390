"""
Command Line Interface for dissiflow.

Exit codes: 0 success, 2 empty census, 64 configuration or expression
errors, 65 integration and orbit-search failures, 66 surgery errors.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
from pydantic import ValidationError

from . import __version__
from .config import AnalysisConfig, SurgeryConfig
from .core.registry import available_flows
from .exceptions import ConfigError, DissiflowError
from .utils.serialization import to_jsonable

# Handle tomllib import for Python < 3.11
if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomli as tomllib
    except ImportError:
        import tomllib


logger = logging.getLogger(__name__)

EXIT_EMPTY_CENSUS = 2

DEFAULT_CONFIG = """# dissiflow run configuration
seed = 0

[flow]
# builtin = one of: rotation, cylinder, catmap-suspension, morse-smale-torus
builtin = "cylinder"

[flow.parameters]
c = 1.0

# Expression flows replace [flow.builtin] with three components in x, y, z:
# expressions = ["1.0", "0.1 * sin(2*pi*x)", "0.2 * sin(2*pi*z)"]
# name = "my-flow"
# [[flow.sections]]
# anchor = [0.0, 0.0, 0.0]
# normal = [1.0, 0.0, 0.0]

[domain]
kind = "flat-torus"
periods = [1.0, 1.0, 1.0]

[budgets]
n_seeds = 200
period_bound = 10.0
max_returns = 8
seed_width = 0.5
return_horizon = 50.0
threads = 1
batch_size = 1000

[tolerances]
integration = 1e-8
census = 1e-10
monte_carlo = 1e-6
newton = 1e-8
eig = 1e-6
dedup = 1e-4
method = "RK45"

[certificates]
T = 1.0
lambda_rate = 0.9
alpha = 0.1
K = 10.0
lambda_exp = 0.1
spacing = 0.1
periods = 2
bound_probes = 2000
inflation = 1.25

[basin]
n_samples = 2000
t_transient = 50.0
horizon = 200.0
check_spacing = 0.5
trapped_N = [0.0, 1.0, 2.0, 5.0, 10.0, 20.0]
trapped_samples = 1000
tube_radius = 0.05

# Surgery inputs for `dissiflow surgery`; the budget keys are optional.
[surgery]
# lam = 0.5
# mu = 1.6
# gamma = 0.1
# tau = 10.0
# C = 10.0
# eps = 0.1
# lambda_rate = 0.9
# alpha = 0.5

[output]
directory = "./dissiflow-out"
write_csv = true
write_plot_data = true

[logging]
level = "INFO"
format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
"""


def _load_config(ctx: click.Context) -> AnalysisConfig:
    obj = ctx.obj
    if "config" not in obj:
        config = AnalysisConfig.from_toml(obj["config_path"]).with_overrides(
            seed=obj["seed"], out=obj["out"], threads=obj["threads"]
        )
        config.setup_logging(verbose=obj["verbose"])
        obj["config"] = config
    return obj["config"]


def _emit(ctx: click.Context, summary: Dict[str, Any], text: str) -> None:
    """One JSON line on stdout in --json mode, tables otherwise."""
    if ctx.obj["json"]:
        click.echo(json.dumps(to_jsonable(summary), sort_keys=True, allow_nan=False))
    else:
        click.echo(text)


def _fail(ctx: click.Context, error: DissiflowError) -> None:
    click.echo(f"Error: {error}", err=True)
    if ctx.obj["json"]:
        click.echo(json.dumps({"status": "error", **to_jsonable(error.to_dict())}, sort_keys=True))
    ctx.exit(error.exit_code)


@click.group()
@click.version_option(version=__version__)
@click.option("--config", "-c", "config_path", default="base.toml", help="Path to configuration TOML file")
@click.option("--seed", type=int, default=None, help="Override the master RNG seed")
@click.option("--out", "-o", default=None, help="Output directory (overrides config and OUTPUT_DIR)")
@click.option("--json", "json_mode", is_flag=True, help="Print a single JSON summary line on stdout")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.pass_context
def cli(ctx, config_path: str, seed: Optional[int], out: Optional[str], json_mode: bool,
        threads: Optional[int], verbose: bool):
    """
    dissiflow - Sinks, dissipative saddles and attractors of 3-dimensional flows

    Finds periodic orbits, certifies dominated splittings along dissipative
    saddles, estimates basins by Monte Carlo and runs the saddle-to-sink
    surgery construction.
    """
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path, seed=seed, out=out, json=json_mode, threads=threads, verbose=verbose
    )


@cli.command()
@click.pass_context
def orbits(ctx):
    """
    Run the periodic orbit census and write catalog JSON and CSV.
    """
    from .pipeline import DissipativeFlowAnalyzer
    from .utils.formatters import SummaryFormatter

    try:
        config = _load_config(ctx)
        catalog, paths = DissipativeFlowAnalyzer(config).run_orbits()
    except DissiflowError as e:
        _fail(ctx, e)
        return

    data = catalog.to_dict()
    summary = {"status": "ok", "orbits": len(catalog), "counts": catalog.class_counts(), "files": paths}
    text = SummaryFormatter.format_catalog(data)
    text += f"\n📁 Catalog written to: {config.output.directory}"
    _emit(ctx, summary, text)
    if len(catalog) == 0:
        click.echo(
            f"Warning: no periodic orbits with period <= {config.budgets.period_bound}", err=True
        )
        ctx.exit(EXIT_EMPTY_CENSUS)


@cli.command()
@click.pass_context
def analyze(ctx):
    """
    Run every stage and write the report bundle.
    """
    from .pipeline import DissipativeFlowAnalyzer
    from .utils.formatters import SummaryFormatter

    try:
        config = _load_config(ctx)
        bundle = DissipativeFlowAnalyzer(config).analyze()
    except DissiflowError as e:
        _fail(ctx, e)
        return

    summary = {"status": "ok", **bundle.summary, "errors": len(bundle.errors), "files": bundle.files}
    parts = [
        SummaryFormatter.format_summary(bundle.summary),
        SummaryFormatter.format_catalog(bundle.catalog),
        SummaryFormatter.format_certificates(bundle.certificates),
        SummaryFormatter.format_basin(bundle.basin, bundle.trapped, bundle.markov),
    ]
    parts += [SummaryFormatter.format_surgery(report) for report in bundle.surgery]
    parts.append(f"📁 Reports generated in: {config.output.directory}")
    _emit(ctx, summary, "\n".join(parts))


@cli.command()
@click.pass_context
def basin(ctx):
    """
    Estimate the weak basin of the dissipative region, with plot data.
    """
    from .pipeline import DissipativeFlowAnalyzer
    from .utils.formatters import SummaryFormatter

    try:
        config = _load_config(ctx)
        estimate, trapped, paths = DissipativeFlowAnalyzer(config).run_basin()
    except DissiflowError as e:
        _fail(ctx, e)
        return

    data = estimate.to_dict()
    summary = {
        "status": "ok",
        "estimate": data["estimate"],
        "ci": [data["ci_low"], data["ci_high"]],
        "flags": data["flags"],
        "files": paths,
    }
    trapped_data = trapped.model_dump() if trapped is not None else None
    _emit(ctx, summary, SummaryFormatter.format_basin(data, trapped_data))


@cli.command()
@click.argument("params_file", type=click.Path(exists=True), required=False)
@click.pass_context
def surgery(ctx, params_file: Optional[str]):
    """
    Turn a dissipative saddle into a sink and size the perturbation budget.

    PARAMS_FILE: TOML file with a [surgery] table (defaults to the config's)
    """
    from .analyzers.surgery import SaddleData, full_report
    from .reports.writers import ReportWriter
    from .utils.formatters import SummaryFormatter

    try:
        config = _load_config(ctx)
        params = config.surgery
        if params_file:
            with open(params_file, "rb") as f:
                table = tomllib.load(f).get("surgery", {})
            params = SurgeryConfig(**table)
        if not params.has_saddle:
            raise ConfigError("surgery needs lam, mu, gamma and tau", key="surgery")
        data = SaddleData(lam=params.lam, mu=params.mu, gamma=params.gamma, tau=params.tau)
        report = full_report(data, params.C, params.eps, params.lambda_rate, params.alpha)
        output = config.output
        path = ReportWriter(output.directory, output.write_csv, output.write_plot_data).write_surgery(
            [report]
        )
    except tomllib.TOMLDecodeError as e:
        _fail(ctx, ConfigError(f"cannot parse {params_file}: {e}"))
        return
    except ValidationError as e:
        first = e.errors()[0]
        key = "surgery." + ".".join(str(part) for part in first["loc"]) if first["loc"] else "surgery"
        _fail(ctx, ConfigError(f"invalid surgery input: {first['msg']}", key=key))
        return
    except DissiflowError as e:
        _fail(ctx, e)
        return

    summary = {
        "status": "ok",
        "sink": report["sink"],
        "budget": report.get("budget"),
        "file": path,
    }
    _emit(ctx, summary, SummaryFormatter.format_surgery(report) + f"\n📁 Report written to: {path}")


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True))
@click.pass_context
def report(ctx, bundle_path: str):
    """
    Render an existing report bundle as tables.

    BUNDLE_PATH: bundle.json or the directory holding it
    """
    from .reports.writers import load_bundle
    from .utils.formatters import SummaryFormatter

    try:
        bundle = load_bundle(bundle_path)
    except (OSError, ValueError) as e:
        _fail(ctx, ConfigError(f"cannot read bundle {bundle_path}: {e}", key="bundle"))
        return

    summary = {"status": "ok", "config_hash": bundle.config_hash, **bundle.summary}
    parts = [
        SummaryFormatter.format_summary(bundle.summary),
        SummaryFormatter.format_catalog(bundle.catalog),
        SummaryFormatter.format_certificates(bundle.certificates),
    ]
    if bundle.basin is not None:
        parts.append(SummaryFormatter.format_basin(bundle.basin, bundle.trapped, bundle.markov))
    parts += [SummaryFormatter.format_surgery(r) for r in bundle.surgery]
    _emit(ctx, summary, "\n".join(parts))


@cli.command()
@click.option("--config-file", "-c", default="base.toml", help="Path to save the configuration file")
@click.option("--force", "-f", is_flag=True, help="Overwrite existing configuration file")
def init(config_file: str, force: bool):
    """
    Initialize a new dissiflow configuration file.
    """
    config_path = Path(config_file)

    if config_path.exists() and not force:
        click.echo(f"Configuration file {config_file} already exists. Use --force to overwrite.")
        return

    config_path.write_text(DEFAULT_CONFIG, encoding="utf-8")
    click.echo(f"Configuration file created: {config_file}")
    click.echo("You can now customize the settings and run:")
    click.echo(f"  dissiflow --config {config_file} analyze")


@cli.command()
@click.pass_context
def info(ctx):
    """
    Display the resolved configuration and the builtin flows.
    """
    try:
        config = _load_config(ctx)
    except DissiflowError as e:
        _fail(ctx, e)
        return

    if ctx.obj["json"]:
        click.echo(
            json.dumps(
                {"config": config.model_dump(mode="json"), "config_hash": config.config_hash(),
                 "flows": available_flows()},
                sort_keys=True,
            )
        )
        return

    click.echo("dissiflow Configuration")
    click.echo("=" * 40)
    flow = config.flow
    source = f"builtin '{flow.builtin}'" if flow.builtin else f"expressions '{flow.name}'"
    click.echo(f"Flow: {source}")
    if flow.parameters:
        click.echo(f"  • Parameters: {flow.parameters}")
    click.echo(f"Seed: {config.seed}")
    click.echo(f"Output Directory: {config.output.directory}")
    click.echo(f"Config Hash: {config.config_hash()}")

    click.echo("\nBudgets:")
    for key, value in config.budgets.model_dump().items():
        click.echo(f"  • {key}: {value}")

    click.echo("\nTolerances:")
    for key, value in config.tolerances.model_dump().items():
        click.echo(f"  • {key}: {value}")

    click.echo("\nBuiltin Flows:")
    for name, description in available_flows().items():
        click.echo(f"  • {name}: {description}")


if __name__ == "__main__":
    cli()
