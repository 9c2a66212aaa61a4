import logging
import os
import platform
import sys
import time
from importlib import metadata

import click
from dotenv import load_dotenv

from models.experiment import ExperimentConfig
from routes.acceptance_routes import run_acceptance  # noqa: F401  registers "acceptance-suite"
from routes.scenario_routes import SCENARIOS
from utils.errors import ConfigurationError, HolomotionError
from utils.file_utils import make_run_dir, read_json, write_json
from utils.hash_utils import get_dir_hashes

# ---------------- Load Env ----------------
load_dotenv()

# ---------------- Config ----------------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
MANIFEST = "manifest.json"
PACKAGES = ("numpy", "scipy", "scikit-learn", "python-dotenv", "click")

logger = logging.getLogger("holomotion")


def package_versions():
    versions = {"python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def load_config(path, scenario=None, seed=None, output_dir=None, sets=()):
    """Config file plus command-line overrides; every ``*_file`` parameter must exist."""
    config = ExperimentConfig.load(path).with_overrides(scenario, seed, output_dir, sets)
    if config.scenario not in SCENARIOS:
        raise click.UsageError(
            f"unknown scenario {config.scenario!r}; choose from {', '.join(sorted(SCENARIOS))}"
        )
    return config.resolve_files()


def fail(exc):
    click.echo(f"❌ {type(exc).__name__}: {exc}", err=True)
    sys.exit(exc.exit_code)


# ---------------- CLI ----------------
@click.group()
def cli():
    """Numerical experiments on holomorphic motions."""
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, help="Override the config's seed.")
@click.option("--output-dir", type=click.Path(file_okay=False), help="Parent folder for the run directory.")
@click.option("--scenario", help="Override the config's scenario.")
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override one parameter (JSON value).")
def run(config_path, seed, output_dir, scenario, sets):
    """Run the scenario of CONFIG_PATH and write its tables and a manifest."""
    try:
        config = load_config(config_path, scenario, seed, output_dir, sets)
        run_dir = make_run_dir(config.output_dir, config.scenario, config.seed)
        click.echo(f"📂 Writing {config.scenario} (seed {config.seed}) to {run_dir}")
        start = time.perf_counter()
        summary = SCENARIOS[config.scenario](config, run_dir)
        wall_time = time.perf_counter() - start
    except HolomotionError as exc:
        fail(exc)

    manifest = {
        "config": config.to_json(),
        "seed": config.seed,
        "versions": package_versions(),
        "wall_time": wall_time,
        "summary": summary,
        "digests": get_dir_hashes(run_dir, exclude=(MANIFEST,)),
    }
    write_json(os.path.join(run_dir, MANIFEST), manifest)
    logger.info("%s finished in %.1f s", config.scenario, wall_time)

    if summary.get("passed") is False:
        click.echo(f"❌ Failed checks: {', '.join(summary.get('failed', []))}", err=True)
        sys.exit(1)
    click.echo(f"✅ {config.scenario} done in {wall_time:.1f} s, {len(manifest['digests'])} files")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--scenario", help="Override the config's scenario.")
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE")
def validate(config_path, scenario, sets):
    """Check CONFIG_PATH without running it."""
    try:
        config = load_config(config_path, scenario=scenario, sets=sets)
    except HolomotionError as exc:
        fail(exc)
    click.echo(f"✅ {config_path}: scenario {config.scenario}, seed {config.seed}")
    for key in sorted(config.params):
        click.echo(f"   {key} = {config.params[key]}")


@cli.command()
@click.argument("run_dir", type=click.Path(file_okay=False))
def report(run_dir):
    """Re-verify the digests of RUN_DIR and print its manifest summary."""
    try:
        path = os.path.join(run_dir, MANIFEST)
        if not os.path.exists(path):
            raise ConfigurationError(f"no manifest in {run_dir}")
        manifest = read_json(path)
    except HolomotionError as exc:
        fail(exc)

    recorded = manifest.get("digests", {})
    current = get_dir_hashes(run_dir, exclude=(MANIFEST,))
    changed = sorted(name for name in set(recorded) | set(current) if recorded.get(name) != current.get(name))
    click.echo(f"📂 {run_dir}: {manifest['config']['scenario']} seed {manifest['seed']}, "
               f"{manifest['wall_time']:.1f} s")
    for key, value in sorted(manifest.get("summary", {}).items()):
        if key != "files":
            click.echo(f"   {key}: {value}")
    if changed:
        for name in changed:
            click.echo(f"⚠️ {name} does not match the manifest", err=True)
        sys.exit(1)
    click.echo(f"✅ {len(current)} files match their digests")


if __name__ == "__main__":
    cli()
