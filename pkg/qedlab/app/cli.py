from pathlib import Path

import click
from dotenv import load_dotenv
from loguru import logger

from ..shared.config import Config
from ..shared.config_keys import ConfigKeys
from ..output.artifacts import RunManifest
from ..shared.constants import DEFAULT_OUT_DIR, EXIT_OK, EXIT_USAGE
from ..shared.exceptions import ConfigurationError
from .commands import COMMANDS, run_command, setup_logging


def _common_options(f):
    f = click.option(
        "--override",
        "-O",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a dotted config key; the value is parsed as YAML.",
    )(f)
    f = click.option("--seed", type=int, default=None, help="Random seed (run.seed).")(f)
    f = click.option(
        "--out",
        "-o",
        "out_dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help="Output directory (run.out_dir).",
    )(f)
    f = click.option(
        "--config",
        "-c",
        "config_path",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="YAML config file.",
    )(f)
    return f


def _config_failure(
    name: str, out_dir: Path | None, seed: int | None, error: ConfigurationError
) -> int:
    """Leave a failure manifest behind when the configuration never resolved."""
    target = out_dir if out_dir is not None else Path(DEFAULT_OUT_DIR)
    manifest = RunManifest(command=name, seed=seed if seed is not None else 0, config={})
    manifest.fail("config_error", str(error))
    path = manifest.write(target)
    click.echo(f"Configuration error: {error}", err=True)
    logger.debug(f"Wrote failure manifest to {path}")
    return EXIT_USAGE


def _cmd_run(
    name: str,
    config_path: Path | None,
    out_dir: Path | None,
    seed: int | None,
    overrides: tuple[str, ...],
) -> int:
    load_dotenv()
    try:
        config = Config(str(config_path) if config_path else None)
        config.load(overrides)
        if seed is not None:
            config.set(ConfigKeys.RUN_SEED, seed)
        if out_dir is not None:
            config.set(ConfigKeys.RUN_OUT_DIR, str(out_dir))
    except ConfigurationError as e:
        return _config_failure(name, out_dir, seed, e)
    handlers = setup_logging(config.model.log)
    try:
        return run_command(name, config.model, Path(config.get_required(ConfigKeys.RUN_OUT_DIR)))
    finally:
        for handler in handlers:
            logger.remove(handler)


@click.group(
    invoke_without_command=True,
    context_settings={"help_option_names": ["-h", "--help"]},
)
@click.pass_context
def app(ctx: click.Context) -> None:
    """Ground-state light-matter lab: exact solver, Maxwell-Kohn-Sham and checks."""
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        raise click.exceptions.Exit(0)


def _register(name: str, doc: str) -> None:
    @_common_options
    def command(config_path, out_dir, seed, overrides) -> None:
        raise click.exceptions.Exit(_cmd_run(name, config_path, out_dir, seed, overrides))

    command.__doc__ = doc
    app.command(name=name)(command)


_DOCS = {
    "exact": "Exact ground state, observables and Maxwell residual.",
    "scf": "Self-consistent Maxwell-Kohn-Sham solve at the mean-field level.",
    "displace-check": "Verify that a static vector potential equals a shifted external current.",
    "hk-scan": "Falsification scan of the (v, j) -> (n, A) map.",
    "maxwell-residual": "Maxwell residual of the exact ground state over a Fock cutoff sweep.",
}

for _name in COMMANDS:
    _register(_name, _DOCS[_name])


def main(argv: list[str] | None = None) -> int:
    try:
        code = app.main(args=argv, prog_name="qedlab", standalone_mode=False)
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.exceptions.ClickException as e:
        e.show()
        return EXIT_USAGE
    except ConfigurationError as e:
        click.echo(f"Configuration error: {e}", err=True)
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
