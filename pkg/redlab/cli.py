"""``redlab`` command line: verification, fault injection, reliability sweeps and structural metrics.

Results go to stdout (or ``--out``), logs and error messages to stderr. Exit
status: 0 success, 1 verification failure or unmasked fault, 2 usage error,
3 problem too large for exhaustive enumeration, 4 output not writable.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from math import comb
from pathlib import Path
from time import perf_counter
from typing import Any

import click
from pydantic import ValidationError

from redlab import __version__
from redlab.core.config import settings
from redlab.core.error_reporting import capture_exception, configure_error_reporting
from redlab.core.errors import EXIT_FAILURE, EXIT_OUTPUT, InvalidParameterError, RedlabError
from redlab.core.logging import configure_logging, get_logger
from redlab.core.metrics import record_command_duration, write_metrics_textfile
from redlab.core.run_context import new_run_id, reset_run_id, set_run_id
from redlab.schemas.reports import (
    CompareRow,
    CountsRow,
    DeltaRow,
    InjectReport,
    SweepDocument,
    SweepRow,
    ToleranceOut,
    VerifyReport,
    VoterMetricsRow,
)
from redlab.schemas.run_config import RunConfig
from redlab.services.comparison import counterpart_pairs, design_proxy_rows, system_totals
from redlab.services.fault_injection import (
    FaultModel,
    gate_level_masking_check,
    masked_counts_by_cardinality,
    tolerance_report,
)
from redlab.services.function_units import exhaustive_equivalence
from redlab.services.netlist import gate_count, logic_depth, netlist_to_json
from redlab.services.reliability import paired_schemes, r_grid, reliability_delta_sweep, sweep_rows
from redlab.services.reporting import csv_fields, render_csv, render_json, write_atomic
from redlab.services.voters import build_redundant_system, build_voter

logger = get_logger(__name__)

_FORMATS: dict[str, tuple[str, ...]] = {
    "verify": ("text", "json"),
    "inject": ("text", "json"),
    "tolerance": ("text", "json"),
    "counts": ("csv", "json"),
    "sweep": ("csv", "json"),
    "metrics": ("json", "csv"),
    "compare": ("csv", "json"),
}


@dataclass(frozen=True)
class CliState:
    threads: int | None
    metrics_out: Path | None
    allow_small_mmr: bool


def _split_list(_ctx: click.Context, _param: click.Parameter, value: str | None) -> list[str]:
    if value is None:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]


def _split_ints(ctx: click.Context, param: click.Parameter, value: str | None) -> list[int]:
    items = _split_list(ctx, param, value)
    try:
        return [int(item) for item in items]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from exc


def _format_option(command: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    choices = _FORMATS[command]
    return click.option("--format", "output_format", type=click.Choice(choices), default=choices[0], show_default=True)


def _out_option() -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    return click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Write results here instead of stdout.",
    )


def _validation_message(exc: ValidationError) -> str:
    messages = []
    for error in exc.errors(include_url=False):
        message = str(error["msg"]).removeprefix("Value error, ")
        location = ".".join(str(part) for part in error["loc"])
        messages.append(f"{location}: {message}" if location else message)
    return "; ".join(messages)


def _build_config(state: CliState, command: str, **fields: Any) -> RunConfig:
    try:
        return RunConfig(command=command, allow_small_mmr=state.allow_small_mmr, **fields)
    except ValidationError as exc:
        raise InvalidParameterError(_validation_message(exc)) from exc


def _emit(config: RunConfig, text: str) -> None:
    if config.out is not None:
        write_atomic(config.out, text)
    else:
        click.echo(text, nl=False)


def _bits(vector: tuple[int, ...] | list[int] | None) -> str:
    return "".join(str(bit) for bit in vector or ())


def _write_metrics(state: CliState) -> int | None:
    path = state.metrics_out or settings.metrics_textfile_path
    if not path:
        return None
    try:
        write_metrics_textfile(str(path))
    except OSError as exc:
        logger.error("cli.metrics_textfile.failed", extra={"path": str(path), "error_type": type(exc).__name__})
        click.echo(f"error: cannot write metrics to {path}: {exc.strerror or exc}", err=True)
        return EXIT_OUTPUT
    return None


def _run(
    ctx: click.Context,
    command: str,
    handler: Callable[[CliState, RunConfig], int],
    **fields: Any,
) -> None:
    state: CliState = ctx.obj
    token = set_run_id(new_run_id())
    started = perf_counter()
    exit_code = EXIT_FAILURE
    try:
        config = _build_config(state, command, **fields)
        logger.info("cli.command.started", extra={"command": command})
        exit_code = handler(state, config)
    except RedlabError as exc:
        logger.warning(
            "cli.command.failed",
            extra={"command": command, "error_code": exc.code, "exit_code": exc.exit_code, "details": exc.details},
        )
        click.echo(f"error: {exc.message}", err=True)
        exit_code = exc.exit_code
    except Exception as exc:
        logger.exception("cli.command.crashed", extra={"command": command, "error_type": type(exc).__name__})
        capture_exception(exc)
        raise
    finally:
        duration = perf_counter() - started
        record_command_duration(command=command, success=exit_code == 0, duration_seconds=duration)
        logger.info(
            "cli.command.completed",
            extra={"command": command, "exit_code": exit_code, "duration_ms": round(duration * 1000, 3)},
        )
        metrics_exit = _write_metrics(state)
        if metrics_exit is not None and exit_code == 0:
            exit_code = metrics_exit
        reset_run_id(token)
    ctx.exit(exit_code)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="redlab")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="REDLAB_THREADS",
    default=None,
    help="Worker cap for the enumeration engines; results do not depend on it.",
)
@click.option(
    "--metrics-out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write a Prometheus textfile snapshot after the command.",
)
@click.option("--allow-small-mmr", is_flag=True, help="Accept 4-unit MMR (one minority unit).")
@click.pass_context
def cli(ctx: click.Context, threads: int | None, metrics_out: Path | None, allow_small_mmr: bool) -> None:
    """Build, verify and analyse NMR and MMR redundant arithmetic units."""
    configure_logging(
        level=settings.log_level,
        json_logs=settings.json_logs,
        replace_handlers=settings.environment.lower() != "test",
    )
    configure_error_reporting()
    ctx.obj = CliState(threads=threads, metrics_out=metrics_out, allow_small_mmr=allow_small_mmr)


def _verify(state: CliState, config: RunConfig) -> int:
    unit_spec, scheme = config.unit_spec, config.scheme_spec
    unit = unit_spec.build()
    oracle = unit_spec.oracle()
    seed = config.seed if config.sample_size is not None else None
    sampling = {"sample_size": config.sample_size, "seed": seed, "threads": state.threads}

    unit_result = exhaustive_equivalence(unit, oracle, circuit="unit", **sampling)
    system_result = exhaustive_equivalence(build_redundant_system(unit, scheme), oracle, circuit="system", **sampling)
    counterexample = unit_result.counterexample or system_result.counterexample
    report = VerifyReport(
        unit=str(unit_spec),
        scheme=str(scheme),
        unit_equivalent=unit_result.equivalent,
        system_equivalent=system_result.equivalent,
        vectors_checked=unit_result.vectors_checked,
        sampled=unit_result.sampled,
        counterexample=list(counterexample) if counterexample else None,
    )

    if config.format == "json":
        _emit(config, render_json(report))
    else:
        verdict = "OK" if report.unit_equivalent and report.system_equivalent else "FAIL"
        line = f"{verdict} unit={report.unit} scheme={report.scheme} vectors={report.vectors_checked}"
        if report.sampled:
            line += " sampled"
        if counterexample:
            failed = "unit" if not report.unit_equivalent else "system"
            line += f" failed={failed} counterexample={_bits(counterexample)}"
        _emit(config, line + "\n")
    return 0 if report.unit_equivalent and report.system_equivalent else EXIT_FAILURE


def _inject(state: CliState, config: RunConfig) -> int:
    unit_spec, scheme, pattern = config.unit_spec, config.scheme_spec, config.fault_pattern
    result = gate_level_masking_check(
        unit_spec.build(),
        scheme,
        pattern,
        config.model,
        sample_size=config.sample_size,
        seed=config.seed if config.sample_size is not None else None,
        threads=state.threads,
    )
    report = InjectReport(
        unit=str(unit_spec),
        scheme=str(scheme),
        faults=str(pattern),
        model=config.model.value,
        masked=result.masked,
        vectors_checked=result.vectors_checked,
        sampled=result.sampled,
        failing_vector=list(result.failing_vector) if result.failing_vector else None,
    )

    if config.format == "json":
        _emit(config, render_json(report))
    else:
        line = report.verdict
        if report.failing_vector is not None:
            line += f" failing_vector={_bits(report.failing_vector)}"
        _emit(config, line + "\n")
    return 0 if report.masked else EXIT_FAILURE


def _counts(state: CliState, config: RunConfig) -> int:
    scheme = config.scheme_spec
    counts = masked_counts_by_cardinality(scheme, config.model, threads=state.threads)
    rows = [
        CountsRow(scheme=str(scheme), model=config.model.value, f=f, masked=count, patterns=comb(scheme.unit_count, f))
        for f, count in enumerate(counts)
    ]
    text = render_json(rows) if config.format == "json" else render_csv(rows, fieldnames=csv_fields(CountsRow))
    _emit(config, text)
    return 0


def _tolerance(state: CliState, config: RunConfig) -> int:
    scheme = config.scheme_spec
    report = tolerance_report(scheme, config.model, threads=state.threads)
    out = ToleranceOut(
        scheme=str(scheme),
        label=scheme.label,
        model=config.model.value,
        units=scheme.unit_count,
        max_tolerable=report.max_tolerable,
        guaranteed=report.guaranteed,
        claimed=report.claimed,
    )
    if config.format == "json":
        _emit(config, render_json(out))
    else:
        _emit(
            config,
            f"{out.label} ({out.scheme}, model={out.model})\n"
            f"best-placement maximum: {out.max_tolerable}\n"
            f"any-placement guarantee: {out.guaranteed}\n",
        )
    return 0


def _sweep(state: CliState, config: RunConfig) -> int:
    schemes = config.scheme_specs
    grid = r_grid(config.r_min, config.r_max, config.steps)  # type: ignore[arg-type]
    sweep = reliability_delta_sweep(
        paired_schemes(schemes), config.r_min, config.r_max, config.steps  # type: ignore[arg-type]
    )
    series_by_mmr = {str(pair.mmr): pair.series for pair in sweep.pairs}

    points = sweep_rows(schemes, list(grid), trials=config.trials, seed=config.seed, threads=state.threads)
    rows = []
    for index, point in enumerate(points):
        series = series_by_mmr.get(str(point.scheme))
        rows.append(
            SweepRow(
                scheme=str(point.scheme),
                units=point.scheme.unit_count,
                r=point.r,
                reliability_analytic=point.analytic,
                reliability_mc=point.monte_carlo.estimate if point.monte_carlo else None,
                mc_std_error=point.monte_carlo.std_error if point.monte_carlo else None,
                trials=config.trials,
                seed=config.seed,
                delta_percent=series[index % len(grid)] if series else None,
            )
        )
    deltas = [
        DeltaRow(nmr=str(pair.nmr), mmr=str(pair.mmr), mean_percent=pair.mean_percent, series=list(pair.series))
        for pair in sweep.pairs
    ]

    if config.format == "json":
        _emit(config, render_json(SweepDocument(grid=list(sweep.grid), rows=rows, deltas=deltas)))
        return 0

    _emit(config, render_csv(rows, fieldnames=csv_fields(SweepRow)))
    to_stderr = config.out is None
    for pair in sweep.pairs:
        click.echo(
            f"delta {pair.nmr.label} vs {pair.mmr.label}: mean {pair.mean_percent:.4f}% "
            f"over R in [{config.r_min:g}, {config.r_max:g}] ({config.steps} points)",
            err=to_stderr,
        )
    return 0


def _metrics(state: CliState, config: RunConfig) -> int:
    unit_spec = config.unit_spec if config.unit else None
    unit = unit_spec.build() if unit_spec else None
    rows = []
    for scheme in config.scheme_specs:
        voter = build_voter(scheme)
        census = gate_count(voter)
        row = VoterMetricsRow(
            scheme=str(scheme),
            label=scheme.label,
            voter_gates=census.total,
            voter_depth=logic_depth(voter),
            voter_census=census.as_dict(),
        )
        if unit is not None:
            system_gates, system_depth = system_totals(unit, scheme)
            row = row.model_copy(
                update={"unit": str(unit_spec), "system_gates": system_gates, "system_depth": system_depth}
            )
        rows.append(row)

    text = render_json(rows) if config.format == "json" else render_csv(rows, fieldnames=csv_fields(VoterMetricsRow))
    _emit(config, text)
    return 0


def _compare(state: CliState, config: RunConfig) -> int:
    proxies = design_proxy_rows(config.unit_spec, counterpart_pairs(config.mmr))
    rows = [CompareRow.model_validate(proxy, from_attributes=True) for proxy in proxies]
    text = render_json(rows) if config.format == "json" else render_csv(rows, fieldnames=csv_fields(CompareRow))
    _emit(config, text)
    return 0


def _export(state: CliState, config: RunConfig) -> int:
    if config.target == "unit":
        netlist = config.unit_spec.build()
    elif config.target == "voter":
        netlist = build_voter(config.scheme_spec)
    else:
        netlist = build_redundant_system(config.unit_spec.build(), config.scheme_spec)
    _emit(config, netlist_to_json(netlist) + "\n")
    return 0


_UNIT_HELP = "Function unit, e.g. rca:4 or bam:4x4."
_SCHEME_HELP = "Redundancy scheme, e.g. nmr:5 or mmr:5."
_MODEL_OPTION = click.option(
    "--model",
    type=click.Choice([model.value for model in FaultModel]),
    default=FaultModel.INVERSION.value,
    show_default=True,
    help="Corruption applied to a faulty unit's output word.",
)


@cli.command()
@click.option("--unit", required=True, help=_UNIT_HELP)
@click.option("--scheme", required=True, help=_SCHEME_HELP)
@click.option("--sample-size", type=int, default=None, help="Check this many sampled vectors above the input cap.")
@click.option("--seed", type=int, default=0, show_default=True)
@_format_option("verify")
@_out_option()
@click.pass_context
def verify(
    ctx: click.Context,
    unit: str,
    scheme: str,
    sample_size: int | None,
    seed: int,
    output_format: str,
    out: Path | None,
) -> None:
    """Check a unit and its fault-free redundant system against the arithmetic oracle."""
    _run(
        ctx,
        "verify",
        _verify,
        unit=unit,
        scheme=scheme,
        sample_size=sample_size,
        seed=seed,
        format=output_format,
        out=out,
    )


@cli.command()
@click.option("--unit", required=True, help=_UNIT_HELP)
@click.option("--scheme", required=True, help=_SCHEME_HELP)
@click.option("--faults", required=True, help='Faulty unit indices, e.g. "1,4"; "" for none.')
@_MODEL_OPTION
@click.option("--sample-size", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@_format_option("inject")
@_out_option()
@click.pass_context
def inject(
    ctx: click.Context,
    unit: str,
    scheme: str,
    faults: str,
    model: str,
    sample_size: int | None,
    seed: int,
    output_format: str,
    out: Path | None,
) -> None:
    """Simulate the redundant system with faulty units and report MASKED or NOT-MASKED."""
    _run(
        ctx,
        "inject",
        _inject,
        unit=unit,
        scheme=scheme,
        faults=faults,
        model=model,
        sample_size=sample_size,
        seed=seed,
        format=output_format,
        out=out,
    )


@cli.command()
@click.option("--scheme", required=True, help=_SCHEME_HELP)
@_MODEL_OPTION
@_format_option("counts")
@_out_option()
@click.pass_context
def counts(ctx: click.Context, scheme: str, model: str, output_format: str, out: Path | None) -> None:
    """Masked fault patterns per fault count, next to the number of patterns of that size."""
    _run(ctx, "counts", _counts, scheme=scheme, model=model, format=output_format, out=out)


@cli.command()
@click.option("--scheme", required=True, help=_SCHEME_HELP)
@_MODEL_OPTION
@_format_option("tolerance")
@_out_option()
@click.pass_context
def tolerance(ctx: click.Context, scheme: str, model: str, output_format: str, out: Path | None) -> None:
    """Best-placement maximum and any-placement guaranteed fault tolerance."""
    _run(ctx, "tolerance", _tolerance, scheme=scheme, model=model, format=output_format, out=out)


@cli.command()
@click.option("--schemes", required=True, callback=_split_list, help="Comma-separated schemes, e.g. nmr:5,mmr:5.")
@click.option("--r-min", type=float, default=0.9, show_default=True)
@click.option("--r-max", type=float, default=0.99, show_default=True)
@click.option("--steps", type=int, default=None, help="Grid points (default from REDLAB_SWEEP_DEFAULT_STEPS).")
@click.option("--trials", type=int, default=0, show_default=True, help="Monte Carlo trials per point; 0 skips.")
@click.option("--seed", type=int, default=0, show_default=True)
@_format_option("sweep")
@_out_option()
@click.pass_context
def sweep(
    ctx: click.Context,
    schemes: list[str],
    r_min: float,
    r_max: float,
    steps: int | None,
    trials: int,
    seed: int,
    output_format: str,
    out: Path | None,
) -> None:
    """Reliability over an R grid per scheme, with mean deltas for NMR/MMR counterpart pairs."""
    _run(
        ctx,
        "sweep",
        _sweep,
        schemes=schemes,
        r_min=r_min,
        r_max=r_max,
        steps=settings.sweep_default_steps if steps is None else steps,
        trials=trials,
        seed=seed,
        format=output_format,
        out=out,
    )


@cli.command()
@click.option("--schemes", required=True, callback=_split_list, help="Comma-separated schemes.")
@click.option("--unit", default=None, help="Also report whole-system totals for this unit.")
@_format_option("metrics")
@_out_option()
@click.pass_context
def metrics(ctx: click.Context, schemes: list[str], unit: str | None, output_format: str, out: Path | None) -> None:
    """Voter gate census and logic depth per scheme."""
    _run(ctx, "metrics", _metrics, schemes=schemes, unit=unit, format=output_format, out=out)


@cli.command()
@click.option("--unit", required=True, help=_UNIT_HELP)
@click.option("--mmr", required=True, callback=_split_ints, help="Comma-separated MMR sizes, e.g. 5,6,7.")
@_format_option("compare")
@_out_option()
@click.pass_context
def compare(ctx: click.Context, unit: str, mmr: list[int], output_format: str, out: Path | None) -> None:
    """Design proxies for each k-MMR against the NMR with the same best-placement tolerance."""
    _run(ctx, "compare", _compare, unit=unit, mmr=mmr, format=output_format, out=out)


@cli.command()
@click.option("--target", type=click.Choice(["unit", "voter", "system"]), required=True)
@click.option("--unit", default=None, help=_UNIT_HELP)
@click.option("--scheme", default=None, help=_SCHEME_HELP)
@_out_option()
@click.pass_context
def export(ctx: click.Context, target: str, unit: str | None, scheme: str | None, out: Path | None) -> None:
    """Netlist JSON of a unit, a voter or a whole redundant system."""
    _run(ctx, "export", _export, target=target, unit=unit, scheme=scheme, format="json", out=out)


def main() -> None:
    cli(prog_name="redlab")
