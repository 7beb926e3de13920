import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from app import __version__
from app.core.errors import CapacityError, CircuitError, FitError
from app.core.runner import fit_scaling, format_report, read_report, run_experiment, write_report
from app.core.schemas import REPORT_COLUMNS, FitResult, ReportRow, RunConfig
from app.modules.circuit_lang import format_circuit, write_circuit
from app.modules.klm_gates import CORPUS
from app.utils.config import get_config, parse_n_list, reload_config
from app.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3

# Diagnostics and tables go to stderr; stdout carries data only
console = Console(stderr=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bosonsim",
        description="Exact bosonic Fock-space simulator with time-bin coincidence scattering.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Config file (KEY=VALUE lines); flags and environment win over it")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run a circuit and write a CSV report")
    run_parser.add_argument("--circuit", required=True, help="Circuit file")
    run_parser.add_argument("--backend", choices=["ideal", "binned"], help="Back-end (default from config)")
    run_parser.add_argument("--n", help="Comma separated bin counts, e.g. 1,2,4,8")
    run_parser.add_argument("--p-scatter", type=float, help="Scattering probability in [0, 1]; 1 is the hard model")
    run_parser.add_argument("--out", help="CSV output path (stdout when omitted)")
    run_parser.add_argument("--seed", type=int, help="Reserved; runs are deterministic")
    run_parser.add_argument("--no-timing", action="store_true", help="Write 0 in wall_time_ms")

    fit_parser = subparsers.add_parser("fit", help="Fit log(column) against log(n) from a CSV report")
    fit_parser.add_argument("--in", dest="input", required=True, help="CSV report written by 'run'")
    fit_parser.add_argument("--column", default="scattered", choices=REPORT_COLUMNS[1:])

    export_parser = subparsers.add_parser("export", help="Write canonical text of a built-in circuit")
    export_parser.add_argument("--circuit", required=True, choices=sorted(CORPUS), help="Built-in circuit")
    export_parser.add_argument("--out", help="Output path (stdout when omitted)")
    return parser


def print_rows(rows: Sequence[ReportRow]) -> None:
    table = Table(title="Run report")
    for column in REPORT_COLUMNS:
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(*(f"{getattr(row, c):.6g}" for c in REPORT_COLUMNS))
    console.print(table)


def print_fit(fit: FitResult) -> None:
    table = Table(title=f"log({fit.column}) vs log(n)")
    table.add_column("slope", justify="right")
    table.add_column("intercept", justify="right")
    table.add_column("r^2", justify="right")
    table.add_column("points", justify="right")
    table.add_row(f"{fit.slope:.6g}", f"{fit.intercept:.6g}", f"{fit.r_squared:.6g}", str(fit.points))
    console.print(table)


def command_run(args: argparse.Namespace) -> int:
    config = get_config()
    run_config = RunConfig(
        circuit_path=Path(args.circuit),
        backend=args.backend or config.BACKEND,
        n_list=parse_n_list(args.n) if args.n else config.n_values,
        p_scatter=args.p_scatter if args.p_scatter is not None else config.P_SCATTER,
        output_path=Path(args.out) if args.out else None,
        seed=args.seed if args.seed is not None else config.SEED,
        record_timing=config.RECORD_TIMING and not args.no_timing,
    )
    result = run_experiment(run_config)

    # Output only after every row succeeded
    if run_config.output_path:
        write_report(result.rows, run_config.output_path)
    else:
        sys.stdout.write(format_report(result.rows))
    print_rows(result.rows)
    return EXIT_OK


def command_fit(args: argparse.Namespace) -> int:
    fit = fit_scaling(read_report(args.input), args.column)
    sys.stdout.write(f"slope={fit.slope:.12g} intercept={fit.intercept:.12g} r2={fit.r_squared:.12g}\n")
    print_fit(fit)
    return EXIT_OK


def command_export(args: argparse.Namespace) -> int:
    ir = CORPUS[args.circuit]()
    if args.out:
        write_circuit(ir, args.out)
        logger.info(f"Exported '{ir.name}' to {args.out}")
    else:
        sys.stdout.write(format_circuit(ir) + "\n")
    return EXIT_OK


COMMANDS = {
    "run": command_run,
    "fit": command_fit,
    "export": command_export,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            if not Path(args.config).exists():
                raise FileNotFoundError(f"Config file not found: {args.config}")
            reload_config(config_file=args.config)
        get_config().validate()
        return COMMANDS[args.command](args)

    except CircuitError as e:
        console.print(f"[red]Circuit rejected:[/red]\n{escape(str(e))}", highlight=False)
        return EXIT_INPUT
    except CapacityError as e:
        logger.error(f"Capacity exceeded: {e}")
        console.print(f"[red]Capacity exceeded:[/red] {escape(str(e))}", highlight=False)
        return EXIT_CAPACITY
    except (FileNotFoundError, FitError, ValueError) as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}", highlight=False)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
