"""Command-line front end.

    uhlmann-lab run --experiment fig2 [--config cfg.json] [--out dir]
                    [--grid NKX,NKY] [--dt X] [--threads N]

Exit codes: 0 on success; 2 when a reported row is flagged (undefined winding
or closed amplitude gap at a reported point, which the fig2 preset hits by
construction at its t* row); 1 on configuration errors, including bad
arguments. UHLMANN_LAB_THREADS supplies the default for --threads; without
either, the kernel keeps numba's own thread default.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ConfigError
from .runner import EXPERIMENTS, build_config, load_config_file, run_experiment


class _Parser(argparse.ArgumentParser):
    # argument mistakes are config errors (exit 1); argparse's default exit
    # status of 2 is reserved for flagged result rows
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--grid wants NKX,NKY, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--grid wants integers, got {text!r}") from exc


def _configure_threads(requested: int | None) -> None:
    if requested is None:
        raw = os.environ.get("UHLMANN_LAB_THREADS", "").strip()
        if not raw:
            return
        try:
            requested = int(raw)
        except ValueError as exc:
            raise ConfigError(f"UHLMANN_LAB_THREADS = {raw!r} is not an integer") from exc
    if requested < 1:
        raise ConfigError(f"threads must be >= 1, got {requested}")
    import numba

    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    parser = _Parser(
        prog="uhlmann-lab",
        description="Dephasing-ramp experiments: Lindblad evolution, holonomy "
                    "spectra, topological transition estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run_p = sub.add_parser("run", help="run one experiment preset")
    run_p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    run_p.add_argument("--config", help="JSON file overlaying the preset")
    run_p.add_argument("--out", help="output directory (default runs/<experiment>)")
    run_p.add_argument("--grid", help="momentum grid override, NKX,NKY")
    run_p.add_argument("--dt", type=float, help="integrator step override")
    run_p.add_argument("--threads", type=int,
                       help="kernel threads (default $UHLMANN_LAB_THREADS)")
    args = parser.parse_args(argv)

    try:
        _configure_threads(args.threads)
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = Path(args.out)
        if args.grid is not None:
            overrides["grid"] = _parse_grid(args.grid)
        if args.dt is not None:
            overrides["dt"] = args.dt
        file_values = load_config_file(args.config) if args.config else None
        cfg = build_config(args.experiment, file_values, **overrides)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    for tr in report.transitions:
        if tr["estimate"] is None:
            print(f"{tr['name']}: no sign change inside the scanned bracket")
        else:
            lo, hi = tr["bracket"]
            print(f"{tr['name']} = {tr['estimate']:.6g}  bracket [{lo:.6g}, {hi:.6g}]")
    for row in report.rows:
        if row.get("flagged"):
            label = row.get("tag") or row.get("series") or row.get("m")
            print(f"flagged {label}: {row.get('error')}", file=sys.stderr)
    print(f"wrote {len(report.files)} files to {cfg.output_dir}")
    return 2 if report.flagged else 0


if __name__ == "__main__":
    sys.exit(main())
