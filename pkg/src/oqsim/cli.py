"""Command-line entry point.

Subcommands:

* ``run <config.yaml>`` executes one experiment and writes
  ``{prefix}.csv``, ``{prefix}.meta.json`` and (unless disabled) a PNG
  figure. Identical config and seed give bit-identical CSV output.
* ``verify --suite fast|full`` runs the built-in verification suite and
  prints one pass/fail line per check plus a JSON summary.
* ``schema --print`` emits the JSON schema of the config format.

Exit codes: 0 success, 1 verification failures, 2 config/schema errors,
3 engine errors, 4 non-convergence (partial outputs are flagged in the
metadata).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config, experiments, verification
from .errors import ConvergenceError, OQSimError

ENV_OUTPUT_DIR = "OQSIM_OUTPUT_DIR"


def _format_number(x) -> str:
    """Shortest decimal that round-trips, so golden CSVs stay stable."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if np.isnan(v):
        return "nan"
    return repr(v)


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n_rows = arrays[0].shape[0]
    if any(a.shape[0] != n_rows for a in arrays):
        raise ValueError("CSV columns differ in length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n_rows):
            fh.write(",".join(_format_number(a[i]) for a in arrays) + "\n")


def _output_prefix(cfg: dict) -> Path:
    prefix = Path(cfg["output"])
    override = os.environ.get(ENV_OUTPUT_DIR)
    if override:
        prefix = Path(override) / prefix.name
    prefix.parent.mkdir(parents=True, exist_ok=True)
    return prefix


def _meta_document(cfg: dict, meta: dict, status: str) -> dict:
    import scipy
    return {
        "config": cfg,
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        "status": status,
        "result": meta,
        "versions": {
            "oqsim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def cmd_run(args) -> int:
    try:
        cfg = config.load_config(args.config)
    except (config.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    prefix = _output_prefix(cfg)
    np.random.seed(cfg["seed"])  # engines take explicit seeds; this is a guard
    driver = experiments.DRIVERS[cfg["experiment"]]
    try:
        result = driver(cfg["model"], cfg["params"], cfg["tolerances"])
    except ConvergenceError as exc:
        doc = _meta_document(cfg, {"error": str(exc)}, status="partial")
        with open(f"{prefix}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        print(f"error: non-convergence: {exc}", file=sys.stderr)
        return 4
    except (OQSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    write_csv(Path(f"{prefix}.csv"), result.columns)
    for suffix, table in result.extra_tables.items():
        write_csv(Path(f"{prefix}.{suffix}.csv"), table)
    doc = _meta_document(cfg, result.meta, status="ok")
    with open(f"{prefix}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
    if cfg["plot"] and not args.no_plot:
        from . import plotting
        plotting.render(cfg["experiment"], result.columns, result.meta,
                        f"{prefix}.png")
    print(f"wrote {prefix}.csv")
    return 0


def cmd_verify(args) -> int:
    results = verification.run_suite(args.suite)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name:32s} ({r.seconds:6.2f}s) {r.detail}")
    n_fail = sum(1 for r in results if not r.passed)
    summary = {
        "suite": args.suite,
        "n_checks": len(results),
        "n_failed": n_fail,
        "checks": [{"name": r.name, "passed": r.passed, "seconds": r.seconds,
                    "detail": r.detail} for r in results],
    }
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
        print(f"wrote {args.json_out}")
    else:
        print(json.dumps({"suite": args.suite, "n_checks": len(results),
                          "n_failed": n_fail}))
    return 0 if n_fail == 0 else 1


def cmd_schema(args) -> int:
    if args.print_schema:
        print(json.dumps(config.experiment_schema(), indent=2))
        return 0
    print("nothing to do; use --print", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqsim",
        description="Open-quantum-system experiments: Lindblad dynamics, "
                    "collision models, and fermionic transport.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("config", help="YAML config path")
    p_run.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
    p_run.set_defaults(fn=cmd_run)

    p_verify = sub.add_parser("verify", help="run the verification suite")
    p_verify.add_argument("--suite", choices=("fast", "full"), default="fast")
    p_verify.add_argument("--json-out", default=None,
                          help="write the machine-readable summary here")
    p_verify.set_defaults(fn=cmd_verify)

    p_schema = sub.add_parser("schema", help="config schema utilities")
    p_schema.add_argument("--print", dest="print_schema", action="store_true",
                          help="print the JSON schema")
    p_schema.set_defaults(fn=cmd_schema)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
