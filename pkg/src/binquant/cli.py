"""Command-line interface.

Subcommands:
  project    quantize tensors from a .qtns container and report fit quality
  train      run one training experiment from a config file
  bench      run the benchmark grid and render the report
  gradcheck  compare analytic MLP gradients against central differences

Exit codes: 0 success, 1 I/O failure, 2 invalid input/config, 3 numeric
abort (non-finite loss or gradients), 4 check failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_bench
from .bruteforce import oracle_binary, oracle_mbit_l1, oracle_ternary_l1
from .config import parse_config, resolve_model_spec
from .datasets import generate
from .errors import NumericsError, ValidationError
from .mlp import MlpSpec, gradient_check
from .projections import (Codebook, lloyd_mbit, project_binary_l1,
                          project_binary_l2, project_ternary_l1,
                          project_ternary_l2)
from .reporting import (emit_table, pivot_markdown, save_benchmark_chart,
                        save_training_curves, write_metrics_csv)
from .tensorfile import (TensorFileError, read_tensors, save_checkpoint,
                         write_tensors)
from .training import run_experiment, train_full_precision

__all__ = ["main"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3
EXIT_CHECK = 4

GRADCHECK_TOL = 1e-5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binquant",
        description="Binary/ternary weight quantization: projections, "
                    "training algorithms, and benchmarks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="quantize tensors from a .qtns file")
    p.add_argument("--in", dest="in_path", required=True, metavar="PATH",
                   help="input .qtns tensor container")
    p.add_argument("--out", dest="out_path", required=True, metavar="PATH",
                   help="output .qtns with <name>/scale, <name>/codes, <name>/dense")
    p.add_argument("--norm", choices=("l1", "l2"), default="l1",
                   help="fit criterion (default: l1)")
    p.add_argument("--bits", choices=("1", "2", "m"), default="1",
                   help="1=binary, 2=ternary, m=multi-level codebook")
    p.add_argument("--codebook", metavar="LEVELS",
                   help="comma-separated positive levels, e.g. 1,2 (required for --bits m)")
    p.add_argument("--include-zero", action="store_true",
                   help="add the zero code to the --bits m codebook")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check against the brute-force reference fit")

    p = sub.add_parser("train", help="run one training experiment")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--out-dir", default=".", metavar="DIR",
                   help="where metrics.csv, results.csv/.md, checkpoint.qtns and "
                        "training_curves.png are written (default: .)")

    p = sub.add_parser("bench", help="run the benchmark grid")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--seeds", type=int, default=5, metavar="N",
                   help="seeds per grid cell (default: 5)")
    p.add_argument("--jobs", type=int, default=1, metavar="J",
                   help="worker processes (default: 1)")
    p.add_argument("--out-dir", default=".", metavar="DIR",
                   help="where results.csv/.md, benchmark.png and checkpoints/ "
                        "are written (default: .)")

    p = sub.add_parser("gradcheck", help="verify analytic gradients numerically")
    p.add_argument("--dims", default="6,8,5,3", metavar="D0,D1,...",
                   help="MLP layer dims (default: 6,8,5,3)")
    p.add_argument("--trials", type=int, default=10, metavar="T")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    return parser


def _parse_codebook(arg: str | None, include_zero: bool) -> Codebook:
    if not arg:
        raise ValidationError("--bits m requires --codebook")
    try:
        levels = tuple(float(part) for part in arg.split(","))
    except ValueError:
        raise ValidationError(f"--codebook expects comma-separated numbers, got {arg!r}") from None
    return Codebook(levels=levels, include_zero=include_zero)


def _project_one(w: np.ndarray, args, codebook: Codebook | None):
    if args.bits == "1":
        return (project_binary_l1 if args.norm == "l1" else project_binary_l2)(w)
    if args.bits == "2":
        return (project_ternary_l1 if args.norm == "l1" else project_ternary_l2)(w)
    if args.norm != "l1":
        raise ValidationError("--bits m supports only --norm l1")
    return lloyd_mbit(w, codebook)


def _oracle_one(w: np.ndarray, args, codebook: Codebook | None):
    if args.bits == "1":
        return oracle_binary(w, norm=args.norm)
    if args.bits == "2":
        if args.norm != "l1":
            raise ValidationError("no brute-force reference for ternary l2; drop --oracle")
        return oracle_ternary_l1(w)
    return oracle_mbit_l1(w, codebook)


def cmd_project(args) -> int:
    codebook = _parse_codebook(args.codebook, args.include_zero) if args.bits == "m" else None
    tensors = read_tensors(args.in_path)
    out: dict[str, np.ndarray] = {}
    for name, tensor in tensors.items():
        w = tensor.ravel()
        result = _project_one(w, args, codebook)
        q = result.quantized
        print(f"{name}: scale={q.scale:.6g} objective={result.objective:.6g} "
              f"support={result.support_size}/{w.size}")
        if result.degenerate:
            print(f"{name}: degenerate input (all zeros); scale fixed at 0")
        if args.oracle:
            ref = _oracle_one(w, args, codebook)
            gap = result.objective - ref.objective
            print(f"{name}: oracle objective={ref.objective:.6g} gap={gap:.3e}")
        out[f"{name}/scale"] = np.array([q.scale])
        out[f"{name}/codes"] = np.asarray(q.codes, dtype=np.float64).reshape(tensor.shape)
        out[f"{name}/dense"] = q.dense().reshape(tensor.shape)
    write_tensors(args.out_path, out)
    print(f"wrote {len(tensors)} projected tensor(s) to {args.out_path}")
    return EXIT_OK


def _write_report(rows, out_dir: Path, *, pivot: bool) -> None:
    (out_dir / "results.csv").write_text(emit_table(rows, fmt="csv"))
    md = emit_table(rows, fmt="markdown")
    if pivot:
        md = pivot_markdown(rows) + "\n" + md
    (out_dir / "results.md").write_text(md)


def cmd_train(args) -> int:
    cfg = parse_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_ds, test_ds = generate(cfg.data)
    spec = resolve_model_spec(cfg, train_ds)
    checkpoint = out_dir / "checkpoint.qtns"
    try:
        if cfg.train.algorithm == "none":
            state, row = train_full_precision(cfg.train, train_ds, test_ds, spec,
                                              checkpoint_path=checkpoint)
        else:
            state, row = run_experiment(cfg.train, train_ds, test_ds, spec)
            save_checkpoint(checkpoint, state.quantized_params,
                            {"layer_dims": list(spec.layer_dims),
                             "seed": cfg.train.seed,
                             "algorithm": cfg.train.algorithm})
    except NumericsError as e:
        dump = out_dir / "nan_dump.qtns"
        if e.snapshot:
            write_tensors(dump, e.snapshot)
            print(f"numeric abort: {e}; state dumped to {dump}", file=sys.stderr)
        else:
            print(f"numeric abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    write_metrics_csv(out_dir / "metrics.csv", state.metrics_log)
    _write_report([row], out_dir, pivot=False)
    save_training_curves(state.metrics_log, out_dir / "training_curves.png")
    print(f"{cfg.train.algorithm} (start={cfg.train.start}, "
          f"blend={'on' if cfg.train.blend_rho > 0 else 'off'}): "
          f"test accuracy {row.accuracy:.4f}")
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = parse_config(args.config)
    if args.seeds < 1 or args.jobs < 1:
        raise ValidationError("--seeds and --jobs must be >= 1")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = run_bench(cfg, seeds=args.seeds, jobs=args.jobs, out_dir=out_dir)
    _write_report(rows, out_dir, pivot=True)
    save_benchmark_chart(rows, out_dir / "benchmark.png")
    print(emit_table(rows, fmt="markdown"))
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    try:
        dims = tuple(int(part) for part in args.dims.split(","))
    except ValueError:
        raise ValidationError(f"--dims expects comma-separated integers, got {args.dims!r}") from None
    if args.trials < 0:
        raise ValidationError("--trials must be >= 0")
    if args.trials == 0:
        print("no trials requested")
        return EXIT_OK
    spec = MlpSpec(dims)
    worst = 0.0
    failures = 0
    for t in range(args.trials):
        err = gradient_check(spec, seed=args.seed + t, _corrupt=args.corrupt)
        status = "ok" if err < GRADCHECK_TOL else "FAIL"
        print(f"trial {t}: dims {list(dims)} rel err {err:.3e} [{status}]")
        worst = max(worst, err)
        failures += status == "FAIL"
    print(f"{args.trials} trial(s), worst rel err {worst:.3e}, tolerance {GRADCHECK_TOL:.0e}")
    if failures:
        print(f"gradient check FAILED in {failures}/{args.trials} trial(s)", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


_COMMANDS = {
    "project": cmd_project,
    "train": cmd_train,
    "bench": cmd_bench,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, TensorFileError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericsError as e:
        print(f"numeric abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
