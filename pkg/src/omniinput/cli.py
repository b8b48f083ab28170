"""Command-line pipeline: sample -> annotate -> evaluate -> compare -> report.

Every subcommand writes its artifacts into a run directory together with a
manifest, so later stages (and `report`) work purely from disk.  Errors
exit nonzero with a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import importlib.metadata
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from . import comparison as cmp_mod
from .annotation import AnnotationStore
from .evaluator import PrecisionPerBin, Window, aupr, pr_curve
from .histogram import BinGrid, OutputDistribution
from .models import (Direction, EnergyModel, ModuloAnnotator, NGramModel,
                     OracleAnnotator, SumEnergy)
from .reservoir import BinReservoir
from .samplers import (KernelKind, ProposalKernel, PTConfig, WLConfig, pt_run,
                       reweight, wang_landau_run)
from .space import InputSpace
from .validation import exact_output_distribution

__all__ = ["main"]


class CliError(ValueError):
    def __init__(self, field: str, constraint: str):
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint


def _version() -> str:
    try:
        return importlib.metadata.version("omniinput")
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def build_model(spec: str, d: int | None, n: int | None) -> EnergyModel:
    kind, _, rest = spec.partition(":")
    if kind == "sum":
        if d is None or n is None:
            raise CliError("model", "sum model requires --D and --N")
        return SumEnergy(InputSpace(n + 1, d))
    if kind == "ngram":
        with open(rest) as fh:
            return NGramModel.from_json(fh.read())
    if kind == "external":
        from .external import ExternalModel
        if d is None or n is None:
            raise CliError("model", "external model requires --D and --N")
        return ExternalModel(rest, InputSpace(n + 1, d))
    raise CliError("model", f"unknown model kind {kind!r}")


def build_oracle(spec: str) -> OracleAnnotator:
    kind, _, rest = spec.partition(":")
    if kind == "modulo":
        return ModuloAnnotator(int(rest) if rest else 30)
    raise CliError("oracle", f"unknown oracle {spec!r}")


def parse_grid(text: str) -> BinGrid:
    try:
        z_min, z_max, dz = (float(x) for x in text.split(","))
    except ValueError:
        raise CliError("grid", "expected zmin,zmax,dz")
    grid = BinGrid(z_min, z_max, dz)
    if not 150 <= grid.bin_count <= 600:
        print(f"note: {grid.bin_count} bins is outside the usual 150-600 "
              "working range", file=sys.stderr)
    return grid


def parse_window(text: str) -> Window:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise CliError("window", "expected zlo,zhi")
    return Window(lo, hi)


def _out_dir(args) -> Path:
    import os
    out = os.environ.get("OMNIINPUT_OUT") or args.out
    if not out:
        raise CliError("out", "required (flag --out or env OMNIINPUT_OUT)")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out: Path, args, extra: dict) -> None:
    manifest = {
        "model": args.model,
        "D": args.D,
        "N": args.N,
        "grid": args.grid,
        "seed": getattr(args, "seed", None),
        "version": _version(),
    }
    manifest.update(extra)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def _read_manifest(run: Path) -> dict:
    with open(Path(run) / "manifest.json") as fh:
        return json.load(fh)


def _load_run(run: Path):
    manifest = _read_manifest(run)
    model = build_model(manifest["model"], manifest.get("D"),
                        manifest.get("N"))
    hist = OutputDistribution.read_csv(Path(run) / "histogram.csv")
    return manifest, model, hist


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_enumerate(args) -> int:
    out = _out_dir(args)
    model = build_model(args.model, args.D, args.N)
    grid = parse_grid(args.grid)
    dist = exact_output_distribution(model.space, model, grid)
    dist.write_csv(out / "histogram.csv",
                   {"model": model.name, "source": "enumeration"})
    _write_manifest(out, args, {"command": "enumerate",
                                "source": "enumeration"})
    print(f"wrote {out / 'histogram.csv'} "
          f"({int((dist.visits > 0).sum())} nonzero bins)")
    return 0


def _build_kernel(args) -> ProposalKernel:
    kind = (KernelKind.SHARED_BETA_INFORMED if args.kernel == "shared_beta"
            else KernelKind.SINGLE_SITE_UNIFORM)
    return ProposalKernel(kind, sites_per_step=args.sites)


def cmd_sample(args) -> int:
    out = _out_dir(args)
    model = build_model(args.model, args.D, args.N)
    grid = parse_grid(args.grid)
    kernel = _build_kernel(args)
    if args.algo == "wl":
        config = WLConfig(max_steps=args.max_steps)
        hist, reservoir, diagnostics = wang_landau_run(
            model.space, model, grid, kernel, config, args.seed,
            reservoir_capacity=args.quota)
        config_dict = config.to_dict()
    elif args.algo == "pt":
        temps = ([float(t) for t in args.temperatures.split(",")]
                 if args.temperatures else
                 list(np.geomspace(16.0, 1.0, 6)))
        config = PTConfig(tuple(temps),
                          steps_per_replica=args.max_steps // len(temps))
        pth, reservoir, diagnostics = pt_run(
            model.space, model, grid, kernel, config, args.seed,
            reservoir_capacity=args.quota)
        hist = reweight(pth, model.direction.sign)
        config_dict = config.to_dict()
    else:
        raise CliError("algo", "expected wl or pt")
    hist.write_csv(out / "histogram.csv",
                   {"model": model.name, "source": args.algo})
    reservoir.write_jsonl(out / "inputs.jsonl")
    with open(out / "diagnostics.json", "w") as fh:
        json.dump(diagnostics, fh, indent=2)
    _write_manifest(out, args, {"command": "sample", "algo": args.algo,
                                "kernel": kernel.to_dict(),
                                "config": config_dict,
                                "quota": args.quota})
    print(f"wrote {out}/histogram.csv, inputs.jsonl, diagnostics.json")
    return 0


def _ensure_tasks(run: Path, quota: int) -> AnnotationStore:
    store = AnnotationStore(run)
    run_id = Path(run).name
    if not store.run_tasks(run_id):
        reservoir = BinReservoir.read_jsonl(Path(run) / "inputs.jsonl",
                                            capacity=quota)
        _, underfilled = store.create_tasks(run_id, reservoir, quota)
        if underfilled:
            print(f"UNDERFILLED bins (below quota {quota}): {underfilled}")
    return store


def cmd_annotate(args) -> int:
    run = Path(args.run)
    manifest = _read_manifest(run)
    grid = parse_grid(manifest["grid"])
    quota = args.quota or manifest.get("quota", 30)
    store = _ensure_tasks(run, quota)
    run_id = run.name
    if args.mode == "oracle":
        oracle = build_oracle(args.oracle)
        n = store.auto_annotate(run_id, oracle)
        print(f"oracle {oracle.name} annotated {n} tasks")
        return 0
    if args.mode == "terminal":
        return _terminal_annotate(store, run_id, args.annotator)
    if args.mode == "serve":
        import uvicorn

        from .service import create_app
        frontend = Path(args.frontend) if args.frontend else None
        app = create_app(store, grid, frontend, blind=args.blind)
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    raise CliError("mode", "expected serve, oracle, or terminal")


def _terminal_annotate(store: AnnotationStore, run_id: str,
                       annotator: str) -> int:
    while True:
        task = store.next_pending(run_id, annotator)
        if task is None:
            print("no pending tasks; all done")
            return 0
        print(f"\nbin {task.bin}  z={task.z:g}")
        print("  " + " ".join(str(t) for t in task.tokens))
        raw = input("score [0..1, q to quit]: ").strip()
        if raw.lower() == "q":
            return 0
        try:
            store.submit(task.task_id, annotator, float(raw))
        except ValueError as exc:
            print(f"rejected: {exc}")


def cmd_pr(args) -> int:
    run = Path(args.run)
    manifest, model, hist = _load_run(run)
    grid = hist.grid
    window = (parse_window(args.window) if args.window
              else Window(grid.z_min, grid.z_max))
    if manifest.get("source") == "enumeration" and args.oracle:
        from .validation import exact_precision_per_bin
        oracle = build_oracle(args.oracle)
        precision = exact_precision_per_bin(model.space, model, oracle, grid)
    else:
        quota = args.quota or manifest.get("quota", 30)
        store = _ensure_tasks(run, quota)
        if args.oracle:
            store.auto_annotate(run.name, build_oracle(args.oracle))
        precision, _ = store.merge_to_precision(run.name, grid)
    if hist.normalization_state.value != "normalized_to_space":
        hist = hist.normalize_to_space(model.space)
    curve = pr_curve(precision, hist, model.direction, window)
    curve.write_csv(run / "pr.csv")
    area = aupr(curve)
    with open(run / "pr.json", "w") as fh:
        json.dump({"window": [window.z_lo, window.z_hi], "aupr": area,
                   "points": [[p.lam, p.recall_unnorm_log, p.recall_norm,
                               p.precision] for p in curve.points]}, fh,
                  indent=2)
    print(f"AUPR = {area:.4f}; wrote {run}/pr.csv, pr.json")
    return 0


def _load_samples(run: Path):
    samples = []
    with open(Path(run) / "inputs.jsonl") as fh:
        for line in fh:
            rec = json.loads(line)
            samples.append((np.asarray(rec["tokens"], dtype=np.int64),
                            float(rec["z"])))
    return samples


def cmd_compare(args) -> int:
    out = _out_dir(args)
    window = parse_window(args.window)
    runs = [Path(args.run_a), Path(args.run_b)]
    loaded = [_load_run(r) for r in runs]
    reports = cmp_mod.build_overlap_report(
        _load_samples(runs[0]), loaded[0][1],
        _load_samples(runs[1]), loaded[1][1], window)
    payload = reports.to_dict()
    curves = []
    for run, (manifest, model, hist) in zip(runs, loaded):
        pr_path = run / "pr.json"
        if pr_path.exists():
            with open(pr_path) as fh:
                pr_data = json.load(fh)
            from .evaluator import PRCurve, PRPoint
            pts = [PRPoint(lam, float(np.exp(lg)), lg, rn, p)
                   for lam, lg, rn, p in pr_data["points"]]
            curves.append((model.name, PRCurve(window, model.direction, pts)))
    if len(curves) == 2:
        overlaid = cmp_mod.overlay_pr(curves, reports)
        overlaid.write_csv(out / "overlay.csv")
        payload["auprs"] = dict(zip(overlaid.model_ids, overlaid.auprs))
    with open(out / "comparison.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"ratio = {payload['ratio']:.4f}; wrote {out}/comparison.json")
    return 0


def cmd_report(args) -> int:
    run = Path(args.run)
    manifest = _read_manifest(run)
    report = {"manifest": manifest}
    hist_path = run / "histogram.csv"
    if hist_path.exists():
        hist = OutputDistribution.read_csv(hist_path)
        finite = np.isfinite(hist.log_counts)
        report["histogram"] = {
            "bins": hist.grid.bin_count,
            "populated_bins": int(finite.sum()),
            "log_count_span": (float(hist.log_counts[finite].max()
                                     - hist.log_counts[finite].min())
                               if finite.any() else None),
        }
    for name in ("pr.json", "diagnostics.json", "comparison.json"):
        path = run / name
        if path.exists():
            with open(path) as fh:
                report[name.removesuffix(".json")] = json.load(fh)
    with open(run / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"wrote {run}/report.json")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--model", help="sum | ngram:<path> | external:<cmd>")
    p.add_argument("--D", type=int, help="sequence length")
    p.add_argument("--N", type=int, help="max token value (vocab is 0..N)")
    p.add_argument("--grid", help="zmin,zmax,dz")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap; determinism documented for 1")
    p.add_argument("--out", help="output directory (env OMNIINPUT_OUT wins)")
    p.add_argument("--window", help="zlo,zhi")
    p.add_argument("--quota", type=int, default=30,
                   help="annotation inputs per bin")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omniinput",
        description="input-space precision-recall via output-distribution "
                    "sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="brute-force output distribution")
    _add_common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sample", help="Wang-Landau or PT sampling run")
    _add_common(p)
    p.add_argument("--algo", choices=["wl", "pt"], default="wl")
    p.add_argument("--kernel", choices=["uniform", "shared_beta"],
                   default="uniform")
    p.add_argument("--sites", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=5_000_000)
    p.add_argument("--temperatures", help="comma-separated descending ladder")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("annotate", help="annotation service and oracles")
    p.add_argument("mode", choices=["serve", "oracle", "terminal"])
    p.add_argument("--run", required=True, help="sample run directory")
    p.add_argument("--quota", type=int)
    p.add_argument("--oracle", help="modulo:<m>")
    p.add_argument("--annotator", default="anonymous")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8380)
    p.add_argument("--frontend", help="static UI asset directory")
    p.add_argument("--blind", action="store_true",
                   help="hide bin identity and z from annotators")
    p.add_argument("--config")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("pr", help="precision-recall curve from a run")
    p.add_argument("--run", required=True)
    p.add_argument("--window", help="zlo,zhi")
    p.add_argument("--oracle", help="auto-annotate with modulo:<m>")
    p.add_argument("--quota", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_pr)

    p = sub.add_parser("compare", help="two-model comparison report")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="re-emit a summary from on-disk artifacts")
    p.add_argument("--run", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, "rb") as fh:
        config = tomllib.load(fh)
    for key, value in config.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise CliError(key, "unknown config key")
        # flags override config: only fill attributes still unset
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except CliError as exc:
        json.dump({"error": "config", "field": exc.field,
                   "constraint": exc.constraint}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
