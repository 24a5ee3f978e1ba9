"""``mdx train|eval|flops|gradcheck --config <path> [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 unknown subcommand, 2 invalid configuration,
3 training diverged, 4 unreadable checkpoint, 5 gradient check failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from mdx.analysis import REPORT_COLUMNS, model_complexity
from mdx.analysis.gradients import run_gradient_suite
from mdx.config import ExperimentConfig, load_config, parse_config
from mdx.errors import ConfigError, FormatError, TrainingDivergedError
from mdx.evaluate import evaluate
from mdx.train import load_checkpoint, save_checkpoint, train, write_trace

COMMANDS = ("train", "eval", "flops", "gradcheck")
EXIT_USAGE, EXIT_CONFIG, EXIT_DIVERGED, EXIT_CHECKPOINT, EXIT_GRADCHECK = 1, 2, 3, 4, 5
EVAL_SETTING_COLUMNS = ("receiver", "n_rx", "n_layers", "prbs", "bits_per_symbol")


def build_id():
    """Digest of the installed package sources; stable within one build."""
    h = hashlib.sha256()
    root = resources.files("mdx")
    for path in sorted(Path(str(root)).rglob("*")):
        if path.suffix in (".py", ".json") and "__pycache__" not in path.parts:
            h.update(str(path.relative_to(str(root))).encode())
            h.update(path.read_bytes())
    return h.hexdigest()[:12]


def _write_manifest(out, command, cfg: ExperimentConfig, files, extra=None):
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "build_id": build_id(),
        "files": sorted(files),
        **(extra or {}),
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _stamp(cfg: ExperimentConfig):
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed}


def cmd_train(cfg: ExperimentConfig, out: Path):
    tcfg = cfg.train_config()
    ck_path = out / "checkpoint.mdxc"
    meta = {**_stamp(cfg), "build_id": build_id()}
    try:
        res = train(tcfg, checkpoint_path=ck_path, progress_every=100)
    except TrainingDivergedError as exc:
        print(f"training diverged: {exc}; slot seeds {exc.tti_seeds}", file=sys.stderr)
        _write_manifest(out, "train", cfg, [], {"status": "diverged", "iteration": exc.iteration,
                                               "tti_seeds": exc.tti_seeds})
        return EXIT_DIVERGED
    save_checkpoint(ck_path, res.params, res.adam, {**meta, "iteration": tcfg.iterations})
    write_trace(out / "loss.csv", res.trace, _stamp(cfg))
    _write_manifest(out, "train", cfg, ["checkpoint.mdxc", "loss.csv"], {"status": "ok"})
    final = res.trace[-1]["loss"] if res.trace else float("nan")
    print(f"trained {tcfg.iterations} iterations, final loss {final:.4f}; wrote {out}")
    return 0


def cmd_eval(cfg: ExperimentConfig, out: Path):
    configs = cfg.eval_configs()
    params = None
    if any("mdx" in e.receivers for e in configs):
        ck = cfg.checkpoint_path()
        if ck is None:
            raise ConfigError("eval of mdx needs eval.checkpoint")
        params = load_checkpoint(ck).params
    path = out / "eval.csv"
    stamp = _stamp(cfg)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(EVAL_SETTING_COLUMNS) + list(REPORT_COLUMNS) + list(stamp))
        for e in configs:
            for name, acc in evaluate(e, params).items():
                for row in acc.report():
                    vals = [repr(row[c]) if isinstance(row[c], float) else row[c]
                            for c in REPORT_COLUMNS]
                    w.writerow([name, e.n_rx, e.n_layers, e.prbs, e.bits_per_symbol] + vals
                               + list(stamp.values()))
                    print(f"{name:18s} {e.n_rx}x{e.n_layers} {e.prbs} PRB B={e.bits_per_symbol} "
                          f"snr={row['snr_db']:5.1f} ber={row['ber']:.3e} bler={row['bler']:.3f}")
    _write_manifest(out, "eval", cfg, ["eval.csv"])
    return 0


def cmd_flops(cfg: ExperimentConfig, out: Path):
    bits, settings = cfg.flops_settings()
    rows = [model_complexity(s["n_rx"], s["n_tx"], s["prbs"], bits, cfg.model).as_row()
            for s in settings]
    stamp = _stamp(cfg)
    with open(out / "flops.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) + list(stamp))
        w.writeheader()
        for r in rows:
            w.writerow({**r, **stamp})
            print(f"{r['n_rx']}x{r['n_tx']} {r['prbs']} PRB: {r['flops_total'] / 1e9:.3f} GFLOPs "
                  f"(mult), {r['flops_mul_add'] / 1e9:.3f} G (mul+add), params {r['param_count']}")
    _write_manifest(out, "flops", cfg, ["flops.csv"])
    return 0


def cmd_gradcheck(cfg: ExperimentConfig, out: Path):
    rows = run_gradient_suite(cfg.seed)
    stamp = _stamp(cfg)
    with open(out / "gradcheck.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["op", "max_rel_error", "tol", "passed"] + list(stamp))
        for r in rows:
            w.writerow([r.name, repr(r.max_rel_error), r.tol, r.passed] + list(stamp.values()))
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name:18s} {r.max_rel_error:.2e}")
    _write_manifest(out, "gradcheck", cfg, ["gradcheck.csv"])
    failed = [r.name for r in rows if not r.passed]
    if failed:
        print(f"gradient check failed for: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GRADCHECK
    return 0


HANDLERS = {"train": cmd_train, "eval": cmd_eval, "flops": cmd_flops, "gradcheck": cmd_gradcheck}


def build_parser():
    p = argparse.ArgumentParser(prog="mdx", description="MDX neural MU-MIMO receiver experiments")
    p.add_argument("command", help="|".join(COMMANDS))
    p.add_argument("--config", help="experiment JSON (optional for flops and gradcheck)")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--out", default=None, help="output directory (overrides run.out)")
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv[:1] in (["-h"], ["--help"]):
        parser.print_help()
        return 0
    if not argv or argv[0] not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"unknown subcommand; choose one of {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        if args.config is None:
            if args.command in ("train", "eval"):
                raise ConfigError(f"{args.command} requires --config")
            cfg = parse_config({}, ".", args.seed, args.out)
        else:
            cfg = load_config(args.config, args.seed, args.out)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
