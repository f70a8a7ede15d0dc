"""Command-line entry point.

Every subcommand reads an optional flat ``key = value`` config file
(``--config``); flags given on the command line override file values.
Exit status is 0 on success, 2 for configuration or usage errors and 3 for
data errors (missing files, malformed episodes, unattainable thresholds).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .artifact import load_model, save_model
from .dataset import ManifestEntry, read_episode, read_manifest, split_dataset, synthesize_corpus, write_corpus, write_manifest
from .errors import ConfigError, SteadyRCError
from .evaluation import detection_time, write_report
from .experiment import (
    VARIANTS,
    corpus_from_config,
    evaluate_saved,
    fit_with_threshold,
    grid_search,
    load_run_config,
    model_inputs,
    reservoir_size_sweep,
    run_pipeline,
    write_grid,
    write_size_sweep,
)
from .readout import TrainedModel

EXIT_CONFIG = 2
EXIT_DATA = 3


def _config(args, **extra):
    return load_run_config(
        args.config,
        manifest=getattr(args, "manifest", None),
        variant=getattr(args, "variant", None),
        seed=getattr(args, "seed", None),
        target_fpr=getattr(args, "target_fpr", None),
        k=getattr(args, "k", None),
        n_init=getattr(args, "n_i", None),
        out_dir=getattr(args, "out", None),
        **extra,
    )


def cmd_generate(args) -> int:
    if not args.out:
        raise ConfigError("generate needs --out")
    seed = 0 if args.seed is None else args.seed
    episodes = synthesize_corpus(args.n_episodes, n_archetypes=args.n_archetypes, seed=seed)
    manifest = write_corpus(episodes, args.out)
    print(f"wrote {len(episodes)} episodes to {manifest}")
    return 0


def cmd_split(args) -> int:
    cfg = _config(args)
    if not cfg.manifest:
        raise ConfigError("split needs --manifest")
    entries = read_manifest(cfg.manifest)
    seed = cfg.split_seed if args.seed is None else args.seed
    split = split_dataset([e.id for e in entries], cfg.split_ratios, seed).assignment()
    target = Path(args.out) if args.out else Path(cfg.manifest)
    write_manifest(target, [ManifestEntry(e.id, e.path, split[e.id]) for e in entries])
    counts = {name: sum(v == name for v in split.values()) for name in ("train", "val", "test")}
    print(f"wrote {target}: " + ", ".join(f"{k} {v}" for k, v in counts.items()))
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    model, val_auc = fit_with_threshold(cfg, corpus_from_config(cfg))
    path = save_model(model, Path(cfg.out_dir) / "model.npz")
    msg = f"{model.variant}: threshold {model.threshold:.6g}"
    if val_auc is not None:
        msg += f", validation AUC {val_auc:.4f}"
    print(f"{msg}; model written to {path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    model = load_model(args.model or Path(cfg.out_dir) / "model.npz")
    report = evaluate_saved(cfg, model)
    write_report(report, cfg.out_dir)
    _print_report(report)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    result = run_pipeline(cfg)
    _print_report(result.report)
    print(f"artifacts in {cfg.out_dir}")
    return 0


def cmd_gridsearch(args) -> int:
    cfg = _config(args)
    result = grid_search(cfg, corpus_from_config(cfg))
    path = write_grid(result, Path(cfg.out_dir) / f"grid_{cfg.variant}.csv")
    rho, alpha = result.argmax
    st = result.stats
    print(f"{cfg.variant_info.name}: best rho {rho:g}, alpha {alpha:g}; "
          f"AUC min {st['min']:.4f} mean {st['mean']:.4f} std {st['std']:.4f}; wrote {path}")
    return 0


def cmd_sweep_size(args) -> int:
    cfg = _config(args)
    rows = reservoir_size_sweep(cfg, corpus_from_config(cfg))
    path = write_size_sweep(rows, Path(cfg.out_dir) / f"size_sweep_{cfg.variant}.csv")
    for n_r, mean_auc, _ in rows:
        print(f"n_r {n_r:5d}  AUC {mean_auc:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    (ep,) = model_inputs(model, [read_episode(args.episode, label=False)])
    (scores,) = model.score([ep])
    n_I = model.n_I if isinstance(model, TrainedModel) else 0
    t_p = detection_time(scores, model.threshold, n_I)
    pred = np.where(scores >= model.threshold, 1, -1)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(("t_index", "score", "prediction"))
            for t in range(ep.n_e):
                w.writerow((t, repr(float(scores[t])), int(pred[t])))
    if t_p < ep.n_e:
        print(f"{ep.id}: steady state from sample {t_p} ({t_p * ep.dt / 60.0:.2f} min)")
    else:
        print(f"{ep.id}: steady state not detected")
    return 0


def _print_report(report) -> None:
    for p in report.points:
        c = p.confusion
        auc = "" if report.auc is None else f" AUC {report.auc:.4f}"
        print(f"{report.variant} [{p.name}] theta {p.threshold:.4g}:{auc} TPR {c.tpr:.4f} FPR {c.fpr:.4f} "
              f"0-1 loss {100 * c.zero_one_loss:.2f}% mu_terr {p.stats.mu_terr:.2f} min "
              f"sigma_terr {p.stats.sigma_terr:.2f} min saved {p.mean_time_saved:.1f} min")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steadyrc", description="Steady-state detection with echo state networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, run_flags=True):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (file for split/predict)")
        if run_flags:
            p.add_argument("--manifest")
            p.add_argument("--variant", choices=sorted(VARIANTS))
            p.add_argument("--target-fpr", type=float)
            p.add_argument("--k", type=int, help="number of clusters")
            p.add_argument("--n-i", type=int, help="initial-window length in samples")
        return p

    g = add("generate", cmd_generate, "write a synthetic corpus and manifest", run_flags=False)
    g.add_argument("--n-episodes", type=int, default=300)
    g.add_argument("--n-archetypes", type=int, default=24)
    add("split", cmd_split, "assign train/val/test in a manifest")
    add("train", cmd_train, "fit a model and pick its threshold on validation data")
    add("eval", cmd_eval, "evaluate a stored model on the test split").add_argument("--model")
    add("run", cmd_run, "train, select threshold and evaluate in one go")
    add("gridsearch", cmd_gridsearch, "validation AUC over spectral radius x leak rate")
    add("sweep-size", cmd_sweep_size, "test AUC per reservoir size")
    p = add("predict", cmd_predict, "score one episode CSV with a stored model", run_flags=False)
    p.add_argument("--model", required=True)
    p.add_argument("--episode", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SteadyRCError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
