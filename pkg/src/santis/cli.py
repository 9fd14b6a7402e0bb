"""Command line interface: ``santis <command> [options]``.

Exit codes: 0 success, 2 validation or missing-input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from santis.errors import NumericalError, ValidationError

log = logging.getLogger("santis")


def _experiment(args):
    from santis.harness import ExperimentConfig

    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    train = dict(cfg.train)
    if args.seed is not None:
        train["seed"] = args.seed
    if args.precision is not None:
        train["precision"] = args.precision
    cfg = replace(cfg, train=train)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _print_csv(header, rows):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def cmd_phantoms(args):
    from santis.data import PhantomSpec, ensure_dir, generate_phantom, save_tensor

    out = ensure_dir(args.out or "phantoms")
    base = args.seed or 0
    index = []
    for k in range(args.n):
        spec = PhantomSpec(seed=base + k, grid=args.grid, n_coils=args.coils)
        ref, coils, sens = generate_phantom(spec)
        stem = f"phantom_{k:04d}"
        meta = {"seed": spec.seed, "grid": spec.grid, "n_coils": spec.n_coils}
        save_tensor(ref.data, out / f"{stem}_ref.tensor", tag="reference", meta=meta)
        save_tensor(coils.data, out / f"{stem}_coils.tensor", tag="coil-images", meta=meta)
        save_tensor(sens.data, out / f"{stem}_sens.tensor", tag="sensitivities", meta=meta)
        index.append({"stem": stem, **meta})
    (out / "manifest.json").write_text(json.dumps(index, indent=2))
    _print_csv(["stem", "seed", "grid", "n_coils"], [[e["stem"], e["seed"], e["grid"], e["n_coils"]] for e in index])
    return 0


def cmd_masks(args):
    from santis.harness import build_library, eval_patterns
    from santis.sampling import save_library

    cfg = _experiment(args)
    if args.kind:
        cfg = replace(cfg, kind=args.kind)
    lib = build_library(cfg)
    out = save_library(lib, args.out or "library")
    pats = eval_patterns(cfg, lib)
    rows = []
    for label, p in pats.items():
        size = len(p.sampled_lines) if lib.kind == "cartesian" else len(p.spoke_angles)
        rows.append([label, lib.kind, size])
    log.info("wrote %d patterns to %s", len(lib), out)
    _print_csv(["pattern", "kind", "lines_or_spokes"], rows)
    return 0


def cmd_train(args):
    from santis.harness import build_library, make_slice, split_seeds, train_config
    from santis.neural import load_checkpoint, train

    cfg = _experiment(args)
    method = {"fixed": "CNN-Fix", "augmented": "SANTIS"}[args.mode]
    tcfg = train_config(cfg, method)
    if args.epochs is not None:
        tcfg = replace(tcfg, epochs=args.epochs)
    out = Path(args.out or f"checkpoints/{method}")
    train_seeds, _ = split_seeds(cfg)
    data = [make_slice(cfg, s) for s in train_seeds]
    lib = build_library(cfg)
    state = load_checkpoint(out) if args.resume and (out / "manifest.json").exists() else None
    if state is not None:
        state.cfg.epochs = tcfg.epochs
    state = train(data, lib, tcfg, state=state, checkpoint_dir=out)
    last = state.history[-1] if state.history else {}
    _print_csv(["method", "epochs", "iterations", "loss1", "loss2"],
               [[method, state.epoch, state.iteration, last.get("loss1", ""), last.get("loss2", "")]])
    return 0


def cmd_recon(args):
    from santis.data import ensure_dir, load_tensor, save_tensor
    from santis.encoding import EncodingContext, encode, zero_fill
    from santis.harness import build_library, eval_patterns
    from santis.metrics import nrmse, ssim, tenengrad_reduction
    from santis.neural import infer, load_checkpoint
    from santis.plotting import save_slice_png
    from santis.recon import CsConfig, cs_pi_reconstruct
    from santis.sampling import load_library

    cfg = _experiment(args)
    ref, _ = load_tensor(args.ref)
    sens, _ = load_tensor(args.sens)
    lib = load_library(args.library) if args.library else build_library(replace(cfg, grid=ref.shape[-1]))
    pattern = eval_patterns(cfg, lib)[cfg.pattern_labels[1]] if args.heldout else lib[args.index]
    ctx = EncodingContext(sens, pattern)
    d = encode(ctx, ref)
    if args.method == "zf":
        rec = zero_fill(ctx, d)
    elif args.method == "cs":
        rec = cs_pi_reconstruct(ctx, d, CsConfig(**cfg.cs)).image
    else:
        if not args.checkpoint:
            raise ValidationError("--checkpoint is required for --method cnn (see `santis train`)")
        rec = infer(load_checkpoint(args.checkpoint), zero_fill(ctx, d))
    out = ensure_dir(args.out or "recon")
    save_tensor(rec.astype(np.complex128), out / "recon.tensor", tag=f"{args.method}-recon")
    save_slice_png(out / "recon.png", rec, ref, title=args.method)
    _print_csv(["method", "nRMSE(%)", "SSIM(%)", "Tenengrad(%)"],
               [[args.method, 100 * nrmse(rec, ref), 100 * ssim(rec, ref), 100 * tenengrad_reduction(rec, ref)]])
    return 0


def cmd_eval(args):
    from santis.harness import COLUMNS, run_experiment

    cfg = _experiment(args)
    if args.no_time:
        cfg = replace(cfg, record_time=False)
    run_experiment(cfg)
    text = (Path(cfg.out_dir) / "summary.csv").read_text()
    sys.stdout.write(text)
    log.info("results in %s (%s)", cfg.out_dir, ", ".join(COLUMNS))
    return 0


def cmd_report(args):
    from santis.harness import COLUMNS, build_report

    rep = build_report(args.results, args.out)
    _print_csv(COLUMNS, rep["table"])
    for f in rep["figures"]:
        log.info("figure %s", f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="santis", description="Sampling-augmented MRI reconstruction toolkit")
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--seed", type=int, help="base seed (phantoms) or training seed")
    p.add_argument("--threads", type=int, default=1, help="torch intra-op threads")
    p.add_argument("--precision", choices=["f32", "f64"], help="network precision")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phantoms", help="generate a synthetic multi-coil dataset")
    s.add_argument("--n", type=int, default=10, help="number of phantoms")
    s.add_argument("--grid", type=int, default=128, help="image size (power of two)")
    s.add_argument("--coils", type=int, default=4, help="receive coils")
    s.set_defaults(func=cmd_phantoms)

    s = sub.add_parser("masks", help="build and save a sampling-pattern library")
    s.add_argument("--kind", choices=["cartesian", "radial"], help="overrides the config kind")
    s.set_defaults(func=cmd_masks)

    s = sub.add_parser("train", help="train CNN-Fix (fixed) or SANTIS (augmented)")
    s.add_argument("--mode", choices=["fixed", "augmented"], required=True)
    s.add_argument("--epochs", type=int, help="total epochs (overrides the config)")
    s.add_argument("--resume", action="store_true", help="continue from the checkpoint in --out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("recon", help="reconstruct one slice")
    s.add_argument("--method", choices=["zf", "cs", "cnn"], required=True)
    s.add_argument("--ref", required=True, help="fully sampled reference tensor")
    s.add_argument("--sens", required=True, help="sensitivity tensor (n_coils, h, w)")
    s.add_argument("--library", help="library directory from `santis masks`")
    s.add_argument("--index", type=int, default=0, help="library entry to sample with")
    s.add_argument("--heldout", action="store_true", help="use the held-out pattern")
    s.add_argument("--checkpoint", help="checkpoint directory for --method cnn")
    s.set_defaults(func=cmd_recon)

    s = sub.add_parser("eval", help="run the method x pattern experiment")
    s.add_argument("--no-time", action="store_true", help="leave time(s) empty for byte-stable CSVs")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("report", help="figures and tables from an eval directory")
    s.add_argument("--results", required=True, help="directory written by `santis eval`")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    import torch

    torch.set_num_threads(max(1, args.threads))
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
