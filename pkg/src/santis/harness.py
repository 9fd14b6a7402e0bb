"""Experiment runner: synthesize a train/test split, build the pattern library,
train or load the networks, reconstruct every test slice with every method on
the seen and the held-out pattern, and write the metric tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from santis.data import PhantomSpec, add_noise, ensure_dir, generate_phantom, save_tensor
from santis.encoding import EncodingContext, encode, estimate_sensitivities, zero_fill
from santis.encoding.operators import KspaceSamples
from santis.errors import ValidationError
from santis.metrics import nrmse, ssim, tenengrad_reduction
from santis.neural import TrainConfig, infer, load_checkpoint, save_checkpoint, train
from santis.recon import CsConfig, cs_pi_reconstruct
from santis.sampling import PatternLibrary, heldout_pattern, make_cartesian_library, make_radial_library

log = logging.getLogger(__name__)

METHODS = ("ZF", "CS-PI", "CNN-Fix", "SANTIS")
COLUMNS = ["method", "pattern", "nRMSE(%)", "SSIM(%)", "Tenengrad(%)", "time(s)"]
SLICE_COLUMNS = ["method", "pattern", "slice", "seed", "nRMSE(%)", "SSIM(%)", "Tenengrad(%)", "time(s)"]
_TRAIN_MODE = {"CNN-Fix": "fixed", "SANTIS": "augmented"}


@dataclass
class ExperimentConfig:
    kind: str = "cartesian"
    grid: int = 128
    n_coils: int = 4
    n_train: int = 150
    n_test: int = 20
    split_seed: int = 0
    n_ellipses: int = 8
    texture_amp: float = 0.1
    contrast_scale: float = 1.0
    test_contrast_scale: float | None = None
    sens_source: str = "true"
    sens_block: int = 5
    noise_sigma: float = 0.0
    R: float = 3.0
    center_frac: float = 0.05
    library_size: int = 3000
    library_seed: int = 0
    heldout_seed: int = 10_007
    spokes: int = 89
    samples_per_spoke: int | None = None
    methods: list = field(default_factory=lambda: list(METHODS))
    cs: dict = field(default_factory=lambda: {"lam": 1e-4, "max_iters": 60})
    train: dict = field(default_factory=lambda: {"epochs": 30, "lambda_gan": 0.0})
    checkpoints: dict = field(default_factory=dict)
    train_if_missing: bool = True
    record_time: bool = True
    save_images: bool = True
    out_dir: str = "results"

    def validate(self):
        if self.kind not in ("cartesian", "radial"):
            raise ValidationError(f"kind must be cartesian or radial, got {self.kind!r}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValidationError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.n_test < 1:
            raise ValidationError("n_test must be >= 1")
        if self.sens_source not in ("true", "estimated"):
            raise ValidationError("sens_source must be 'true' or 'estimated'")

    @property
    def pattern_labels(self) -> tuple[str, str]:
        return ("MaskC1", "MaskC2") if self.kind == "cartesian" else ("MaskR1", "MaskR2")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls(**json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# data


def split_seeds(cfg: ExperimentConfig) -> tuple[list[int], list[int]]:
    """Disjoint phantom seeds for training and testing."""
    rng = np.random.default_rng(cfg.split_seed)
    pool = rng.permutation(100_000)[: cfg.n_train + cfg.n_test]
    return [int(s) for s in pool[: cfg.n_train]], [int(s) for s in pool[cfg.n_train :]]


def make_slice(cfg: ExperimentConfig, seed: int, contrast_scale: float | None = None):
    """``(reference, sensitivities)`` for one phantom, per ``cfg.sens_source``."""
    spec = PhantomSpec(
        seed=seed, grid=cfg.grid, n_ellipses=cfg.n_ellipses, texture_amp=cfg.texture_amp,
        n_coils=cfg.n_coils, contrast_scale=contrast_scale or cfg.contrast_scale,
    )
    ref, coils, sens = generate_phantom(spec)
    if cfg.sens_source == "estimated":
        s = estimate_sensitivities(coils, cfg.sens_block)
        return np.sum(np.conj(s) * coils.data, axis=0), s
    return ref.data, sens.data


def build_library(cfg: ExperimentConfig) -> PatternLibrary:
    if cfg.kind == "cartesian":
        return make_cartesian_library(cfg.library_size, cfg.grid, cfg.R, cfg.center_frac, cfg.library_seed)
    spp = cfg.samples_per_spoke or 2 * cfg.grid
    return make_radial_library(cfg.library_size + cfg.spokes - 1, cfg.spokes, spp)


def eval_patterns(cfg: ExperimentConfig, lib: PatternLibrary) -> dict:
    """Seen pattern (library entry 0) and a held-out pattern absent from the library."""
    unseen = heldout_pattern(lib, cfg.heldout_seed)
    if lib.contains(unseen):
        raise ValidationError("held-out evaluation pattern is a member of the training library")
    seen_label, unseen_label = cfg.pattern_labels
    return {seen_label: lib[0], unseen_label: unseen}


def train_config(cfg: ExperimentConfig, method: str) -> TrainConfig:
    opts = dict(cfg.train)
    opts["mode"] = _TRAIN_MODE[method]
    return TrainConfig.from_dict(opts)


def get_model(cfg: ExperimentConfig, method: str, lib, train_data):
    """Load the method's checkpoint, or train it when allowed."""
    path = cfg.checkpoints.get(method)
    if path and (Path(path) / "manifest.json").exists():
        return load_checkpoint(path)
    if not cfg.train_if_missing:
        mode = _TRAIN_MODE[method]
        raise FileNotFoundError(
            f"no checkpoint for {method} at {path!r}; create one with "
            f"`santis train --mode {mode} --config <experiment.json> --out <dir>`"
        )
    if train_data is None:
        raise ValidationError(f"{method} needs training data")
    tcfg = train_config(cfg, method)
    log.info("training %s (%s mode, %d epochs)", method, tcfg.mode, tcfg.epochs)
    state = train(train_data, lib, tcfg)
    save_checkpoint(state, Path(cfg.out_dir) / "checkpoints" / method)
    return state


# --------------------------------------------------------------------------
# evaluation


@dataclass
class MetricReport:
    rows: list          # per-slice dicts keyed by SLICE_COLUMNS
    summary: list       # per (method, pattern) dicts with mean/std
    histories: dict     # CS objective histories and training losses


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def summarize(rows: list, methods, patterns) -> list:
    out = []
    for m in methods:
        for p in patterns:
            sel = [r for r in rows if r["method"] == m and r["pattern"] == p]
            if not sel:
                continue
            entry = {"method": m, "pattern": p, "n": len(sel)}
            for col in ("nRMSE(%)", "SSIM(%)", "Tenengrad(%)", "time(s)"):
                vals = [r[col] for r in sel if r[col] is not None]
                if vals:
                    entry[col] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
                else:
                    entry[col] = None
            out.append(entry)
    return out


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def run_experiment(cfg: ExperimentConfig) -> MetricReport:
    """Reconstruct the test set with every method on both patterns and write
    ``slices.csv``, ``summary.csv``, ``summary.json``, ``summary.md`` and images."""
    cfg.validate()
    out = ensure_dir(cfg.out_dir)
    train_seeds, test_seeds = split_seeds(cfg)
    lib = build_library(cfg)
    patterns = eval_patterns(cfg, lib)
    methods = [m for m in METHODS if m in cfg.methods]

    needs_training = any(m in _TRAIN_MODE and not cfg.checkpoints.get(m) for m in methods)
    train_data = [make_slice(cfg, s) for s in train_seeds] if needs_training else None
    models = {m: get_model(cfg, m, lib, train_data) for m in methods if m in _TRAIN_MODE}
    test_data = [make_slice(cfg, s, cfg.test_contrast_scale) for s in test_seeds]
    cs_cfg = CsConfig(**cfg.cs)
    noise_rng = np.random.default_rng([cfg.split_seed, 99])

    rows, cs_hist = [], []
    img_dir = ensure_dir(out / "images") if cfg.save_images else None
    for plabel, pattern in patterns.items():
        for i, (seed, (x, sens)) in enumerate(zip(test_seeds, test_data)):
            ctx = EncodingContext(sens, pattern)
            d = encode(ctx, x)
            if cfg.noise_sigma > 0:
                d = KspaceSamples(add_noise(d.values, cfg.noise_sigma, noise_rng), d.coords)
            for m in methods:
                if m == "ZF":
                    rec, dt = _timed(zero_fill, ctx, d)
                elif m == "CS-PI":
                    res, dt = _timed(cs_pi_reconstruct, ctx, d, cs_cfg)
                    rec = res.image
                    cs_hist += [(plabel, i, k, f) for k, f in enumerate(res.objective)]
                else:
                    t0 = time.perf_counter()
                    rec = infer(models[m], zero_fill(ctx, d))
                    dt = time.perf_counter() - t0
                rows.append({
                    "method": m, "pattern": plabel, "slice": i, "seed": seed,
                    "nRMSE(%)": 100 * nrmse(rec, x),
                    "SSIM(%)": 100 * ssim(rec, x),
                    "Tenengrad(%)": 100 * tenengrad_reduction(rec, x),
                    "time(s)": dt if cfg.record_time else None,
                })
                if img_dir is not None:
                    _save_slice_images(img_dir, m, plabel, i, rec, x)

    summary = summarize(rows, methods, list(patterns))
    histories = {"cs": cs_hist, "train": {m: s.history for m, s in models.items()}}
    write_outputs(out, cfg, rows, summary, histories)
    return MetricReport(rows, summary, histories)


def _save_slice_images(img_dir, method, plabel, i, rec, ref):
    from santis.plotting import save_slice_png

    stem = f"{method}_{plabel}_{i:03d}"
    save_tensor(rec.astype(np.complex64), img_dir / f"{stem}.tensor", tag=f"{method}/{plabel}/recon")
    save_slice_png(img_dir / f"{stem}.png", rec, ref, title=f"{method} {plabel} slice {i}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _mean_std(entry) -> str:
    return "" if entry is None else f"{entry['mean']:.4f}±{entry['std']:.4f}"


def write_outputs(out: Path, cfg, rows, summary, histories):
    slice_rows = [[r["method"], r["pattern"], r["slice"], r["seed"]] +
                  [_fmt(r[c]) for c in SLICE_COLUMNS[4:]] for r in rows]
    (out / "slices.csv").write_text(_csv_text(SLICE_COLUMNS, slice_rows), encoding="utf-8")
    sum_rows = [[s["method"], s["pattern"]] + [_mean_std(s[c]) for c in COLUMNS[2:]] for s in summary]
    (out / "summary.csv").write_text(_csv_text(COLUMNS, sum_rows), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps({"config": cfg.to_dict(), "summary": summary}, indent=2))

    lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    lines += ["| " + " | ".join(str(v) for v in r) + " |" for r in sum_rows]
    (out / "summary.md").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if histories["cs"]:
        cs_rows = [[p, i, k, repr(f)] for p, i, k, f in histories["cs"]]
        (out / "cs_history.csv").write_text(_csv_text(["pattern", "slice", "iteration", "objective"], cs_rows))
    for method, hist in histories["train"].items():
        if hist:
            keys = list(hist[0])
            (out / f"train_{method}.csv").write_text(
                _csv_text(keys, [[repr(h[k]) if isinstance(h[k], float) else h[k] for k in keys] for h in hist])
            )


def load_slices(path) -> list[dict]:
    """Read a per-slice CSV back into dicts with float metric columns."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            for c in SLICE_COLUMNS[4:]:
                r[c] = float(r[c]) if r[c] != "" else None
            r["slice"] = int(r["slice"])
            r["seed"] = int(r["seed"])
            rows.append(r)
    return rows


def _read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def build_report(results_dir, out_dir=None) -> dict:
    """Recompute the summary from ``slices.csv`` and render figures plus ``report.md``.

    Returns the summary rows as a list of ``COLUMNS`` lists and the figure paths.
    """
    from santis import plotting

    src = Path(results_dir)
    if not (src / "slices.csv").exists():
        raise FileNotFoundError(f"{src / 'slices.csv'} not found; run `santis eval` first")
    out = ensure_dir(out_dir or src)
    rows = load_slices(src / "slices.csv")
    methods = list(dict.fromkeys(r["method"] for r in rows))
    patterns = list(dict.fromkeys(r["pattern"] for r in rows))
    summary = summarize(rows, methods, patterns)
    table = [[s["method"], s["pattern"]] + [_mean_std(s[c]) for c in COLUMNS[2:]] for s in summary]

    figures = [plotting.metric_bars(summary, out / "metrics.png"),
               plotting.seen_unseen(summary, out / "seen_unseen.png")]
    train_hist = {}
    for f in sorted(src.glob("train_*.csv")):
        train_hist[f.stem[len("train_"):]] = [
            {"iteration": int(r["iteration"]), "loss1": float(r["loss1"]), "loss2": float(r["loss2"])}
            for r in _read_csv(f)
        ]
    if train_hist:
        figures.append(plotting.loss_curves(train_hist, out / "loss_curves.png"))
    if (src / "cs_history.csv").exists():
        curves = {}
        for r in _read_csv(src / "cs_history.csv"):
            curves.setdefault(f"{r['pattern']}/{r['slice']}", []).append(float(r["objective"]))
        figures.append(plotting.objective_history(curves, out / "cs_objective.png"))

    md = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    md += ["| " + " | ".join(map(str, r)) + " |" for r in table]
    md += [""] + [f"![{p.stem}]({p.name})" for p in figures]
    (out / "report.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    return {"summary": summary, "table": table, "figures": figures}
