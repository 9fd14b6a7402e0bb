"""Alternating adversarial training with fixed or sampling-augmented patterns,
inference, and checkpoint bundles."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from santis.data import ensure_dir, load_tensor, save_tensor
from santis.encoding.operators import EncodingContext, undersample_image
from santis.errors import NumericalError, ValidationError
from santis.neural.losses import Batch, discriminator_loss, generator_losses
from santis.neural.networks import (
    DiscriminatorArch,
    DiscriminatorNet,
    GeneratorArch,
    GeneratorNet,
    init_weights,
    to_channels,
    to_complex,
)
from santis.sampling import PatternLibrary, select_pattern

log = logging.getLogger(__name__)

_TORCH_DTYPES = {"f32": torch.float32, "f64": torch.float64}


@dataclass
class TrainConfig:
    mode: str = "augmented"
    lambda_loss1: float = 10.0
    lambda_loss2: float = 10.0
    lambda_gan: float = 0.1
    lr: float = 2e-4
    batch: int = 3
    epochs: int = 30
    adam_betas: tuple[float, float] = (0.5, 0.999)
    seed: int = 0
    loss_norm: str = "L1"
    precision: str = "f32"
    dcomp: str = "ramp"
    library_ref: str | None = None
    generator: GeneratorArch = field(default_factory=GeneratorArch)
    discriminator: DiscriminatorArch = field(default_factory=DiscriminatorArch)

    def validate(self):
        if self.mode not in ("fixed", "augmented"):
            raise ValidationError(f"mode must be 'fixed' or 'augmented', got {self.mode!r}")
        for name in ("lambda_loss1", "lambda_loss2", "lambda_gan"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.batch < 1 or self.epochs < 0:
            raise ValidationError("batch must be >= 1 and epochs >= 0")
        if self.loss_norm != "L1":
            raise ValidationError("only the L1 pixel loss is supported")
        if self.precision not in _TORCH_DTYPES:
            raise ValidationError(f"precision must be f32 or f64, got {self.precision!r}")

    @property
    def dtype(self):
        return _TORCH_DTYPES[self.precision]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adam_betas"] = list(self.adam_betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "generator" in d:
            d["generator"] = GeneratorArch(**d["generator"])
        if "discriminator" in d:
            d["discriminator"] = DiscriminatorArch(**d["discriminator"])
        if "adam_betas" in d:
            d["adam_betas"] = tuple(d["adam_betas"])
        return cls(**d)


@dataclass
class TrainState:
    cfg: TrainConfig
    generator: GeneratorNet
    discriminator: DiscriminatorNet
    opt_g: torch.optim.Adam
    opt_d: torch.optim.Adam
    mask_rng: np.random.Generator
    order_rng: np.random.Generator
    iteration: int = 0
    epoch: int = 0
    history: list = field(default_factory=list)
    pattern_log: list = field(default_factory=list)


def new_state(cfg: TrainConfig) -> TrainState:
    cfg.validate()
    gen_init = torch.Generator().manual_seed(cfg.seed)
    g = GeneratorNet(cfg.generator).to(cfg.dtype)
    d = DiscriminatorNet(cfg.discriminator).to(cfg.dtype)
    init_weights(g, gen_init)
    init_weights(d, gen_init)
    return TrainState(
        cfg=cfg,
        generator=g,
        discriminator=d,
        opt_g=torch.optim.Adam(g.parameters(), lr=cfg.lr, betas=cfg.adam_betas),
        opt_d=torch.optim.Adam(d.parameters(), lr=cfg.lr, betas=cfg.adam_betas),
        mask_rng=np.random.default_rng([cfg.seed, 1]),
        order_rng=np.random.default_rng([cfg.seed, 2]),
    )


def make_batch(data, indices, lib: PatternLibrary, mode: str, rng, dtype=torch.float32, dcomp="ramp") -> Batch:
    """Draw one pattern per image and synthesize its aliased input on the fly."""
    xs, xus, ctxs, pids = [], [], [], []
    for i in indices:
        x, sens = data[i]
        pattern, pid = select_pattern(lib, mode, rng)
        ctx = EncodingContext(sens, pattern, dcomp=dcomp)
        xs.append(x)
        xus.append(undersample_image(ctx, x))
        ctxs.append(ctx)
        pids.append(pid)
    return Batch(to_channels(np.stack(xs), dtype), to_channels(np.stack(xus), dtype), ctxs, pids)


def train_step(state: TrainState, batch: Batch) -> dict:
    """One discriminator update followed by one generator update."""
    cfg = state.cfg
    g, d = state.generator, state.discriminator
    g.train()
    d.train()
    recon = g(batch.x_u)

    gan_d = 0.0
    use_gan = cfg.lambda_gan > 0
    if use_gan:
        state.opt_d.zero_grad(set_to_none=True)
        loss_d = discriminator_loss(d, batch.x, recon)
        loss_d.backward()
        state.opt_d.step()
        gan_d = loss_d.item()

    state.opt_g.zero_grad(set_to_none=True)
    loss1, loss2, gan_g, total = generator_losses(
        d if use_gan else None, batch, recon, cfg.lambda_loss1, cfg.lambda_loss2, cfg.lambda_gan
    )
    total.backward()
    if use_gan:
        # the generator step must not leak into the discriminator's gradients
        d.zero_grad(set_to_none=True)
    state.opt_g.step()
    rec = {
        "iteration": state.iteration,
        "epoch": state.epoch,
        "loss1": loss1.item(),
        "loss2": loss2.item(),
        "gan_g": gan_g.item(),
        "gan_d": gan_d,
        "total": total.item(),
    }
    if not all(math.isfinite(v) for v in rec.values()):
        raise NumericalError(f"non-finite loss at iteration {state.iteration}: {rec}", state.iteration)
    return rec


def train(data, lib: PatternLibrary, cfg: TrainConfig, state: TrainState | None = None,
          checkpoint_dir=None, epochs: int | None = None) -> TrainState:
    """Train (or resume) for ``cfg.epochs`` epochs in total.

    ``data`` is a list of ``(reference, sensitivities)`` complex arrays. The
    mask stream, batch order and initialization each have their own seeded
    stream, so a run is reproducible from ``cfg.seed`` alone.
    """
    if not data:
        raise ValidationError("training data is empty")
    if len(lib) == 0:
        raise ValidationError("pattern library is empty")
    state = state or new_state(cfg)
    cfg = state.cfg
    target = cfg.epochs if epochs is None else state.epoch + epochs
    while state.epoch < target:
        order = state.order_rng.permutation(len(data))
        for start in range(0, len(order), cfg.batch):
            idx = order[start : start + cfg.batch]
            batch = make_batch(data, idx, lib, cfg.mode, state.mask_rng, cfg.dtype, cfg.dcomp)
            try:
                rec = train_step(state, batch)
            except NumericalError:
                if checkpoint_dir is not None:
                    save_checkpoint(state, Path(checkpoint_dir) / "failed")
                raise
            state.history.append(rec)
            state.pattern_log.append(list(batch.pattern_ids))
            state.iteration += 1
        state.epoch += 1
        last = state.history[-1]
        log.info("epoch %d  loss1 %.5f  loss2 %.5f  gan_d %.4f", state.epoch, last["loss1"], last["loss2"], last["gan_d"])
        if checkpoint_dir is not None:
            save_checkpoint(state, checkpoint_dir)
    return state


def infer(model, x_u) -> np.ndarray:
    """Generator output for complex input(s) ``(h, w)`` or ``(n, h, w)``.

    Batch-norm layers use their running statistics; no data-consistency step follows.
    """
    g = model.generator if isinstance(model, TrainState) else model
    x_u = np.asarray(x_u)
    single = x_u.ndim == 2
    dtype = next(g.parameters()).dtype
    was_training = g.training
    g.eval()
    try:
        with torch.no_grad():
            out = to_complex(g(to_channels(x_u, dtype)))
    finally:
        g.train(was_training)
    return out[0] if single else out


# --------------------------------------------------------------------------
# checkpoints


def _flat_state(state: TrainState) -> dict[str, torch.Tensor]:
    flat = {}
    for prefix, module in (("generator", state.generator), ("discriminator", state.discriminator)):
        for k, v in module.state_dict().items():
            flat[f"{prefix}.{k}"] = v
    for prefix, opt in (("opt_g", state.opt_g), ("opt_d", state.opt_d)):
        for pid, pstate in opt.state_dict()["state"].items():
            for k, v in pstate.items():
                flat[f"{prefix}.{pid}.{k}"] = torch.as_tensor(v)
    return flat


def save_checkpoint(state: TrainState, path) -> Path:
    """Write a bundle directory: one tensor file per array plus ``manifest.json``."""
    out = ensure_dir(path)
    flat = _flat_state(state)
    entries = {}
    for i, (name, t) in enumerate(flat.items()):
        arr = t.detach().cpu().numpy()
        torch_dtype = str(t.dtype).replace("torch.", "")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        fname = f"t{i:04d}.tensor"
        save_tensor(np.ascontiguousarray(arr), out / fname, tag=name)
        entries[name] = {"file": fname, "torch_dtype": torch_dtype}
    manifest = {
        "cfg": state.cfg.to_dict(),
        "iteration": state.iteration,
        "epoch": state.epoch,
        "rng": {"mask": state.mask_rng.bit_generator.state, "order": state.order_rng.bit_generator.state},
        "tensors": entries,
        "history": state.history,
        "pattern_log": state.pattern_log,
    }
    (out / "manifest.json").write_text(json.dumps(manifest))
    return out


def load_checkpoint(path) -> TrainState:
    path = Path(path)
    mf = path / "manifest.json"
    if not mf.exists():
        raise FileNotFoundError(f"no checkpoint manifest at {mf}")
    manifest = json.loads(mf.read_text())
    cfg = TrainConfig.from_dict(manifest["cfg"])
    state = new_state(cfg)
    tensors = {}
    for name, meta in manifest["tensors"].items():
        arr, _ = load_tensor(path / meta["file"])
        tensors[name] = torch.from_numpy(arr).to(getattr(torch, meta["torch_dtype"]))
    for prefix, module in (("generator", state.generator), ("discriminator", state.discriminator)):
        sd = {k[len(prefix) + 1 :]: v for k, v in tensors.items() if k.startswith(prefix + ".")}
        module.load_state_dict(sd)
    for prefix, opt in (("opt_g", state.opt_g), ("opt_d", state.opt_d)):
        sd = opt.state_dict()
        per = {}
        for k, v in tensors.items():
            if k.startswith(prefix + "."):
                _, pid, key = k.split(".", 2)
                per.setdefault(int(pid), {})[key] = v
        sd["state"] = per
        opt.load_state_dict(sd)
    state.mask_rng.bit_generator.state = manifest["rng"]["mask"]
    state.order_rng.bit_generator.state = manifest["rng"]["order"]
    state.iteration = manifest["iteration"]
    state.epoch = manifest["epoch"]
    state.history = manifest["history"]
    state.pattern_log = manifest["pattern_log"]
    return state
