from santis.neural.losses import Batch, Losses, compute_losses, undersample_batch
from santis.neural.networks import (
    DiscriminatorArch,
    DiscriminatorNet,
    GeneratorArch,
    GeneratorNet,
    init_weights,
    to_channels,
    to_complex,
)
from santis.neural.train import (
    TrainConfig,
    TrainState,
    infer,
    load_checkpoint,
    make_batch,
    new_state,
    save_checkpoint,
    train,
)

__all__ = [
    "Batch", "DiscriminatorArch", "DiscriminatorNet", "GeneratorArch", "GeneratorNet", "Losses",
    "TrainConfig", "TrainState", "compute_losses", "infer", "init_weights", "load_checkpoint",
    "make_batch", "new_state", "save_checkpoint", "to_channels", "to_complex", "train",
    "undersample_batch",
]
