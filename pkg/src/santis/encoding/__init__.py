from santis.encoding.coils import apply_compression, coil_compress, compression_matrix, estimate_sensitivities
from santis.encoding.fft import fft2c, ifft2c
from santis.encoding.nufft import NufftPlan, nufft_adjoint, nufft_forward, ramp_weights
from santis.encoding.operators import (
    EncodingContext,
    KspaceSamples,
    adjoint_encode,
    encode,
    full_cartesian_mask,
    undersample_image,
    zero_fill,
)

__all__ = [
    "EncodingContext", "KspaceSamples", "NufftPlan", "adjoint_encode", "apply_compression",
    "coil_compress", "compression_matrix", "encode", "estimate_sensitivities", "fft2c",
    "full_cartesian_mask", "ifft2c", "nufft_adjoint", "nufft_forward", "ramp_weights",
    "undersample_image", "zero_fill",
]
