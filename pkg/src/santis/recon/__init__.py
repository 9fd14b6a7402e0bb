from santis.encoding.operators import zero_fill
from santis.recon.cs import CsConfig, CsResult, cs_pi_reconstruct, lipschitz, soft_threshold
from santis.recon.wavelet import WaveletCoeffs, wavelet_forward, wavelet_inverse

__all__ = [
    "CsConfig", "CsResult", "WaveletCoeffs", "cs_pi_reconstruct", "lipschitz", "soft_threshold",
    "wavelet_forward", "wavelet_inverse", "zero_fill",
]
