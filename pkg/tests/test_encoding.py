import numpy as np
import pytest

from conftest import crandn
from oracles import centered_dft_matrix, dense_cartesian_encoding, dense_radial_encoding, slow_dft
from santis.data import PhantomSpec, generate_phantom
from santis.encoding import (
    EncodingContext, KspaceSamples, NufftPlan, adjoint_encode, encode, fft2c, full_cartesian_mask, ifft2c,
    nufft_adjoint, nufft_forward, ramp_weights, undersample_image, zero_fill,
)
from santis.encoding.nufft import kb_beta, kb_kernel, kb_transform
from santis.errors import ValidationError
from santis.metrics import nrmse
from santis.sampling import golden_angle_window, make_cartesian_library


def vdot(a, b):
    return np.vdot(a.ravel(), b.ravel())


def cart_ctx(rng, n=8, nc=2, R=2.0):
    sens = crandn(rng, nc, n, n)
    mask = make_cartesian_library(1, n, R, 0.1, seed=int(rng.integers(1000)))[0]
    return EncodingContext(sens, mask)


def radial_ctx(rng, n=8, nc=2, spokes=5, spp=None):
    sens = crandn(rng, nc, n, n)
    return EncodingContext(sens, golden_angle_window(int(rng.integers(100)), spokes, spp or 2 * n))


def test_fft_matches_dense_dft(rng):
    x = crandn(rng, 8, 6)
    dense = centered_dft_matrix(8) @ x @ centered_dft_matrix(6).T
    assert np.allclose(fft2c(x), dense, atol=1e-13)
    assert np.allclose(ifft2c(fft2c(x)), x, atol=1e-13)
    assert np.linalg.norm(fft2c(x)) == pytest.approx(np.linalg.norm(x))


def test_cartesian_encode_matches_dense_oracle(rng):
    ctx = cart_ctx(rng)
    E = dense_cartesian_encoding(ctx.sens, ctx.pattern.sampled_lines)
    x = crandn(rng, 8, 8)
    d = crandn(rng, E.shape[0])
    assert np.allclose(encode(ctx, x).values.ravel(), E @ x.ravel(), atol=1e-12)
    got = adjoint_encode(ctx, d.reshape(2, -1))
    assert np.allclose(got.ravel(), E.conj().T @ d, atol=1e-12)


@pytest.mark.parametrize("kind", ["cartesian", "radial"])
def test_encode_adjoint_dot(rng, kind):
    for _ in range(10):
        ctx = cart_ctx(rng, 16, 3) if kind == "cartesian" else radial_ctx(rng, 16, 3)
        x = crandn(rng, 16, 16)
        y = crandn(rng, *encode(ctx, x).values.shape)
        lhs = vdot(encode(ctx, x).values, y)
        rhs = vdot(x, adjoint_encode(ctx, y))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_nufft_matches_slow_dft(rng):
    """Width-4 / 1.5x Kaiser-Bessel accuracy on a random image (regression pin)."""
    x = crandn(rng, 32, 32)
    p = golden_angle_window(0, 21, 64)
    ref = slow_dft(x, p.coords())
    err = np.abs(nufft_forward(x, p) - ref).max() / np.abs(ref).max()
    assert err < 2.5e-3


def test_nufft_on_cartesian_coordinates_matches_fft():
    ref = generate_phantom(PhantomSpec(grid=32, n_coils=1))[0].data
    k = (np.arange(32) - 16) / 32
    ky, kx = np.meshgrid(k, k, indexing="ij")
    plan = NufftPlan((32, 32), np.stack([kx.ravel(), ky.ravel()], 1))
    f = fft2c(ref).ravel()
    assert np.abs(plan.forward(ref) - f).max() / np.abs(f).max() < 1e-3


def test_nufft_adjoint_dot(rng):
    p = golden_angle_window(7, 13, 40)
    x = crandn(rng, 20, 20)
    y = crandn(rng, 13 * 40)
    lhs = vdot(nufft_forward(x, p), y)
    rhs = vdot(x, nufft_adjoint(y, p, (20, 20)))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_nufft_radial_dense_agreement(rng):
    ctx = radial_ctx(rng, 8, 2, spokes=7)
    E = dense_radial_encoding(ctx.sens, ctx.coords())
    x = crandn(rng, 8, 8)
    ref = E @ x.ravel()
    err = np.abs(encode(ctx, x).values.ravel() - ref).max() / np.abs(ref).max()
    assert err < 5e-3


def test_kb_pieces():
    beta = kb_beta()
    assert beta == pytest.approx(np.pi * np.sqrt((4 / 1.5) ** 2 * 1.0**2 - 0.8))
    assert kb_kernel(np.array([0.0]))[0] == 1.0
    assert kb_kernel(np.array([2.0001]))[0] == 0.0
    # analytic transform vs numerical quadrature of the kernel
    t = np.linspace(-2, 2, 20001)
    for nu in (0.0, 0.1, 0.3):
        num = np.trapezoid(kb_kernel(t) * np.cos(2 * np.pi * nu * t), t)
        assert kb_transform(nu) == pytest.approx(num, rel=1e-6)


def test_nufft_rejects_out_of_range():
    with pytest.raises(ValidationError):
        NufftPlan((8, 8), np.array([[0.6, 0.0]]))
    with pytest.raises(ValidationError):
        nufft_adjoint(np.zeros(8), golden_angle_window(0, 1, 8), (8, 8), dcomp="voronoi")


def test_ramp_weights():
    p = golden_angle_window(0, 10, 32)
    w = ramp_weights(p, (16, 16)).reshape(10, 32)
    scale = 16 * 16 * np.pi / (10 * 32)
    assert np.allclose(w[:, 16], 0.25 / 32 * scale)
    assert np.allclose(w[:, 0], 0.5 * scale)
    assert np.all(w > 0)


def test_gridding_fully_sampled():
    """402 spokes x 256 samples on 128x128 with ramp weighting stays below 3% nRMSE."""
    ref, _, sens = generate_phantom(PhantomSpec(seed=2, grid=128))
    ctx = EncodingContext(sens.data, golden_angle_window(0, 402, 256))
    assert nrmse(zero_fill(ctx, encode(ctx, ref.data)), ref.data) < 0.03


def test_full_cartesian_identity(rng):
    ref, _, sens = generate_phantom(PhantomSpec(seed=0, grid=32))
    ctx = EncodingContext(sens.data, full_cartesian_mask(32))
    assert np.allclose(undersample_image(ctx, ref.data), ref.data, atol=1e-12)
    assert np.allclose(zero_fill(ctx, encode(ctx, ref.data)), ref.data, atol=1e-12)


@pytest.mark.parametrize("kind", ["cartesian", "radial"])
def test_undersample_hermitian_psd(rng, kind):
    ctx = cart_ctx(rng, 16, 3) if kind == "cartesian" else radial_ctx(rng, 16, 3)
    x, y = crandn(rng, 16, 16), crandn(rng, 16, 16)
    a = vdot(undersample_image(ctx, x), y)
    b = vdot(x, undersample_image(ctx, y))
    assert abs(a - b) <= 1e-12 * abs(a)
    assert vdot(x, undersample_image(ctx, x)).real >= 0


def test_undersample_idempotent_single_coil(rng):
    ref = generate_phantom(PhantomSpec(seed=4, grid=64, n_coils=1))[0].data
    mask = make_cartesian_library(1, 64, 3.0, 0.05)[0]
    ctx = EncodingContext(np.ones((1, 64, 64)), mask)
    once = undersample_image(ctx, ref)
    assert np.abs(undersample_image(ctx, once) - once).max() < 1e-12


def test_undersample_not_idempotent_with_real_coils():
    """With several coils C C^H is not the identity, so the projection property is lost."""
    ref, _, sens = generate_phantom(PhantomSpec(seed=4, grid=64, n_coils=4))
    ctx = EncodingContext(sens.data, make_cartesian_library(1, 64, 3.0, 0.05)[0])
    once = undersample_image(ctx, ref.data)
    assert np.linalg.norm(undersample_image(ctx, once) - once) > 1e-3 * np.linalg.norm(once)


def test_undersample_matches_encode_adjoint(rng):
    ctx = cart_ctx(rng, 16, 2)
    x = crandn(rng, 16, 16)
    assert np.allclose(undersample_image(ctx, x), adjoint_encode(ctx, encode(ctx, x)), atol=1e-12)
    rctx = radial_ctx(rng, 16, 2)
    assert np.allclose(undersample_image(rctx, x), zero_fill(rctx, encode(rctx, x)), atol=1e-12)


def test_validation_errors(rng):
    ctx = cart_ctx(rng, 8, 2)
    with pytest.raises(ValidationError):
        encode(ctx, np.zeros((4, 4)))
    with pytest.raises(ValidationError):
        adjoint_encode(ctx, np.zeros((3, 10)))
    with pytest.raises(ValidationError):
        adjoint_encode(ctx, np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        EncodingContext(np.ones((2, 16, 16)), ctx.pattern)
    with pytest.raises(ValidationError):
        KspaceSamples(np.zeros((2, 0)), None)
    with pytest.raises(ValidationError):
        KspaceSamples(np.full((1, 2), np.nan), None)
    with pytest.raises(ValidationError):
        EncodingContext(np.ones((1, 8, 8)), "not a pattern")
