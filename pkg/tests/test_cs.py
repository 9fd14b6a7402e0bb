import numpy as np
import pytest

from oracles import DB4_TABLE, dense_cartesian_encoding, dense_fista, dwt2_matrix
from santis.data import PhantomSpec, generate_phantom
from santis.encoding import EncodingContext, encode, zero_fill
from santis.errors import NumericalError, ValidationError
from santis.metrics import nrmse
from santis.recon import CsConfig, cs_pi_reconstruct, lipschitz, soft_threshold
from santis.sampling import make_cartesian_library


def test_soft_threshold_complex():
    c = np.array([3 + 4j, 0.1, -2.0, 0.0])
    out = soft_threshold(c, 1.0)
    assert np.allclose(out, [(3 + 4j) * 0.8, 0, -1.0, 0])


def tiny_problem():
    rng = np.random.default_rng(0)
    x = generate_phantom(PhantomSpec(seed=0, grid=8, n_ellipses=3, n_coils=1))[0].data
    mask = make_cartesian_library(1, 8, 2.0, 0.1, seed=0)[0]
    sens = np.ones((1, 8, 8), complex)
    ctx = EncodingContext(sens, mask)
    d = encode(ctx, x)
    d.values = d.values + 0.01 * (rng.standard_normal(d.values.shape) + 1j * rng.standard_normal(d.values.shape))
    return ctx, d


def test_fista_matches_dense_oracle():
    ctx, d = tiny_problem()
    lam = 0.02
    A = dense_cartesian_encoding(ctx.sens, ctx.pattern.sampled_lines)
    Psi = dwt2_matrix(8, 3, DB4_TABLE[::-1])
    _, f_star = dense_fista(A, d.values.ravel(), Psi, lam)
    res = cs_pi_reconstruct(ctx, d, CsConfig(lam=lam, max_iters=3000, tol=0.0, levels=6))
    assert abs(res.objective[-1] - f_star) <= 1e-6 * abs(f_star)
    assert min(res.objective) >= f_star * (1 - 1e-9)


def test_lipschitz_cartesian_normalized_sens():
    _, _, sens = generate_phantom(PhantomSpec(seed=0, grid=32))
    ctx = EncodingContext(sens.data, make_cartesian_library(1, 32, 2.0, 0.1)[0])
    # power iteration approaches the top eigenvalue from below
    L = lipschitz(ctx, n_iter=100)
    assert 0.99 < L <= 1.0 + 1e-12


def test_full_sampling_recovers_reference():
    ref, _, sens = generate_phantom(PhantomSpec(seed=1, grid=32))
    from santis.encoding import full_cartesian_mask

    ctx = EncodingContext(sens.data, full_cartesian_mask(32))
    res = cs_pi_reconstruct(ctx, encode(ctx, ref.data), CsConfig(lam=0.0, max_iters=5))
    assert np.abs(res.image - ref.data).max() < 1e-5


def test_cs_beats_zero_fill():
    ref, _, sens = generate_phantom(PhantomSpec(seed=11, grid=64))
    ctx = EncodingContext(sens.data, make_cartesian_library(1, 64, 3.0, 0.05)[0])
    d = encode(ctx, ref.data)
    res = cs_pi_reconstruct(ctx, d, CsConfig(lam=3e-4, max_iters=60))
    assert nrmse(res.image, ref.data) < 0.7 * nrmse(zero_fill(ctx, d), ref.data)
    assert res.objective[-1] < res.objective[0]


def test_divergent_step_raises_with_step_in_message():
    ctx, d = tiny_problem()
    with pytest.raises(NumericalError, match="step size") as ei:
        cs_pi_reconstruct(ctx, d, CsConfig(lam=0.01, step=1e200, max_iters=50))
    assert ei.value.iteration >= 1


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(max_iters=0), dict(step=-0.1)])
def test_config_validation(kw):
    ctx, d = tiny_problem()
    with pytest.raises(ValidationError):
        cs_pi_reconstruct(ctx, d, CsConfig(**kw))
