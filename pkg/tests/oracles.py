"""Independent reference implementations used only by the tests.

Everything here is written from the textbook definitions with dense matrices
and explicit loops, sharing no code with the package.
"""

import numpy as np

# Daubechies 4-vanishing-moment decomposition low-pass, as tabulated in the
# wavelet literature (filter order x[n-k] convention, i.e. reversed w.r.t. ours).
DB4_TABLE = np.array([
    -0.010597401784997278, 0.032883011666982945, 0.030841381835986965, -0.18703481171888114,
    -0.02798376941698385, 0.6308807679295904, 0.7148465705525415, 0.23037781330885523,
])


def centered_dft_matrix(n):
    """Unitary DFT with both index ranges centred at n//2."""
    k = np.arange(n) - n // 2
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def slow_dft(x, coords):
    """Direct non-uniform DFT of an ``(h, w)`` image at ``(kx, ky)`` coordinates
    in cycles/pixel, with the same centring and unitary scale as the FFT."""
    h, w = x.shape
    r = np.arange(h) - h // 2
    c = np.arange(w) - w // 2
    out = np.empty(len(coords), dtype=complex)
    for m, (kx, ky) in enumerate(coords):
        ph = np.exp(-2j * np.pi * (ky * r[:, None] + kx * c[None, :]))
        out[m] = np.sum(x * ph)
    return out / np.sqrt(h * w)


def dense_cartesian_encoding(sens, lines):
    """Dense ``E`` for Cartesian line sampling: rows grouped per coil, then per
    sampled line, then per column; acts on the row-major flattened image."""
    nc, h, w = sens.shape
    f2 = np.kron(centered_dft_matrix(h), centered_dft_matrix(w))
    sel = np.zeros((len(lines) * w, h * w))
    for i, ln in enumerate(lines):
        for j in range(w):
            sel[i * w + j, ln * w + j] = 1.0
    blocks = [sel @ f2 @ np.diag(sens[c].ravel()) for c in range(nc)]
    return np.vstack(blocks)


def dense_radial_encoding(sens, coords):
    """Dense exact (non-uniform DFT) encoding for radial samples."""
    nc, h, w = sens.shape
    r = np.repeat(np.arange(h) - h // 2, w)
    c = np.tile(np.arange(w) - w // 2, h)
    f = np.exp(-2j * np.pi * (np.outer(coords[:, 1], r) + np.outer(coords[:, 0], c))) / np.sqrt(h * w)
    return np.vstack([f @ np.diag(sens[k].ravel()) for k in range(nc)])


def dwt_matrix_1d(n, h):
    """Periodized single-level analysis: low rows ``sum_t h[t] x[(2k+t) mod n]``,
    high rows with the quadrature mirror ``g[t] = (-1)^t h[L-1-t]``."""
    L = len(h)
    g = np.array([(-1) ** t * h[L - 1 - t] for t in range(L)])
    m = np.zeros((n, n))
    for k in range(n // 2):
        for t in range(L):
            m[k, (2 * k + t) % n] += h[t]
            m[n // 2 + k, (2 * k + t) % n] += g[t]
    return m


def dwt2_matrix(n, levels, h):
    """Dense multi-level 2D transform on row-major ``n x n`` images, pyramid layout."""
    total = np.eye(n * n)
    for lev in range(levels):
        s = n >> lev
        a = dwt_matrix_1d(s, h)
        step = np.eye(n * n)
        # act on the top-left s x s block only
        idx = np.array([r * n + c for r in range(s) for c in range(s)])
        step[np.ix_(idx, idx)] = np.kron(a, a)
        total = step @ total
    return total


def gaussian_ssim(x, y, sigma=2.0, L=None, truncate=3.0):
    """Mean SSIM over every window that lies fully inside the image, by explicit loops."""
    x = np.abs(x).astype(float)
    y = np.abs(y).astype(float)
    L = y.max() if L is None else L
    rad = int(truncate * sigma + 0.5)
    t = np.arange(-rad, rad + 1)
    g1 = np.exp(-0.5 * t**2 / sigma**2)
    g1 /= g1.sum()
    win = np.outer(g1, g1)
    c1, c2 = (0.01 * L) ** 2, (0.03 * L) ** 2
    vals = []
    for i in range(rad, x.shape[0] - rad):
        for j in range(rad, x.shape[1] - rad):
            px = x[i - rad : i + rad + 1, j - rad : j + rad + 1]
            py = y[i - rad : i + rad + 1, j - rad : j + rad + 1]
            mx, my = np.sum(win * px), np.sum(win * py)
            vx = np.sum(win * px * px) - mx * mx
            vy = np.sum(win * py * py) - my * my
            cxy = np.sum(win * px * py) - mx * my
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def dense_fista(A, d, Psi, lam, w=None, iters=200_000, tol=1e-16):
    """FISTA on ``0.5 ||W^(1/2)(A x - d)||^2 + lam ||Psi x||_1`` with dense matrices,
    orthonormal ``Psi``. Returns ``(x, objective)``."""
    w = np.ones(A.shape[0]) if w is None else w
    AhWA = A.conj().T @ (w[:, None] * A)
    AhWd = A.conj().T @ (w * d)
    step = 1.0 / np.linalg.eigvalsh(AhWA).max()

    def obj(x):
        r = A @ x - d
        return 0.5 * np.sum(w * np.abs(r) ** 2) + lam * np.sum(np.abs(Psi @ x))

    def prox(v):
        c = Psi @ v
        mag = np.abs(c)
        c = c * np.maximum(1 - step * lam / np.maximum(mag, 1e-300), 0)
        return Psi.conj().T @ c

    x = np.zeros(A.shape[1], dtype=complex)
    z, t, f = x.copy(), 1.0, obj(x)
    for _ in range(iters):
        xn = prox(z - step * (AhWA @ z - AhWd))
        tn = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = xn + (t - 1) / tn * (xn - x)
        fn = obj(xn)
        if fn > f:  # adaptive restart keeps the oracle monotone
            z, tn = xn.copy(), 1.0
        converged = abs(f - fn) <= tol * abs(f)
        x, t, f = xn, tn, min(f, fn)
        if converged:
            break
    return x, obj(x)
