"""Central finite-difference gradient checks along random directions (f64).

ReLU-type activations and L1 losses are only piecewise smooth. A difference
quotient whose segment crosses a kink measures a blend of two slopes, so
such directions are redrawn: the sign pattern of every activation input (and
of any extra residuals supplied) must agree at both ends of the segment.
"""

import torch
import torch.nn as nn

_KINKED = (nn.ReLU, nn.LeakyReLU)


class _SignRecorder:
    def __init__(self, modules):
        self.values = []
        self.handles = [
            m.register_forward_hook(lambda mod, inp, out: self.values.append(inp[0].detach().flatten()))
            for net in modules for m in net.modules() if isinstance(m, _KINKED)
        ]

    def run(self, fn, extra):
        self.values = []
        out = float(fn())
        parts = self.values + ([e.detach().flatten() for e in extra()] if extra else [])
        return out, torch.cat(parts).sign() if parts else torch.zeros(0)

    def close(self):
        for h in self.handles:
            h.remove()


def directional_errors(fn, tensors, h=1e-4, seed=0, modules=(), residuals=None, max_tries=50):
    """Relative error between autograd and ``(f(t+hv) - f(t-hv)) / 2h`` for each tensor.

    ``v`` is a unit-norm random direction, so every check steps a distance
    ``h`` in parameter space. ``modules`` are scanned for ReLU-type layers and
    ``residuals()`` may return tensors whose sign must not change (L1 terms).
    """
    gen = torch.Generator().manual_seed(seed)
    out = fn()
    grads = torch.autograd.grad(out, tensors, allow_unused=True)
    rec = _SignRecorder(modules)
    errors = []
    try:
        for t, g in zip(tensors, grads):
            for _ in range(max_tries):
                v = torch.randn(t.shape, generator=gen, dtype=t.dtype)
                v /= v.norm()
                with torch.no_grad():
                    t.add_(h * v)
                    fp, sp = rec.run(fn, residuals)
                    t.sub_(2 * h * v)
                    fm, sm = rec.run(fn, residuals)
                    t.add_(h * v)
                if torch.equal(sp, sm):
                    break
            analytic = 0.0 if g is None else float((g * v).sum())
            numeric = (fp - fm) / (2 * h)
            scale = max(abs(analytic), abs(numeric), 1e-12)
            errors.append(abs(analytic - numeric) / scale)
    finally:
        rec.close()
    return errors
