"""Pure numpy implementations of the compiled kernels (same signatures)."""
import numpy as np


def truncated_energy(f, h, inv2h, mask=None):
    g = np.maximum(f - h, 0.0)
    grad_sq = np.zeros_like(g)
    for ax in range(3):
        if f.shape[ax] == 1:
            continue
        dg = (np.roll(g, -1, axis=ax) - np.roll(g, 1, axis=ax)) * inv2h[ax]
        grad_sq += dg * dg
    if mask is not None:
        sel = mask.astype(bool)
        return float(np.sum(g[sel] ** 2)), float(np.sum(grad_sq[sel]))
    return float(np.sum(g * g)), float(np.sum(grad_sq))


def _aligned_boxes(f, sides):
    n0, n1, n2 = f.shape
    s0, s1, s2 = sides
    blocks = f.reshape(n0 // s0, s0, n1 // s1, s1, n2 // s2, s2)
    mean = blocks.mean(axis=(1, 3, 5), keepdims=True)
    return float(np.abs(blocks - mean).mean(axis=(1, 3, 5)).max())


def box_mean_oscillation(f, sides, strides):
    sides = tuple(int(s) for s in sides)
    strides = tuple(int(t) for t in strides)
    if all(n % s == 0 for n, s in zip(f.shape, sides)) and all(
        s % t == 0 for s, t in zip(sides, strides)
    ):
        # every stride-aligned box is an aligned block of some rolled copy
        best = 0.0
        for o0 in range(0, sides[0], strides[0]):
            for o1 in range(0, sides[1], strides[1]):
                for o2 in range(0, sides[2], strides[2]):
                    rolled = np.roll(f, (-o0, -o1, -o2), axis=(0, 1, 2))
                    best = max(best, _aligned_boxes(rolled, sides))
        return best
    best = 0.0
    idx = [np.arange(s) for s in sides]
    for o0 in range(0, f.shape[0], strides[0]):
        for o1 in range(0, f.shape[1], strides[1]):
            for o2 in range(0, f.shape[2], strides[2]):
                box = f[np.ix_((o0 + idx[0]) % f.shape[0],
                               (o1 + idx[1]) % f.shape[1],
                               (o2 + idx[2]) % f.shape[2])]
                best = max(best, float(np.abs(box - box.mean()).mean()))
    return best
