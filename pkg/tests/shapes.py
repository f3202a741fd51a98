"""Test raster generators shared by the grow tests and the acceptance suite."""

import numpy as np


def ellipse_ring(n, m, center, semi, thick=2):
    rr, cc = np.ogrid[:n, :m]
    q_in = ((rr - center[0]) / semi[0]) ** 2 + ((cc - center[1]) / semi[1]) ** 2
    q_out = ((rr - center[0]) / (semi[0] + thick)) ** 2 + ((cc - center[1]) / (semi[1] + thick)) ** 2
    ring = (q_out < 1) & ~(q_in < 1)
    return np.where(ring, 255, 0).astype(np.uint8), q_in < 1


def kidney_ring(n, m, rng, thick=2):
    """Closed 255 ring around a concave (bitten ellipse) interior. Returns (binary, interior, seed)."""
    cy, cx = n / 2, m / 2
    a, b = rng.uniform(0.3, 0.42) * n, rng.uniform(0.3, 0.42) * m
    rr, cc = np.ogrid[:n, :m]
    shape = ((rr - cy) / a) ** 2 + ((cc - cx) / b) ** 2 < 1
    bite_c = (cy + rng.uniform(-0.2, 0.2) * a, cx + b * rng.uniform(0.55, 0.8))
    bite_r = rng.uniform(0.35, 0.6) * min(a, b)
    shape &= (rr - bite_c[0]) ** 2 + (cc - bite_c[1]) ** 2 > bite_r**2
    # ring: pixels within `thick` (chessboard) of the shape but outside it
    grown = shape.copy()
    for _ in range(thick):
        g = grown.copy()
        g[1:] |= grown[:-1]
        g[:-1] |= grown[1:]
        g[:, 1:] |= grown[:, :-1]
        g[:, :-1] |= grown[:, 1:]
        g[1:, 1:] |= grown[:-1, :-1]
        g[:-1, :-1] |= grown[1:, 1:]
        g[1:, :-1] |= grown[:-1, 1:]
        g[:-1, 1:] |= grown[1:, :-1]
        grown = g
    binary = np.where(grown & ~shape, 255, 0).astype(np.uint8)
    inside = np.argwhere(shape)
    seed = tuple(int(v) for v in inside[rng.integers(len(inside))])
    return binary, shape, seed


def noisy_binary(n, m, rng, density):
    b = np.where(rng.random((n, m)) < density, 255, 0).astype(np.uint8)
    zeros = np.argwhere(b == 0)
    if len(zeros) == 0:
        b[n // 2, m // 2] = 0
        zeros = np.array([[n // 2, m // 2]])
    seed = tuple(int(v) for v in zeros[rng.integers(len(zeros))])
    return b, seed
