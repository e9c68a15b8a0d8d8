import numpy as np


def brute_sectional(H, c, u, v):
    """Gauss equation evaluated with explicit loops over all indices."""
    n = len(u)
    total = 0.0
    for r in range(n):
        huu = hvv = huv = 0.0
        for i in range(n):
            for j in range(n):
                huu += H[r, i, j] * u[i] * u[j]
                hvv += H[r, i, j] * v[i] * v[j]
                huv += H[r, i, j] * u[i] * v[j]
        total += huu * hvv - huv**2
    return c / 4 + total


def random_plane(n, rng):
    u, v = rng.standard_normal((2, n))
    u /= np.linalg.norm(u)
    v -= (u @ v) * u
    v /= np.linalg.norm(v)
    return u, v
