import numpy as np

from guarreach.gvs import DynamicsSnapshot, geometry


def random_snapshot(rng, n=None, m=None, rank=None, invertible=False):
    """Random snapshot; f0 lies in Im(G(0)) as the problem structure requires."""
    if invertible:
        n = m = n or int(rng.integers(2, 4))
        rank = n
    n = n or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 4))
    rank = rank or int(rng.integers(1, min(n, m) + 1))
    while True:
        g0 = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, m)) * rng.uniform(0.5, 5.0)
        s = np.linalg.svd(g0, compute_uv=False)
        if s[rank - 1] > 1e-3 * s[0]:
            break
    f0 = g0 @ rng.standard_normal(m) * rng.uniform(0.0, 1.0)
    snap = DynamicsSnapshot(f0=f0, g0=g0, lf=rng.uniform(0.1, 3.0), lg=rng.uniform(0.1, 3.0))
    return snap, geometry(snap)


def random_image_direction(rng, geom):
    d = geom.u_r @ rng.standard_normal(geom.rank)
    return d / np.linalg.norm(d)
