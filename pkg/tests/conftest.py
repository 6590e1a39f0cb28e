import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def random_hexagon(rng, center_scale=1.0, radius=1.0):
    """H-representation of a bounded random hexagon around a random center."""
    center = rng.uniform(-center_scale, center_scale, size=2)
    # normals spread evenly with jitter so the intersection stays bounded
    base = np.linspace(0, 2 * np.pi, 7)[:-1]
    angles = base + rng.uniform(-0.3, 0.3, size=6)
    A = np.column_stack([np.cos(angles), np.sin(angles)])
    b = A @ center + rng.uniform(0.3, radius, size=6)
    return A, b


def projection_oracle(point, A, b, tol=1e-9):
    """Projection by exhaustive active-set enumeration.

    Tries every constraint subset of size <= d, solves the equality-constrained
    least-squares step through its KKT system, and keeps the feasible candidate
    closest to ``point``.  Independent of the production projection path.
    """
    from itertools import combinations

    point = np.asarray(point, dtype=float)
    d = point.shape[0]
    m = A.shape[0]
    best = None
    best_dist = np.inf
    for k in range(0, d + 1):
        for subset in combinations(range(m), k):
            S = A[list(subset)]
            kkt = np.zeros((d + k, d + k))
            kkt[:d, :d] = np.eye(d)
            kkt[:d, d:] = S.T
            kkt[d:, :d] = S
            rhs = np.concatenate([point, b[list(subset)]])
            try:
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            except np.linalg.LinAlgError:
                continue
            x = sol[:d]
            if np.max(A @ x - b, initial=0.0) <= tol:
                dist = np.linalg.norm(x - point)
                if dist < best_dist - 1e-15:
                    best_dist = dist
                    best = x
    return best


def vertex_oracle_2d(A, b, tol=1e-9):
    """Vertices of a 2-d polytope by pairwise line intersection (test oracle)."""
    from itertools import combinations

    pts = []
    for i, j in combinations(range(A.shape[0]), 2):
        M = A[[i, j]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[[i, j]])
        if np.max(A @ x - b) <= tol:
            pts.append(x)
    out = []
    for p in sorted(pts, key=lambda q: (q[0], q[1])):
        if not any(np.linalg.norm(p - q) <= 1e-8 for q in out):
            out.append(p)
    return np.array(out)
