"""Lloyd k-means with k-means++ seeding and farthest-point repair.

Used to place the initial centroids on the pretrained embedding and as
the embedding + k-means baseline. Plain numpy, deterministic per seed.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    iterations: int


def sqdist(a, b):
    """All-pairs squared Euclidean distances, floored at zero."""
    d = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d


def assign(centers, points):
    """Nearest-center labels; ties go to the lowest center index."""
    if centers.shape[1] != points.shape[1]:
        raise ValueError(f"dim mismatch: centers {centers.shape[1]} vs points {points.shape[1]}")
    return sqdist(points, centers).argmin(axis=1)


def _plus_plus(points, k, rng):
    """Greedy k-means++: candidates drawn with probability ~ d^2, the one
    that most reduces the total potential is kept."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = sqdist(points, points[chosen[-1:]])[:, 0]
    trials = 2 + int(np.log(k))
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            cands = rng.integers(n, size=trials)   # leftovers coincide with centers
        else:
            cands = rng.choice(n, size=trials, p=d2 / total)
        best = None
        for c in cands:
            nd2 = np.minimum(d2, sqdist(points, points[[int(c)]])[:, 0])
            pot = nd2.sum()
            if best is None or pot < best[0]:
                best = (pot, int(c), nd2)
        chosen.append(best[1])
        d2 = best[2]
    return points[chosen].copy()


def kmeans_fit(points, k, seed, max_iter=300, tol=1e-6):
    """Lloyd iterations until the Frobenius center shift drops below tol.

    Clusters that empty out are re-seeded to the point currently
    farthest from its own center, one point per empty cluster.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = _plus_plus(points, k, rng)
    labels = assign(centers, points)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d = sqdist(points, centers)
        labels = d.argmin(axis=1)
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for i in range(k):
            if counts[i] > 0:
                new_centers[i] = points[labels == i].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            own = d[np.arange(n), labels].copy()
            for i in empties:
                far = int(own.argmax())
                new_centers[i] = points[far]
                own[far] = -1.0   # claimed, next empty cluster picks elsewhere
        shift = np.sqrt(((new_centers - centers) ** 2).sum())
        centers = new_centers
        if shift < tol:
            break
    labels = assign(centers, points)
    inertia = float(sqdist(points, centers)[np.arange(n), labels].sum())
    return KMeansResult(centers=centers, labels=labels, inertia=inertia, iterations=iterations)


def kmeans_best(points, k, seed, restarts=10, max_iter=300, tol=1e-6):
    """Best of several seeded runs by inertia; earliest seed wins ties."""
    best = None
    for s in range(seed, seed + restarts):
        res = kmeans_fit(points, k, seed=s, max_iter=max_iter, tol=tol)
        if best is None or res.inertia < best.inertia:
            best = res
    return best
