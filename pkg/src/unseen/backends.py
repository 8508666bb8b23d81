"""Three centroid-based deep-clustering objectives behind one interface.

dcn: hard assignments, squared distance to the assigned center,
     gradients reach the embeddings only; centers follow a running
     average updated batch by batch (the alternating scheme).
dec: Student-t soft assignments against a sharpened per-batch target,
     KL divergence; gradients reach embeddings and centers.
dkm: softmax-weighted squared distances with sharpness alpha;
     gradients reach embeddings and centers.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .kmeans import assign, kmeans_best, sqdist

KINDS = ("dcn", "dec", "dkm")

DKM_ALPHA = 1000.0
DKM_DIST_CAP = 1e12
DEC_NU = 1.0


@dataclass
class ClusterModel:
    centers: ad.Var            # (k_j, embed_dim); trainable for dec/dkm
    kind: str
    alpha: float = DKM_ALPHA
    nu: float = DEC_NU
    dcn_counts: Optional[np.ndarray] = None

    @property
    def k(self):
        return self.centers.value.shape[0]


@dataclass(frozen=True)
class Assignments:
    hard: np.ndarray
    soft: Optional[np.ndarray] = None


def init_model(kind, embedded, k_init, seed, alpha=DKM_ALPHA, nu=DEC_NU):
    """Centers from the best of 10 seeded k-means runs on the embedding."""
    if kind not in KINDS:
        raise ValueError(f"unknown backend kind {kind!r}")
    res = kmeans_best(embedded, k_init, seed=seed, restarts=10)
    centers = ad.Var(res.centers.copy(), requires_grad=(kind != "dcn"))
    counts = None
    if kind == "dcn":
        counts = np.bincount(res.labels, minlength=k_init).astype(np.int64)
    return ClusterModel(centers=centers, kind=kind, alpha=alpha, nu=nu, dcn_counts=counts)


def _student_t(d, nu):
    """Unnormalized Student-t kernel of squared distances (graph form)."""
    return ad.powc(ad.add_const(ad.scale(d, 1.0 / nu), 1.0), -(nu + 1.0) / 2.0)


def clustering_loss(model, embedded_batch, target=None):
    """Per-batch mean clustering loss as a graph scalar.

    embedded_batch is the graph node produced by the encoder, so
    backward() pushes gradients into the autoencoder (and, for the
    simultaneous kinds, into the centers). target optionally pins the
    dec sharpened distribution instead of recomputing it from the
    batch; it is a gradient-free constant either way.
    """
    z = embedded_batch
    b = z.value.shape[0]
    if b < 2:
        raise ValueError("clustering loss needs a batch of at least 2")
    if target is not None and model.kind != "dec":
        raise ValueError(f"target only applies to dec, got {model.kind!r}")
    if model.kind == "dcn":
        labels = assign(model.centers.value, z.value)
        mu = ad.gather_rows(ad.constant(model.centers.value), labels)
        loss = ad.scale(ad.sumall(ad.powc(ad.sub(z, mu), 2.0)), 1.0 / b)
    elif model.kind == "dec":
        d = ad.pairwise_sqdist(z, model.centers)
        q = ad.rownorm(_student_t(d, model.nu))
        if target is None:
            qv = q.value
            p = qv * qv / np.maximum(qv.sum(axis=0), 1e-12)
            p /= p.sum(axis=1, keepdims=True)
        else:
            p = np.asarray(target, dtype=np.float64)
            if p.shape != q.value.shape:
                raise ValueError(f"target shape {p.shape} != {q.value.shape}")
        plogp = float((p[p > 0] * np.log(p[p > 0])).sum())
        cross = ad.sumall(ad.mul(ad.constant(p), ad.log(q)))
        loss = ad.scale(ad.add_const(ad.scale(cross, -1.0), plogp), 1.0 / b)
    elif model.kind == "dkm":
        d = ad.clip_max(ad.pairwise_sqdist(z, model.centers), DKM_DIST_CAP)
        g = ad.softmax_rows(ad.scale(d, -model.alpha))
        loss = ad.scale(ad.sumall(ad.mul(g, d)), 1.0 / b)
    else:
        raise ValueError(f"unknown backend kind {model.kind!r}")
    if not np.isfinite(loss.value):
        raise FloatingPointError(f"{model.kind} clustering loss is not finite")
    return loss


def hard_assign(model, embedded):
    """Nearest-center labels plus the soft matrix for the soft kinds."""
    embedded = np.asarray(embedded, dtype=np.float64)
    if embedded.shape[1] != model.centers.value.shape[1]:
        raise ValueError(f"dim mismatch: embedded {embedded.shape[1]} vs centers {model.centers.value.shape[1]}")
    d = sqdist(embedded, model.centers.value)
    hard = d.argmin(axis=1)
    soft = None
    if model.kind == "dec":
        q = (1.0 + d / model.nu) ** (-(model.nu + 1.0) / 2.0)
        soft = q / q.sum(axis=1, keepdims=True)
    elif model.kind == "dkm":
        scores = -model.alpha * np.minimum(d, DKM_DIST_CAP)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        soft = e / e.sum(axis=1, keepdims=True)
    return Assignments(hard=hard, soft=soft)


def remove_clusters(model, dead_ids):
    """Drop the given center rows, preserving the order of survivors."""
    dead = sorted(set(int(i) for i in dead_ids))
    if not dead:
        return model
    k = model.k
    if any(i < 0 or i >= k for i in dead):
        raise ValueError(f"dead ids {dead} out of range for k={k}")
    if len(dead) >= k:
        raise ValueError("cannot remove every cluster")
    keep = np.setdiff1d(np.arange(k), dead)
    centers = ad.Var(model.centers.value[keep].copy(), requires_grad=model.centers.requires_grad)
    counts = model.dcn_counts[keep].copy() if model.dcn_counts is not None else None
    return ClusterModel(centers=centers, kind=model.kind, alpha=model.alpha,
                        nu=model.nu, dcn_counts=counts)


def epoch_update(model, embedded_batch, assignments):
    """Alternating-scheme center update: one running-average step per sample.

    Samples are folded in batch order; count_i grows by one per received
    sample and the center moves 1/count_i of the way to the embedding.
    """
    if model.kind != "dcn":
        raise ValueError(f"epoch_update is for dcn models, got {model.kind!r}")
    centers = model.centers.value
    counts = model.dcn_counts
    z = np.asarray(embedded_batch, dtype=np.float64)
    for row, lab in zip(z, assignments.hard):
        counts[lab] += 1
        centers[lab] -= (centers[lab] - row) / counts[lab]
