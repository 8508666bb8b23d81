"""Cluster-count estimation by dissolution, wrapped around a backend.

A cluster is created with a size (its member count at creation). When
its current member count falls strictly below a fraction t of that
creation size, the cluster is dead: its center is removed, its creation
members are reassigned to the nearest surviving center, and each
receiving cluster's creation size grows by the number of samples it
received. Creation membership is tracked per sample, which keeps the
sum of creation sizes equal to N exactly, at every epoch boundary.

The in-batch nearest-neighbor loss pulls each embedded sample toward
its l nearest batch mates, with l adapted to the number of currently
active clusters.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import autodiff as ad
from . import backends as be
from . import network
from .data import batches
from .kmeans import assign

COLLAPSE_EPS = 1e-12


@dataclass
class ClusterBookkeeping:
    """Sizes per active cluster plus the per-sample creation membership.

    cluster_ids are stable: they never shift when rows are removed, so
    traces can name exactly which clusters died. creation_labels holds
    the stable id of the cluster each sample belonged to when that
    cluster's creation size was last set.
    """

    cluster_ids: np.ndarray
    creation_size: np.ndarray
    current_size: np.ndarray
    creation_labels: np.ndarray

    @property
    def k(self):
        return len(self.cluster_ids)


@dataclass
class RunConfig:
    backend: str = "dkm"
    k_init: int = 35
    t: float = 0.5
    epochs: int = 150
    pretrain_epochs: int = 100
    batch_size: int = 256
    lr: float = 1e-4
    pretrain_lr: float = 1e-3
    lambda1: Optional[float] = None   # reconstruction weight
    lambda2: Optional[float] = None   # clustering + neighbor weight
    nn_loss_enabled: bool = True
    seed: int = 0
    hidden_dims: tuple = (500, 500, 2000)
    embed_dim: int = 10
    dcn_update: str = "batch"         # running-average cadence: batch or epoch

    def __post_init__(self):
        if self.backend not in be.KINDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if not 0.0 <= self.t < 1.0:
            raise ValueError(f"t must be in [0, 1), got {self.t}")
        if self.k_init < 1:
            raise ValueError("k_init must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.dcn_update not in ("batch", "epoch"):
            raise ValueError(f"dcn_update must be batch or epoch, got {self.dcn_update!r}")
        defaults = {"dcn": (1.0, 0.05), "dec": (0.0, 1.0), "dkm": (1.0, 1.0)}
        d1, d2 = defaults[self.backend]
        if self.lambda1 is None:
            self.lambda1 = d1
        if self.lambda2 is None:
            self.lambda2 = d2


@dataclass
class EpochTrace:
    epoch: int
    k: int
    rec_loss: float
    clust_loss: float
    nn_loss: float
    total_loss: float
    dissolved: list = field(default_factory=list)
    creation_sizes: list = field(default_factory=list)   # per active cluster, after dissolution


def compute_l(batch_size, k_j):
    """Neighbor count: batch size over active clusters, floored, clamped."""
    if k_j < 1:
        raise ValueError("k_j must be >= 1")
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    return int(np.clip(batch_size // k_j, 1, batch_size - 1))


def _neighbor_graph(embedded_batch, l):
    """Shared distance node plus the (row, col) index pairs of the l
    nearest other batch members per sample, ties to the lower index."""
    b = embedded_batch.value.shape[0]
    if not 1 <= l <= b - 1:
        raise ValueError(f"l={l} outside [1, {b - 1}] for batch of {b}")
    d = ad.pairwise_sqdist(embedded_batch, embedded_batch)
    masked = d.value.copy()
    np.fill_diagonal(masked, np.inf)
    cols = np.argsort(masked, axis=1, kind="stable")[:, :l]
    rows = np.repeat(np.arange(b), l)
    return d, rows, cols.ravel()


def nn_loss(embedded_batch, l):
    """Mean squared distance from each sample to its l nearest batch mates."""
    b = embedded_batch.value.shape[0]
    d, rows, cols = _neighbor_graph(embedded_batch, l)
    return ad.scale(ad.sumall(ad.gather_pairs(d, rows, cols)), 1.0 / (l * b))


def nn_loss_simul(embedded_batch, l):
    """Neighbor loss over the mean of all pairwise distances in the batch.

    The ratio is scale-free, which keeps the term commensurate with
    soft-assignment losses. A collapsed batch (mean pairwise distance
    below 1e-12) yields exactly 0 with zero gradient.
    """
    b = embedded_batch.value.shape[0]
    d, rows, cols = _neighbor_graph(embedded_batch, l)
    denom_val = d.value.sum() / (b * (b - 1))
    if denom_val < COLLAPSE_EPS:
        return ad.constant(0.0)
    numer = ad.scale(ad.sumall(ad.gather_pairs(d, rows, cols)), 1.0 / (l * b))
    denom = ad.scale(ad.sumall(d), 1.0 / (b * (b - 1)))
    return ad.divide(numer, denom)


def total_loss(ae, batch_x, model, config, l):
    """Weighted sum of reconstruction, clustering and neighbor terms.

    Returns the graph scalar plus the unweighted component values.
    """
    z = ae.encode(batch_x)
    parts = {"rec": 0.0, "clust": 0.0, "nn": 0.0}
    clust = be.clustering_loss(model, z)
    parts["clust"] = float(clust.value)
    inner = clust
    if config.nn_loss_enabled:
        nn = nn_loss(z, l) if model.kind == "dcn" else nn_loss_simul(z, l)
        parts["nn"] = float(nn.value)
        inner = ad.add(inner, nn)
    total = ad.scale(inner, config.lambda2)
    if config.lambda1 != 0.0:
        rec = network.mse(ae.decode(z), batch_x)
        parts["rec"] = float(rec.value)
        total = ad.add(ad.scale(rec, config.lambda1), total)
    parts["total"] = float(total.value)
    return total, parts


def detect_dead(bookkeeping, t):
    """Stable ids of clusters strictly below t of their creation size.

    If every active cluster qualifies, the largest one (by current
    size, ties to the lowest id) is exempted so one cluster survives.
    """
    creation = np.maximum(bookkeeping.creation_size, 1)
    ratio = bookkeeping.current_size / creation
    dead = ratio < t
    if dead.all() and dead.size:
        dead[int(bookkeeping.current_size.argmax())] = False
    return [int(i) for i in bookkeeping.cluster_ids[dead]]


def dissolve(model, bookkeeping, dead_ids, full_embedded):
    """Remove dead clusters in one step and rebalance the bookkeeping.

    Every sample whose creation cluster died is handed to its nearest
    surviving center; each survivor's creation size grows by what it
    received. Returns the reduced model, fresh bookkeeping, and the
    full-dataset hard labels (positions into the surviving centers).
    """
    dead_ids = [int(i) for i in dead_ids]
    if not dead_ids:
        labels = be.hard_assign(model, full_embedded).hard
        return model, bookkeeping, labels
    id_list = bookkeeping.cluster_ids.tolist()
    positions = [id_list.index(i) for i in dead_ids]
    new_model = be.remove_clusters(model, positions)
    keep = np.setdiff1d(np.arange(bookkeeping.k), positions)
    survivor_ids = bookkeeping.cluster_ids[keep]
    labels = be.hard_assign(new_model, full_embedded).hard
    creation_labels = bookkeeping.creation_labels.copy()
    moved = np.isin(creation_labels, dead_ids)
    creation_labels[moved] = survivor_ids[labels[moved]]
    creation_size = bookkeeping.creation_size[keep].copy()
    if moved.any():
        received = np.bincount(labels[moved], minlength=len(keep))
        creation_size += received
    current_size = np.bincount(labels, minlength=len(keep))
    book = ClusterBookkeeping(cluster_ids=survivor_ids.copy(),
                              creation_size=creation_size,
                              current_size=current_size,
                              creation_labels=creation_labels)
    return new_model, book, labels


def _init_bookkeeping(model, full_embedded):
    labels = be.hard_assign(model, full_embedded).hard
    k = model.k
    sizes = np.bincount(labels, minlength=k)
    ids = np.arange(k)
    return ClusterBookkeeping(cluster_ids=ids,
                              creation_size=sizes.copy(),
                              current_size=sizes.copy(),
                              creation_labels=ids[labels]), labels


def run_unseen(dataset, config, ae=None):
    """Full training process; returns (model, final labels, epoch traces).

    Pretrains the autoencoder (unless one is passed in), places k_init
    centers by k-means on the embedding, then per epoch: one adaptive
    neighbor count, per-batch optimization of the combined loss (the
    alternating backend also refreshes its running-average centers per
    batch), a full-dataset assignment pass, and dissolution of any
    cluster that shrank below t of its creation size.
    """
    x = np.asarray(dataset.features, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("dataset needs at least 2 samples")
    if ae is None:
        ae = network.AutoEncoder(x.shape[1], hidden_dims=config.hidden_dims,
                                 embed_dim=config.embed_dim, seed=config.seed)
        if config.pretrain_epochs > 0:
            network.pretrain(ae, x, config.pretrain_epochs, config.pretrain_lr,
                             config.batch_size, config.seed)
    z_full = ae.encode_np(x)
    model = be.init_model(config.backend, z_full, config.k_init, config.seed)
    book, labels = _init_bookkeeping(model, z_full)
    params = ae.params + ([model.centers] if config.backend != "dcn" else [])
    opt = network.Adam(params, lr=config.lr)
    traces = []
    for epoch in range(config.epochs):
        l = compute_l(config.batch_size, model.k)
        sums = {"rec": 0.0, "clust": 0.0, "nn": 0.0, "total": 0.0}
        seen = 0
        for batch in batches(x.shape[0], config.batch_size, config.seed, epoch):
            xb = x[batch]
            network.zero_grad(opt.params)
            loss, parts = total_loss(ae, xb, model, config, min(l, len(batch) - 1))
            ad.backward(loss)
            opt.step()
            if model.kind == "dcn" and config.dcn_update == "batch":
                zb = ae.encode_np(xb)
                be.epoch_update(model, zb, be.hard_assign(model, zb))
            for key in sums:
                sums[key] += parts[key] * len(batch)
            seen += len(batch)
        z_full = ae.encode_np(x)
        if model.kind == "dcn" and config.dcn_update == "epoch":
            be.epoch_update(model, z_full, be.hard_assign(model, z_full))
        labels = be.hard_assign(model, z_full).hard
        book.current_size = np.bincount(labels, minlength=model.k)
        dead = detect_dead(book, config.t)
        if dead:
            old_centers = model.centers
            positions = [book.cluster_ids.tolist().index(i) for i in dead]
            model, book, labels = dissolve(model, book, dead, z_full)
            if config.backend != "dcn":
                keep = np.setdiff1d(np.arange(len(positions) + model.k), positions)
                opt.swap_param(old_centers, model.centers, keep_rows=keep)
        traces.append(EpochTrace(epoch=epoch, k=model.k,
                                 rec_loss=sums["rec"] / seen,
                                 clust_loss=sums["clust"] / seen,
                                 nn_loss=sums["nn"] / seen,
                                 total_loss=sums["total"] / seen,
                                 dissolved=dead,
                                 creation_sizes=[int(s) for s in book.creation_size]))
    return model, labels, traces
