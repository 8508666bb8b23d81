"""Deep clustering that estimates the number of clusters while training.

Centroid-based backends (alternating and simultaneous) are wrapped with
creation-size bookkeeping: clusters whose membership collapses below a
fraction of their size at creation are dissolved, so the active cluster
count can only shrink from its deliberately high start. An in-batch
nearest-neighbor loss keeps embeddings from scattering while clusters
are still dying off.
"""

from .autodiff import GraphError, Var, backward
from .backends import (Assignments, ClusterModel, clustering_loss, epoch_update,
                       hard_assign, init_model, remove_clusters)
from .data import (BlobSpec, Dataset, batches, load_csv, load_idx, make_blobs,
                   z_normalize)
from .framework import (ClusterBookkeeping, EpochTrace, RunConfig, compute_l,
                        detect_dead, dissolve, nn_loss, nn_loss_simul, run_unseen,
                        total_loss)
from .harness import (ExperimentSpec, ResultRecord, emit_results, run_experiment,
                      subset_first_k)
from .kmeans import KMeansResult, assign, kmeans_best, kmeans_fit
from .metrics import (ContingencyTable, MetricsReport, accuracy, ari, contingency,
                      evaluate, nmi)
from .network import (Adam, AutoEncoder, load_checkpoint, mse, pretrain,
                      save_checkpoint)

__version__ = "0.1.0"

__all__ = [
    "Adam", "Assignments", "AutoEncoder", "BlobSpec", "ClusterBookkeeping",
    "ClusterModel", "ContingencyTable", "Dataset", "EpochTrace", "ExperimentSpec",
    "GraphError", "KMeansResult", "MetricsReport", "ResultRecord", "RunConfig",
    "Var", "accuracy", "ari", "assign", "backward", "batches", "clustering_loss",
    "compute_l", "contingency", "detect_dead", "dissolve", "emit_results",
    "epoch_update", "evaluate", "hard_assign", "init_model", "kmeans_best",
    "kmeans_fit", "load_checkpoint", "load_csv", "load_idx", "make_blobs", "mse",
    "nmi", "nn_loss", "nn_loss_simul", "pretrain", "remove_clusters",
    "run_experiment", "run_unseen", "save_checkpoint", "subset_first_k",
    "total_loss", "z_normalize",
]
