"""Experiment orchestration: dataset resolution, pretraining cache,
repetition loops, result records and their CSV/JSON/figure emission.
"""

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import network
from .data import BlobSpec, Dataset, load_csv, load_idx, make_blobs, z_normalize
from .framework import RunConfig, run_unseen
from .metrics import evaluate


@dataclass
class ExperimentSpec:
    source: str                      # csv:PATH | idx:IMG,LBL | blobs:k=..,n=..,d=..,std=..
    config: RunConfig
    reps: int = 1
    out_dir: Optional[str] = None
    label_col: Optional[int] = None
    first_k: Optional[int] = None
    normalize: str = "auto"          # feature | channel | none | auto
    baseline: bool = False
    dump_embeddings: bool = False
    cache_dir: Optional[str] = None
    figures: bool = True

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.normalize not in ("feature", "channel", "none", "auto"):
            raise ValueError(f"unknown normalize mode {self.normalize!r}")


@dataclass
class RepResult:
    seed: int
    acc: Optional[float]
    ari: Optional[float]
    nmi: Optional[float]
    k_pred: int
    seconds: float
    k_trace: list = field(default_factory=list)
    rec_trace: list = field(default_factory=list)
    clust_trace: list = field(default_factory=list)
    nn_trace: list = field(default_factory=list)
    total_trace: list = field(default_factory=list)
    dissolved: list = field(default_factory=list)


@dataclass
class ResultRecord:
    dataset: str
    backend: str
    baseline: bool
    config: dict
    reps: list
    aggregate: dict

    def to_dict(self):
        return asdict(self)


def parse_source(source):
    """Split a dataset source string into (kind, payload)."""
    kind, sep, rest = source.partition(":")
    if not sep or kind not in ("csv", "idx", "blobs"):
        raise ValueError(f"dataset source must start with csv:, idx: or blobs: (got {source!r})")
    return kind, rest


def load_source(source, label_col=None):
    kind, rest = parse_source(source)
    if kind == "csv":
        return load_csv(rest, label_col=label_col)
    if kind == "idx":
        paths = rest.split(",")
        if len(paths) != 2:
            raise ValueError(f"idx source needs IMAGES,LABELS (got {rest!r})")
        return load_idx(paths[0], paths[1])
    fields = {}
    for item in rest.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"bad blobs field {item!r}")
        fields[key.strip()] = val.strip()
    try:
        spec = BlobSpec(n_samples=int(fields["n"]), n_features=int(fields["d"]),
                        k=int(fields["k"]), std=float(fields["std"]),
                        seed=int(fields.get("seed", 0)))
    except KeyError as missing:
        raise ValueError(f"blobs source needs k, n, d, std (missing {missing})") from None
    return make_blobs(spec)


def subset_first_k(ds, k):
    """Keep only the samples whose true label is below k."""
    if ds.labels is None:
        raise ValueError("subset_first_k needs a labeled dataset")
    mask = ds.labels < k
    return Dataset(features=ds.features[mask], labels=ds.labels[mask],
                   name=f"{ds.name}[first {k}]")


def prepare_dataset(spec):
    kind, _ = parse_source(spec.source)
    ds = load_source(spec.source, label_col=spec.label_col)
    if spec.first_k is not None:
        ds = subset_first_k(ds, spec.first_k)
    mode = spec.normalize
    if mode == "auto":
        mode = "channel" if kind == "idx" else "feature"
    if mode != "none":
        ds = z_normalize(ds, mode=f"{mode}_wise")
    return ds


def _dataset_digest(ds):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.features).tobytes())
    h.update(str(ds.features.shape).encode())
    return h.hexdigest()[:16]


def pretrained_autoencoder(ds, config, cache_dir=None):
    """Pretrain once per (data, architecture, seed, schedule); reuse from disk.

    The cache is what lets every backend start from the same warmed-up
    network for a given seed.
    """
    if cache_dir is None or config.pretrain_epochs == 0:
        ae = network.AutoEncoder(ds.dim, hidden_dims=config.hidden_dims,
                                 embed_dim=config.embed_dim, seed=config.seed)
        if config.pretrain_epochs > 0:
            network.pretrain(ae, ds.features, config.pretrain_epochs,
                             config.pretrain_lr, config.batch_size, config.seed)
        return ae
    key = "_".join([
        _dataset_digest(ds),
        "x".join(str(d) for d in config.hidden_dims),
        str(config.embed_dim), str(config.seed),
        str(config.pretrain_epochs), f"{config.pretrain_lr:g}", str(config.batch_size),
    ])
    path = Path(cache_dir) / f"ae_{hashlib.sha256(key.encode()).hexdigest()[:16]}.json"
    if path.exists():
        return network.load_checkpoint(path)
    ae = network.AutoEncoder(ds.dim, hidden_dims=config.hidden_dims,
                             embed_dim=config.embed_dim, seed=config.seed)
    network.pretrain(ae, ds.features, config.pretrain_epochs,
                     config.pretrain_lr, config.batch_size, config.seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    network.save_checkpoint(ae, path)
    return ae


def _aggregate(reps):
    out = {}
    for key in ("acc", "ari", "nmi", "k_pred", "seconds"):
        vals = [getattr(r, key) for r in reps]
        if any(v is None for v in vals):
            out[key] = {"mean": None, "std": None}
            continue
        arr = np.asarray(vals, dtype=np.float64)
        out[key] = {"mean": float(arr.mean()), "std": float(arr.std())}
    return out


def run_experiment(spec):
    """Run spec.reps seeded repetitions and assemble one ResultRecord.

    Seeds run seed, seed+1, ... on one fixed dataset. Baseline mode
    trains the bare backend at the true k: dissolution and the neighbor
    term are switched off.
    """
    ds = prepare_dataset(spec)
    config = spec.config
    if spec.baseline:
        if ds.labels is None:
            raise ValueError("baseline mode needs labels to know the true k")
        k_true = int(len(np.unique(ds.labels)))
        config = replace(config, k_init=k_true, t=0.0, nn_loss_enabled=False)
    cache_dir = spec.cache_dir
    if cache_dir is None and spec.out_dir is not None:
        cache_dir = str(Path(spec.out_dir) / "checkpoints")
    out_dir = Path(spec.out_dir) if spec.out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    reps = []
    for offset in range(spec.reps):
        run_cfg = replace(config, seed=config.seed + offset)
        ae = pretrained_autoencoder(ds, run_cfg, cache_dir=cache_dir)
        start = time.perf_counter()
        model, labels, traces = run_unseen(ds, run_cfg, ae=ae)
        seconds = time.perf_counter() - start
        if ds.labels is not None:
            report = evaluate(ds.labels, labels)
            acc, ari_v, nmi_v = report.acc, report.ari, report.nmi
        else:
            acc = ari_v = nmi_v = None
        reps.append(RepResult(
            seed=run_cfg.seed, acc=acc, ari=ari_v, nmi=nmi_v,
            k_pred=int(len(np.unique(labels))), seconds=seconds,
            k_trace=[tr.k for tr in traces],
            rec_trace=[tr.rec_loss for tr in traces],
            clust_trace=[tr.clust_loss for tr in traces],
            nn_trace=[tr.nn_loss for tr in traces],
            total_trace=[tr.total_loss for tr in traces],
            dissolved=[tr.dissolved for tr in traces]))
        if spec.dump_embeddings and out_dir is not None:
            z = ae.encode_np(ds.features)
            head = ",".join(f"z{i}" for i in range(z.shape[1])) + ",label"
            lab = labels.astype(np.int64)
            np.savetxt(out_dir / f"embeddings_seed{run_cfg.seed}.csv",
                       np.column_stack([z, lab]), delimiter=",",
                       header=head, comments="", fmt="%.6f")
    cfg_dict = asdict(config)
    cfg_dict["hidden_dims"] = list(config.hidden_dims)   # json-faithful
    record = ResultRecord(dataset=ds.name, backend=config.backend,
                          baseline=spec.baseline, config=cfg_dict,
                          reps=reps, aggregate=_aggregate(reps))
    if out_dir is not None:
        emit_results(record, out_dir, figures=spec.figures)
    return record


def _fmt(v):
    return "" if v is None else f"{v:.4f}"


def emit_results(record, out_dir, formats=("json", "csv"), figures=True):
    """Write the record as JSON (full) and CSV (one row per repetition
    plus an aggregate row), and render the trace figures next to them.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out_dir / "results.json"
        with open(path, "w") as fh:
            json.dump(record.to_dict(), fh, indent=2)
        written.append(path)
    if "csv" in formats:
        path = out_dir / "results.csv"
        rows = ["dataset,backend,seed,acc,ari,nmi,k_pred,seconds"]
        for r in record.reps:
            rows.append(",".join([record.dataset.replace(",", ";"), record.backend,
                                  str(r.seed), _fmt(r.acc), _fmt(r.ari), _fmt(r.nmi),
                                  str(r.k_pred), f"{r.seconds:.4f}"]))
        agg = record.aggregate
        rows.append(",".join([record.dataset.replace(",", ";"), record.backend, "aggregate",
                              _fmt(agg["acc"]["mean"]), _fmt(agg["ari"]["mean"]),
                              _fmt(agg["nmi"]["mean"]), _fmt(agg["k_pred"]["mean"]),
                              _fmt(agg["seconds"]["mean"])]))
        path.write_text("\n".join(rows) + "\n")
        written.append(path)
    if figures:
        from .plots import render_traces
        written.extend(render_traces(record, out_dir))
    return written
