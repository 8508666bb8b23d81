"""Trace figures rendered next to the delimited outputs.

Two files per record: the active-cluster count per epoch for every
repetition, and the loss components of the first repetition.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_traces(record, out_dir):
    written = []
    reps = record.reps
    if not reps or not reps[0].k_trace:
        return written

    fig, ax = plt.subplots(figsize=(6, 4))
    for r in reps:
        ax.step(range(len(r.k_trace)), r.k_trace, where="post", alpha=0.7,
                label=f"seed {r.seed}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("active clusters")
    ax.set_title(f"{record.backend}: cluster count per epoch")
    if len(reps) <= 10:
        ax.legend(fontsize="small")
    fig.tight_layout()
    path = out_dir / "k_trace.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    first = reps[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = range(len(first.total_trace))
    ax.plot(epochs, first.total_trace, label="total")
    ax.plot(epochs, first.rec_trace, label="reconstruction")
    ax.plot(epochs, first.clust_trace, label="clustering")
    ax.plot(epochs, first.nn_trace, label="neighbor")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean batch loss")
    ax.set_title(f"{record.backend}: loss components (seed {first.seed})")
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = out_dir / "losses.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
