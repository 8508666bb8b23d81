"""Dense autoencoder, Adam, and JSON checkpoints.

The autoencoder is a plain fully connected stack: ReLU on every hidden
layer, identity on the embedding and on the reconstruction output, all
float64. Weights are initialized uniformly in [-1/sqrt(fan_in),
+1/sqrt(fan_in)] from a seeded generator so runs are reproducible.
"""

import json

import numpy as np

from . import autodiff as ad


def _init_stack(rng, dims):
    """Weights and biases for consecutive layer widths in dims."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(ad.Var(rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True))
        biases.append(ad.Var(rng.uniform(-bound, bound, size=fan_out), requires_grad=True))
    return weights, biases


def _acts_for(dims):
    # hidden layers relu, final layer identity
    return ["relu"] * (len(dims) - 2) + ["identity"]


def _forward_var(x, weights, biases, acts):
    h = x if isinstance(x, ad.Var) else ad.constant(x)
    for w, b, act in zip(weights, biases, acts):
        h = ad.affine(h, w, b)
        if act == "relu":
            h = ad.relu(h)
    return h


def _forward_np(x, weights, biases, acts):
    h = np.asarray(x, dtype=np.float64)
    for w, b, act in zip(weights, biases, acts):
        h = h @ w.value + b.value
        if act == "relu":
            np.maximum(h, 0.0, out=h)
    return h


class AutoEncoder:
    """Symmetric encoder/decoder pair over 2-d float64 batches."""

    def __init__(self, input_dim, hidden_dims=(500, 500, 2000), embed_dim=10, seed=0):
        self.input_dim = int(input_dim)
        self.hidden_dims = tuple(int(h) for h in hidden_dims)
        self.embed_dim = int(embed_dim)
        enc_dims = [self.input_dim, *self.hidden_dims, self.embed_dim]
        dec_dims = list(reversed(enc_dims))
        rng = np.random.default_rng(seed)
        self.enc_w, self.enc_b = _init_stack(rng, enc_dims)
        self.dec_w, self.dec_b = _init_stack(rng, dec_dims)
        self._enc_acts = _acts_for(enc_dims)
        self._dec_acts = _acts_for(dec_dims)

    @property
    def params(self):
        return [*self.enc_w, *self.enc_b, *self.dec_w, *self.dec_b]

    @property
    def encoder_params(self):
        return [*self.enc_w, *self.enc_b]

    def encode(self, x):
        """Differentiable embedding of a batch."""
        return _forward_var(x, self.enc_w, self.enc_b, self._enc_acts)

    def decode(self, z):
        return _forward_var(z, self.dec_w, self.dec_b, self._dec_acts)

    def encode_np(self, x):
        """Embedding without building a graph, for evaluation passes."""
        return _forward_np(x, self.enc_w, self.enc_b, self._enc_acts)

    def decode_np(self, z):
        return _forward_np(z, self.dec_w, self.dec_b, self._dec_acts)


def mse(pred, target):
    """Mean over all elements of the squared difference."""
    t = target if isinstance(target, ad.Var) else ad.constant(target)
    return ad.meanall(ad.powc(ad.sub(pred, t), 2.0))


def zero_grad(params):
    for p in params:
        p.grad = None


class Adam:
    """Adam in its published form, one shared step counter.

    Parameters whose grad is None at step() time are skipped untouched,
    so it is safe to leave the decoder out of a graph when only the
    encoder is being trained.
    """

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._state = {}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p in self.params:
            g = p.grad
            if g is None:
                continue
            m, v = self._state.get(id(p), (None, None))
            if m is None:
                m = np.zeros_like(p.value)
                v = np.zeros_like(p.value)
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * (g * g)
            self._state[id(p)] = (m, v)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def swap_param(self, old, new, keep_rows=None):
        """Replace old with new in place, carrying moment rows along.

        keep_rows selects which rows of the old moments survive; used
        when center rows are removed mid-training.
        """
        st = self._state.pop(id(old), None)
        if st is not None:
            m, v = st
            if keep_rows is not None:
                m, v = m[keep_rows], v[keep_rows]
            self._state[id(new)] = (m, v)
        self.params = [new if p is old else p for p in self.params]


def pretrain(ae, x, epochs, lr, batch_size, seed):
    """Reconstruction-only warmup; returns per-epoch mean losses."""
    from .data import batches

    opt = Adam(ae.params, lr=lr)
    history = []
    for epoch in range(epochs):
        total, count = 0.0, 0
        for batch in batches(x.shape[0], batch_size, seed, epoch):
            xb = x[batch]
            zero_grad(ae.params)
            loss = mse(ae.decode(ae.encode(xb)), xb)
            ad.backward(loss)
            opt.step()
            total += float(loss.value) * len(batch)
            count += len(batch)
        history.append(total / count)
    return history


CHECKPOINT_VERSION = 1


def _stack_blob(weights, biases, acts, dims):
    return {
        "layer_dims": [int(d) for d in dims],
        "activations": list(acts),
        "weights": [w.value.tolist() for w in weights],
        "biases": [b.value.tolist() for b in biases],
    }


def save_checkpoint(ae, path):
    enc_dims = [ae.input_dim, *ae.hidden_dims, ae.embed_dim]
    dec_dims = list(reversed(enc_dims))
    blob = {
        "version": CHECKPOINT_VERSION,
        "encoder": _stack_blob(ae.enc_w, ae.enc_b, ae._enc_acts, enc_dims),
        "decoder": _stack_blob(ae.dec_w, ae.dec_b, ae._dec_acts, dec_dims),
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path):
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')!r}")
    enc = blob["encoder"]
    dims = enc["layer_dims"]
    ae = AutoEncoder(dims[0], hidden_dims=tuple(dims[1:-1]), embed_dim=dims[-1], seed=0)
    for holder, saved in ((ae.enc_w, enc["weights"]), (ae.enc_b, enc["biases"]),
                          (ae.dec_w, blob["decoder"]["weights"]), (ae.dec_b, blob["decoder"]["biases"])):
        if len(holder) != len(saved):
            raise ValueError("checkpoint layer count mismatch")
        for var, mat in zip(holder, saved):
            arr = np.asarray(mat, dtype=np.float64)
            if arr.shape != var.value.shape:
                raise ValueError(f"checkpoint shape mismatch: {arr.shape} vs {var.value.shape}")
            var.value = arr
    return ae
