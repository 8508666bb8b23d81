"""Reverse-mode automatic differentiation over float64 numpy arrays.

A deliberately small operator set: just enough for dense autoencoders,
squared-distance geometry and the soft-assignment losses built on top.
Each operation records closures that scatter the output gradient back
into its parents; backward() walks the tape in reverse topological
order, so shared subexpressions accumulate correctly.
"""

import numpy as np


class GraphError(ValueError):
    """Raised at construction time when operand shapes are incompatible."""


class Var:
    """A node in the computation graph.

    value is always a float64 ndarray (0-d for scalars). grad is filled
    in by backward() and has the same shape as value. Leaves created
    with requires_grad=True are the things an optimizer updates.
    """

    __slots__ = ("value", "grad", "requires_grad", "needs_grad", "_edges")

    def __init__(self, value, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.needs_grad = self.requires_grad
        self._edges = ()  # tuple of (parent Var, fn(out_grad) -> grad piece)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape}, needs_grad={self.needs_grad})"


def _node(value, edges):
    """Build an interior node, keeping only edges into grad-needing parents."""
    out = Var(value)
    live = tuple((p, fn) for p, fn in edges if p.needs_grad)
    out._edges = live
    out.needs_grad = bool(live)
    return out


def _topo(root):
    """Iterative post-order over the subgraph that needs gradients."""
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._edges:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root, seed=None):
    """Populate .grad for every node reachable from root that needs it.

    Gradients are overwritten, not accumulated across calls: each call
    starts the covered subgraph from zero.
    """
    if not root.needs_grad:
        return
    order = _topo(root)
    for node in order:
        node.grad = np.zeros_like(node.value)
    if seed is None:
        if root.value.size != 1:
            raise GraphError("backward() without a seed needs a scalar root")
        root.grad = root.grad + 1.0
    else:
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != root.value.shape:
            raise GraphError(f"seed shape {seed.shape} != root shape {root.value.shape}")
        root.grad = seed.copy()
    for node in reversed(order):
        g = node.grad
        for parent, fn in node._edges:
            parent.grad += fn(g)


# ---------------------------------------------------------------------------
# operators


def _want_2d(x, name):
    if x.value.ndim != 2:
        raise GraphError(f"{name} expects a 2-d operand, got shape {x.value.shape}")


def affine(x, w, b):
    """x @ w + b for a dense layer. x is (n, fan_in), w (fan_in, fan_out), b (fan_out,)."""
    _want_2d(x, "affine")
    _want_2d(w, "affine")
    if x.value.shape[1] != w.value.shape[0]:
        raise GraphError(f"affine: {x.value.shape} @ {w.value.shape}")
    if b.value.shape != (w.value.shape[1],):
        raise GraphError(f"affine: bias shape {b.value.shape} vs fan_out {w.value.shape[1]}")
    y = x.value @ w.value + b.value
    return _node(y, (
        (x, lambda g: g @ w.value.T),
        (w, lambda g: x.value.T @ g),
        (b, lambda g: g.sum(axis=0)),
    ))


def relu(x):
    mask = x.value > 0.0
    return _node(np.where(mask, x.value, 0.0), ((x, lambda g: g * mask),))


def add(a, b):
    if a.value.shape != b.value.shape:
        raise GraphError(f"add: {a.value.shape} vs {b.value.shape}")
    return _node(a.value + b.value, ((a, lambda g: g), (b, lambda g: g)))


def sub(a, b):
    if a.value.shape != b.value.shape:
        raise GraphError(f"sub: {a.value.shape} vs {b.value.shape}")
    return _node(a.value - b.value, ((a, lambda g: g), (b, lambda g: -g)))


def mul(a, b):
    """Elementwise product of same-shape operands."""
    if a.value.shape != b.value.shape:
        raise GraphError(f"mul: {a.value.shape} vs {b.value.shape}")
    return _node(a.value * b.value, (
        (a, lambda g: g * b.value),
        (b, lambda g: g * a.value),
    ))


def scale(x, c):
    c = float(c)
    return _node(x.value * c, ((x, lambda g: g * c),))


def add_const(x, c):
    return _node(x.value + c, ((x, lambda g: g),))


def powc(x, p):
    """x ** p for a constant exponent."""
    p = float(p)
    y = x.value ** p
    return _node(y, ((x, lambda g: g * p * x.value ** (p - 1.0)),))


def log(x, floor=1e-12):
    """Natural log with the argument clamped below at floor.

    Inside the clamped region the derivative is zero, matching the
    flat clamped value rather than 1/x of the unclamped input.
    """
    clamped = np.maximum(x.value, floor)
    open_region = x.value > floor
    return _node(np.log(clamped), ((x, lambda g: np.where(open_region, g / clamped, 0.0)),))


def clip_max(x, cap):
    """Elementwise minimum(x, cap); gradient is zero where the cap binds."""
    cap = float(cap)
    below = x.value < cap
    return _node(np.where(below, x.value, cap), ((x, lambda g: g * below),))


def sumall(x):
    return _node(np.asarray(x.value.sum()), ((x, lambda g: np.broadcast_to(g, x.value.shape).copy()),))


def meanall(x):
    n = x.value.size
    return _node(np.asarray(x.value.mean()), ((x, lambda g: np.broadcast_to(g / n, x.value.shape).copy()),))


def divide(a, b):
    """Scalar quotient a / b with the full quotient rule."""
    if a.value.size != 1 or b.value.size != 1:
        raise GraphError("divide is for scalars")
    av, bv = float(a.value), float(b.value)
    return _node(np.asarray(av / bv), (
        (a, lambda g: g / bv),
        (b, lambda g: -g * av / (bv * bv)),
    ))


def softmax_rows(x):
    """Row-wise softmax with max subtraction for stability."""
    _want_2d(x, "softmax_rows")
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)
    def back(g):
        return s * (g - (g * s).sum(axis=1, keepdims=True))
    return _node(s, ((x, back),))


def rownorm(x):
    """Normalize each row to sum to one."""
    _want_2d(x, "rownorm")
    sums = x.value.sum(axis=1, keepdims=True)
    y = x.value / sums
    def back(g):
        return (g - (g * y).sum(axis=1, keepdims=True)) / sums
    return _node(y, ((x, back),))


def pairwise_sqdist(a, b):
    """D[i, j] = ||a_i - b_j||^2 for 2-d operands with equal width.

    Computed via the expanded quadratic and floored at zero so tiny
    negative values from cancellation never escape.
    """
    _want_2d(a, "pairwise_sqdist")
    _want_2d(b, "pairwise_sqdist")
    if a.value.shape[1] != b.value.shape[1]:
        raise GraphError(f"pairwise_sqdist: widths {a.value.shape[1]} vs {b.value.shape[1]}")
    aa = (a.value * a.value).sum(axis=1)
    bb = (b.value * b.value).sum(axis=1)
    d = aa[:, None] + bb[None, :] - 2.0 * (a.value @ b.value.T)
    np.maximum(d, 0.0, out=d)
    return _node(d, (
        (a, lambda g: 2.0 * (g.sum(axis=1)[:, None] * a.value - g @ b.value)),
        (b, lambda g: 2.0 * (g.sum(axis=0)[:, None] * b.value - g.T @ a.value)),
    ))


def gather_rows(x, idx):
    """y[i] = x[idx[i]]; backward scatter-adds, so repeated rows accumulate."""
    _want_2d(x, "gather_rows")
    idx = np.asarray(idx, dtype=np.intp)
    def back(g):
        buf = np.zeros_like(x.value)
        np.add.at(buf, idx, g)
        return buf
    return _node(x.value[idx], ((x, back),))


def gather_pairs(x, rows, cols):
    """y[k] = x[rows[k], cols[k]] as a 1-d vector, scatter-add backward."""
    _want_2d(x, "gather_pairs")
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if rows.shape != cols.shape:
        raise GraphError(f"gather_pairs: index shapes {rows.shape} vs {cols.shape}")
    def back(g):
        buf = np.zeros_like(x.value)
        np.add.at(buf, (rows, cols), g)
        return buf
    return _node(x.value[rows, cols], ((x, back),))


def constant(value):
    """A graph constant: participates in forward math, blocks gradients."""
    return Var(value, requires_grad=False)
