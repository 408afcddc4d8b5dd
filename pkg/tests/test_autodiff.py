import numpy as np
import pytest

from assertgen.neural import autodiff as ad
from assertgen.neural.autodiff import Tensor


def numeric_grad(f, x: np.ndarray, eps=1e-6):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + eps
        up = f()
        x[i] = old - eps
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


def check(build, *shapes, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    leaves = [ad.parameter(rng.normal(size=s)) for s in shapes]
    out = build(*leaves)
    weights = rng.normal(size=out.shape)
    (out * Tensor(weights)).sum().backward()

    def value():
        return float((build(*[Tensor(leaf.data) for leaf in leaves]).data * weights).sum())

    for leaf in leaves:
        num = numeric_grad(value, leaf.data)
        np.testing.assert_allclose(leaf.grad, num, rtol=tol, atol=tol)


@pytest.mark.parametrize(
    "build, shapes",
    [
        (lambda a, b: a + b, [(3, 4), (4,)]),
        (lambda a, b: a - b, [(2, 3), (2, 1)]),
        (lambda a, b: a * b, [(3, 4), (3, 4)]),
        (lambda a, b: a @ b, [(3, 4), (4, 5)]),
        (lambda a, b: a @ b, [(2, 3, 4), (4, 2)]),
        (lambda a, b: a @ b, [(2, 3, 4), (4,)]),
        (lambda a, b: a @ b, [(2, 1, 3), (2, 3, 5)]),
        (lambda a: -a, [(3,)]),
        (lambda a: a.sum(axis=1), [(3, 4)]),
        (lambda a: a.mean(), [(3, 4)]),
        (lambda a: a.reshape(4, 3), [(3, 4)]),
        (lambda a: a[:, 1:3], [(3, 4)]),
        (lambda a: a[np.array([0, 2, 2]), np.array([1, 1, 3])], [(3, 4)]),
        (lambda a: ad.sigmoid(a), [(3, 4)]),
        (lambda a: ad.tanh(a), [(3, 4)]),
        (lambda a: ad.exp(a), [(3, 4)]),
        (lambda a: ad.log(ad.exp(a) + 1.0), [(3, 4)]),
        (lambda a: ad.softmax(a), [(3, 5)]),
        (lambda a: ad.log_softmax(a), [(3, 5)]),
        (lambda a, b: ad.concat([a, b], axis=-1), [(2, 3), (2, 2)]),
        (lambda a, b: ad.stack([a, b], axis=1), [(2, 3), (2, 3)]),
    ],
)
def test_op_gradients(build, shapes):
    check(build, *shapes)


def test_embedding_gradient_accumulates_repeats():
    W = ad.parameter(np.arange(12.0).reshape(4, 3))
    out = ad.embedding(W, np.array([[1, 1], [3, 0]]))
    out.sum().backward()
    np.testing.assert_array_equal(W.grad[:, 0], [1, 2, 0, 1])


def test_lstm_cell_gradients():
    rng = np.random.default_rng(3)
    x, h, c = (ad.parameter(rng.normal(size=(2, 3))) for _ in range(3))
    W, b = ad.parameter(rng.normal(size=(6, 12)) * 0.5), ad.parameter(rng.normal(size=12))
    wh, wc = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))

    def f(*ts):
        h_out, c_out = ad.lstm_cell(*ts)
        return (h_out * Tensor(wh)).sum() + (c_out * Tensor(wc)).sum()

    f(x, h, c, W, b).backward()
    for leaf in (x, h, c, W, b):
        num = numeric_grad(lambda: float(f(*(Tensor(t.data) for t in (x, h, c, W, b))).data), leaf.data)
        np.testing.assert_allclose(leaf.grad, num, rtol=1e-6, atol=1e-7)


def test_lstm_cell_with_only_hidden_used():
    rng = np.random.default_rng(4)
    x = ad.parameter(rng.normal(size=(1, 2)))
    W = ad.parameter(rng.normal(size=(4, 8)))
    h0, c0 = Tensor(np.zeros((1, 2))), Tensor(np.zeros((1, 2)))
    h, _ = ad.lstm_cell(x, h0, c0, W, Tensor(np.zeros(8)))
    h.sum().backward()
    assert W.grad is not None and np.abs(W.grad).sum() > 0


def test_no_grad_builds_no_graph():
    a = ad.parameter(np.ones(3))
    with ad.no_grad():
        out = (a * 2.0).sum()
    assert not out.requires_grad


def test_softmax_rows_sum_to_one():
    x = Tensor(np.random.default_rng(0).normal(size=(5, 7)) * 50)
    np.testing.assert_allclose(ad.softmax(x).data.sum(axis=-1), 1.0, atol=1e-12)
