import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roimatch.numcore import (
    AdamState,
    CheckpointError,
    ContractError,
    NumericError,
    ShapeError,
    Tensor,
    adam_step,
    clip,
    concat,
    dot,
    exp,
    load_checkpoint,
    matmul,
    mean,
    no_grad,
    norm,
    normalize,
    relu,
    save_checkpoint,
    sigmoid,
    square,
    sum_,
    transpose,
)


def numeric_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def check_grad(build, *arrays, rtol=1e-4, atol=1e-7):
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    build(*leaves).backward()
    for k, a in enumerate(arrays):
        def f(v, k=k):
            args = [Tensor(x.copy()) for x in arrays]
            args[k] = Tensor(v.copy())
            return float(build(*args).data)
        expected = numeric_grad(f, a.copy())
        np.testing.assert_allclose(leaves[k].grad, expected, rtol=rtol, atol=atol)


def test_matmul_examples():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(Tensor(np.eye(2)), a).data, a.data)
    assert np.array_equal(matmul(a, Tensor([[5.0], [6.0]])).data, [[17.0], [39.0]])
    assert np.array_equal(matmul(Tensor(np.zeros((2, 2))), a).data, np.zeros((2, 2)))


def test_matmul_shape_error_reports_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))


def test_square_grad_at_three():
    x = Tensor([3.0], requires_grad=True)
    sum_(square(x)).backward()
    assert x.grad[0] == 6.0


def test_sigmoid_grad_at_zero():
    x = Tensor(np.zeros(5), requires_grad=True)
    sum_(sigmoid(x)).backward()
    np.testing.assert_allclose(x.grad, 0.25)


def test_backward_needs_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        (x * 2.0).backward()


def test_detached_input_has_no_grad():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(3))
    sum_(x * y).backward()
    assert y.grad is None
    assert x.grad is not None


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = sum_(x * 2.0)
    assert not y.requires_grad


def test_non_finite_values_rejected():
    with pytest.raises(NumericError):
        Tensor([1.0, math.nan])
    with pytest.raises(NumericError):
        exp(Tensor([1000.0]))


def test_gradients_accumulate_across_backward_calls():
    x = Tensor([2.0], requires_grad=True)
    sum_(square(x)).backward()
    sum_(square(x)).backward()
    assert x.grad[0] == 8.0


small = st.integers(min_value=1, max_value=4)


@settings(max_examples=30, deadline=None)
@given(m=small, k=small, n=small, seed=st.integers(0, 2**31 - 1))
def test_matmul_grad_matches_finite_differences(m, k, n, seed):
    rng = np.random.default_rng(seed)
    check_grad(lambda a, b: sum_(square(matmul(a, b))), rng.normal(size=(m, k)), rng.normal(size=(k, n)))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_batched_matmul_grads(seed):
    rng = np.random.default_rng(seed)
    a, b, w = rng.normal(size=(3, 2, 4)), rng.normal(size=(3, 4, 2)), rng.normal(size=(2, 5))
    check_grad(lambda a, b, w: sum_(square(matmul(matmul(a, b), w))), a, b, w)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_composite_grad_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 3, 3))
    y = rng.normal(size=(2, 3, 3))

    def build(x, y):
        k = exp(clip(matmul(x, transpose(y)), -5.0, 5.0))
        s = normalize(normalize(k, axis=-1), axis=-2)
        h = concat([matmul(s, y), relu(x)], axis=-1)
        p = mean(h, axis=-2)
        q = mean(sigmoid(h) - h * 0.5, axis=-2)
        cos = dot(p, q) / (norm(p) * norm(q))
        return sum_(square(cos - 0.3)) + mean(x / (square(y) + 1.0))

    check_grad(build, x, y)


def test_clip_blocks_gradient_outside_range():
    x = Tensor([-2.0, 0.5, 2.0], requires_grad=True)
    sum_(clip(x, 0.0, 1.0)).backward()
    assert list(x.grad) == [0.0, 1.0, 0.0]


def test_norm_grad_at_zero_is_zero():
    x = Tensor(np.zeros(3), requires_grad=True)
    sum_(norm(x)).backward()
    assert np.array_equal(x.grad, np.zeros(3))


def test_forward_and_grads_deterministic():
    def run():
        rng = np.random.default_rng(7)
        a = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
        out = sum_(square(relu(matmul(a, a))))
        out.backward()
        return out.data.tobytes(), a.grad.tobytes()
    assert run() == run()


# -- Adam -------------------------------------------------------------------
def test_adam_zero_grad_keeps_params():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    p.grad = np.zeros(2)
    adam_step({"p": p}, AdamState())
    assert np.all(np.abs(p.data - [1.0, -2.0]) < 1e-12)


def test_adam_first_step_moves_by_learning_rate():
    p = Tensor([0.5], requires_grad=True)
    p.grad = np.array([1.0])
    adam_step({"p": p}, AdamState(learning_rate=1e-3))
    assert abs((0.5 - p.data[0]) - 1e-3) < 1e-6


def test_adam_second_moment_recursion():
    state = AdamState()
    p = Tensor([0.0], requires_grad=True)
    g = 0.3
    for _ in range(2):
        p.grad = np.array([g])
        adam_step({"p": p}, state)
    v1 = (1 - state.beta2) * g * g
    v2 = state.beta2 * v1 + (1 - state.beta2) * g * g
    assert state.second_moment["p"][0] == pytest.approx(v2, rel=1e-15)
    assert state.step_count == 2


def test_adam_nan_aborts_and_names_parameter():
    a = Tensor([1.0], requires_grad=True)
    b = Tensor([1.0], requires_grad=True)
    a.grad = np.array([1.0])
    b.grad = np.array([math.nan])
    state = AdamState()
    with pytest.raises(NumericError, match="'b'"):
        adam_step({"a": a, "b": b}, state)
    assert a.data[0] == 1.0 and state.step_count == 0


def test_adam_skips_params_without_grad():
    a = Tensor([1.0], requires_grad=True)
    adam_step({"a": a}, AdamState())
    assert a.data[0] == 1.0


# -- checkpoint --------------------------------------------------------------
def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {"w": rng.normal(size=(3, 4)), "b": rng.normal(size=4), "s": np.array(2.5)}
    save_checkpoint(tmp_path / "m.ckpt", tensors, {"L": 2}, {"note": "x"})
    back, hyper, meta = load_checkpoint(tmp_path / "m.ckpt")
    assert hyper == {"L": 2} and meta == {"note": "x"}
    for k, v in tensors.items():
        assert np.array_equal(back[k], v)


def test_checkpoint_bytes_deterministic(tmp_path):
    tensors = {"b": np.arange(3.0), "a": np.ones((2, 2))}
    save_checkpoint(tmp_path / "1.ckpt", tensors, {}, {})
    save_checkpoint(tmp_path / "2.ckpt", dict(reversed(list(tensors.items()))), {}, {})
    assert (tmp_path / "1.ckpt").read_bytes() == (tmp_path / "2.ckpt").read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    (tmp_path / "bad.ckpt").write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "bad.ckpt")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.ckpt")
