"""Numerical primitives, probes, the char LSTM, Adam, and the train loop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from morphoprobe.errors import DataError
from morphoprobe.nn.adam import adam_step, init_adam_state
from morphoprobe.nn.checkpoint import load_checkpoint, save_checkpoint
from morphoprobe.nn.functional import (accuracy, dropout_mask, log_softmax,
                                       nll_loss, relu, softmax)
from morphoprobe.nn.gradcheck import grad_check
from morphoprobe.nn.lstm import (PAD_ID, UNK_ID, CharLSTM, CharVocab,
                                 encode_batch)
from morphoprobe.nn.mlp import MLPProbe
from morphoprobe.nn.train import TrainConfig, evaluate, fit

finite_rows = arrays(np.float64, (4, 6),
                     elements=st.floats(-50, 50, allow_nan=False))


# -- functional -------------------------------------------------------------

@given(finite_rows)
@settings(max_examples=100, deadline=None)
def test_softmax_simplex(x):
    s = softmax(x)
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=-1), 1.0, rtol=1e-12)
    np.testing.assert_allclose(np.exp(log_softmax(x)), s, rtol=1e-12)


def test_softmax_extreme_inputs():
    x = np.array([[1e4, 0.0, -1e4]])
    s = softmax(x)
    assert np.all(np.isfinite(s)) and s[0, 0] == pytest.approx(1.0)
    assert np.all(np.isfinite(log_softmax(x)))


def test_softmax_shift_invariance():
    x = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(softmax(x), softmax(x + 123.0), rtol=1e-12)


def test_relu_and_losses():
    np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 2.0])),
                                  [0.0, 0.0, 2.0])
    log_probs = np.log(np.array([[0.25, 0.75], [0.9, 0.1]]))
    labels = np.array([1, 0])
    assert nll_loss(log_probs, labels) == pytest.approx(
        -(np.log(0.75) + np.log(0.9)) / 2)
    assert accuracy(log_probs, labels) == 1.0
    assert accuracy(log_probs, np.array([0, 0])) == 0.5


def test_dropout_mask_inverted_scaling():
    rng = np.random.default_rng(0)
    m = dropout_mask((2000,), 0.25, rng, np.float64)
    values = set(np.unique(m).tolist())
    assert values == {0.0, 1.0 / 0.75}
    assert np.mean(m == 0.0) == pytest.approx(0.25, abs=0.03)
    # Expectation-preserving: E[mask] == 1.
    assert np.mean(m) == pytest.approx(1.0, abs=0.05)


# -- MLP probe --------------------------------------------------------------

def test_variant_table():
    assert sorted(MLPProbe.VARIANTS) == ["linear_flat", "linear_hidden",
                                         "mlp100", "mlp50", "mlp50x2"]
    with pytest.raises(DataError, match="unknown probe variant"):
        MLPProbe.from_variant("mlp9000", 4, 2)


def test_linear_flat_forward_is_affine():
    model = MLPProbe(input_dim=3, output_dim=2, hidden_sizes=(),
                     activation="identity", dropout=0.0, dtype=np.float64)
    x = np.array([[1.0, -2.0, 0.5], [0.0, 1.0, 1.0]])
    want = log_softmax(x @ model.params["W0"] + model.params["b0"])
    np.testing.assert_allclose(model.forward(x), want, rtol=1e-12)


def test_layered_mixing():
    model = MLPProbe(input_dim=4, output_dim=2, layered=True, n_layers=3,
                     dropout=0.0, dtype=np.float64)
    x = np.random.default_rng(0).normal(size=(5, 3, 4))
    # Zero logits: uniform weights, so the mix is the plain layer mean.
    np.testing.assert_allclose(model.layer_weights(), np.full(3, 1 / 3),
                               rtol=1e-12)
    logp_uniform = model.forward(x)
    flat = MLPProbe(input_dim=4, output_dim=2, dropout=0.0, dtype=np.float64)
    flat.params["W0"][...] = model.params["W0"]
    flat.params["b0"][...] = model.params["b0"]
    np.testing.assert_allclose(logp_uniform, flat.forward(x.mean(axis=1)),
                               rtol=1e-10)
    # A dominant logit selects its layer.
    model.params["layer_logits"][...] = np.array([0.0, 60.0, 0.0])
    np.testing.assert_allclose(model.forward(x), flat.forward(x[:, 1, :]),
                               rtol=1e-10)


def test_flat_probe_has_no_layer_weights():
    with pytest.raises(DataError):
        MLPProbe(input_dim=4, output_dim=2).layer_weights()
    with pytest.raises(DataError):
        MLPProbe(input_dim=4, output_dim=2, layered=True)  # n_layers missing


def test_input_shape_checked():
    model = MLPProbe(input_dim=4, output_dim=2)
    with pytest.raises(DataError):
        model.forward(np.zeros((2, 5), dtype=np.float32))
    layered = MLPProbe(input_dim=4, output_dim=2, layered=True, n_layers=3)
    with pytest.raises(DataError):
        layered.forward(np.zeros((2, 2, 4), dtype=np.float32))


def test_mlp_gradcheck_smoke():
    rng = np.random.default_rng(3)
    model = MLPProbe(input_dim=6, output_dim=3, layered=True, n_layers=4,
                     dropout=0.0, dtype=np.float64,
                     init_rng=np.random.default_rng(1))
    x = rng.normal(size=(8, 4, 6))
    labels = rng.integers(0, 3, size=8)
    assert grad_check(model, x, labels, rng=rng) < 1e-6


# -- char LSTM --------------------------------------------------------------

def test_vocab_encoding():
    vocab = CharVocab.build(["abc"])
    ids = vocab.encode("abcz")
    assert ids[-1] == UNK_ID
    assert PAD_ID not in ids
    assert vocab.size == len(vocab.chars) + 2
    # The reserved mask character is always in the inventory.
    from morphoprobe.perturb import MASK_CHAR
    assert MASK_CHAR in vocab.chars


def test_encode_batch():
    vocab = CharVocab.build(["abcd"])
    ids, lengths, pool = encode_batch(vocab, ["ab", "abcd"], [1, 3])
    assert ids.shape == (2, 4)
    assert ids[0, 2] == PAD_ID and ids[0, 3] == PAD_ID
    assert lengths.tolist() == [2, 4]
    assert pool.tolist() == [1, 3]
    with pytest.raises(DataError):
        encode_batch(vocab, ["ab"], [2])      # pool out of range
    with pytest.raises(DataError):
        encode_batch(vocab, [""], [0])        # empty text
    with pytest.raises(DataError):
        encode_batch(vocab, ["ab", "cd"], [0])


def _char_model(texts, dtype=np.float64, **kw):
    vocab = CharVocab.build(texts)
    return CharLSTM(vocab, n_classes=2, dtype=dtype, dropout=0.0,
                    init_rng=np.random.default_rng(7), **kw)


def test_padding_does_not_leak():
    # Forward over a padded batch must equal each sequence run alone: the
    # validity mask freezes h and c past every sequence's true length.
    texts = ["ab", "abcdefg", "abcde"]
    model = _char_model(texts)
    batch = encode_batch(model.vocab, texts, [0, 3, 4])
    together = model.forward(batch)
    for i, text in enumerate(texts):
        alone = model.forward(encode_batch(model.vocab, [text],
                                           [batch[2][i]]))
        np.testing.assert_allclose(together[i], alone[0], atol=1e-12)


def test_lstm_gradcheck_smoke():
    model = _char_model(["abcd", "xy"])
    batch = encode_batch(model.vocab, ["abcd", "dcba", "xy"], [1, 2, 0])
    labels = np.array([0, 1, 1])
    assert grad_check(model, batch, labels,
                      rng=np.random.default_rng(5)) < 1e-6


def test_parameter_budget():
    # 30-dim chars, 50 units per direction, 100->50->2 head: ~38k weights
    # for a 20-character inventory.
    vocab = CharVocab(chars=tuple("abcdefghijklmnopqrst"))
    model = CharLSTM(vocab, n_classes=2, head_hidden=50)
    assert 34_000 < model.n_parameters() < 42_000


# -- Adam -------------------------------------------------------------------

def test_adam_matches_reference_formula():
    rng = np.random.default_rng(0)
    params = {"w": rng.normal(size=(3, 2)), "b": rng.normal(size=2)}
    mirror = {k: v.copy() for k, v in params.items()}
    state = init_adam_state(params)
    m = {k: np.zeros_like(v) for k, v in mirror.items()}
    v2 = {k: np.zeros_like(v) for k, v in mirror.items()}
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    for t in range(1, 4):
        grads = {k: rng.normal(size=p.shape) for k, p in params.items()}
        adam_step(params, grads, state, lr=lr, beta1=b1, beta2=b2,
                  epsilon=eps)
        for k, g in grads.items():
            m[k] = b1 * m[k] + (1 - b1) * g
            v2[k] = b2 * v2[k] + (1 - b2) * g * g
            m_hat = m[k] / (1 - b1 ** t)
            v_hat = v2[k] / (1 - b2 ** t)
            mirror[k] -= lr * m_hat / (np.sqrt(v_hat) + eps)
    for k in params:
        np.testing.assert_allclose(params[k], mirror[k], rtol=1e-12)
    assert state["step"] == 3


def test_adam_first_step_size():
    # With bias correction the first step is ~lr regardless of gradient
    # scale (sign * lr / (1 + eps')).
    params = {"w": np.zeros(3)}
    state = init_adam_state(params)
    adam_step(params, {"w": np.array([1e-4, 1.0, 1e4])}, state, lr=0.5)
    np.testing.assert_allclose(params["w"], -0.5, rtol=1e-3)


# -- train loop -------------------------------------------------------------

def _blobs(n=60, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.vstack([rng.normal(-2.0, 0.5, size=(half, 4)),
                   rng.normal(2.0, 0.5, size=(half, 4))]).astype(np.float32)
    y = np.repeat([0, 1], half)
    order = rng.permutation(n)
    return x[order], y[order]


def test_config_validation():
    with pytest.raises(DataError):
        TrainConfig(lr=0.0)
    with pytest.raises(DataError):
        TrainConfig(batch_size=0)
    with pytest.raises(DataError):
        TrainConfig(patience=0)
    with pytest.raises(DataError):
        TrainConfig(patience=30, max_epochs=30)


def test_fit_learns_separable_data():
    x, y = _blobs()
    xd, yd = _blobs(seed=1)
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0,
                     init_rng=np.random.default_rng(2))
    result = fit(model, x, y, xd, yd,
                 TrainConfig(batch_size=16, max_epochs=50, patience=5))
    assert result.best_dev_acc == 1.0
    assert not result.diverged
    assert len(result.dev_curve) == result.epochs_run


def test_fit_restores_best_epoch():
    x, y = _blobs()
    xd, yd = _blobs(seed=1)
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0,
                     init_rng=np.random.default_rng(2))
    result = fit(model, x, y, xd, yd,
                 TrainConfig(batch_size=16, max_epochs=30, patience=5))
    loss, acc = evaluate(model, xd, yd)
    assert acc == pytest.approx(result.best_dev_acc)
    assert loss == pytest.approx(result.best_dev_loss)
    assert (result.best_dev_loss, result.best_dev_acc) == pytest.approx(
        min(result.dev_curve, key=lambda la: (-la[1], la[0])))


def test_fit_stops_after_patience_stall():
    # A learning rate of ~0 freezes the model, so epoch 1 sets both
    # high-water marks and the stall counter runs out exactly at
    # patience + 1 epochs.
    x, y = _blobs()
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0)
    result = fit(model, x, y, x, y,
                 TrainConfig(lr=1e-300, batch_size=32, max_epochs=100,
                             patience=4))
    assert result.epochs_run == 5
    assert result.best_epoch == 1


def test_fit_flags_divergence():
    x, y = _blobs()
    x = x * 1e8
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        result = fit(model, x, y, x, y,
                     TrainConfig(lr=1e30, batch_size=16, max_epochs=5,
                                 patience=2))
    assert result.diverged


def test_evaluate_batch_invariance():
    x, y = _blobs(n=50)
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0)
    big = evaluate(model, x, y, batch_size=512)
    small = evaluate(model, x, y, batch_size=7)
    assert big == pytest.approx(small, rel=1e-6)


def test_checkpoint_roundtrip(tmp_path):
    model = MLPProbe(input_dim=4, output_dim=2, dropout=0.0)
    x = np.random.default_rng(0).normal(size=(3, 4)).astype(np.float32)
    before = model.forward(x)
    save_checkpoint(tmp_path / "ck.npz", model.params,
                    {"probe": "mlp50", "note": "unit"})
    params, meta = load_checkpoint(tmp_path / "ck.npz")
    assert meta == {"probe": "mlp50", "note": "unit"}
    fresh = MLPProbe(input_dim=4, output_dim=2, dropout=0.0,
                     init_rng=np.random.default_rng(99))
    for k, v in params.items():
        fresh.params[k][...] = v
    np.testing.assert_array_equal(fresh.forward(x), before)
