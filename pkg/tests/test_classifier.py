import math

import numpy as np
import pytest
import torch

from absnet.corpus.types import AbsLabel
from absnet.errors import WidthMismatch
from absnet.model.classifier import (
    ClassProbabilities,
    build_classifier,
    classification_loss,
    classification_loss_from_logits,
    classify,
    predict,
)

RNG = np.random.default_rng(99)


def _head(embedding_dim=16, hidden=(8, 8), seed=0):
    return build_classifier(embedding_dim, np.random.default_rng(seed), hidden=hidden)


def _brute_force_probs(z, head):
    """Independent dense recomputation with plain numpy."""
    x = z.astype(np.float64)
    for layer in head.hidden_layers:
        w = layer.weight.detach().numpy().astype(np.float64)
        b = layer.bias.detach().numpy().astype(np.float64)
        x = w @ x + b
        x = np.where(x > 0, x, 0.01 * x)
    w = head.output.weight.detach().numpy().astype(np.float64)
    b = head.output.bias.detach().numpy().astype(np.float64)
    logits = w @ x + b
    e = np.exp(logits - logits.max())
    return e / e.sum()


class TestClassify:
    def test_zero_parameters_give_uniform(self):
        head = _head()
        with torch.no_grad():
            for param in head.parameters():
                param.zero_()
        probs = classify(torch.zeros(16), head)
        assert probs.probabilities == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_softmax_limit_monotone_in_leading_logit(self):
        previous = 0.0
        for t in (1.0, 5.0, 10.0, 15.0):
            log_probs = torch.log_softmax(
                torch.tensor([t, 0.0, 0.0], dtype=torch.float64), dim=-1
            )
            p = float(torch.exp(log_probs)[0])
            assert p > previous
            previous = p
        assert previous > 1.0 - 1e-6

    def test_matches_brute_force_arithmetic(self):
        head = _head()
        for _ in range(20):
            z = RNG.standard_normal(16).astype(np.float32)
            probs = classify(torch.from_numpy(z), head)
            oracle = _brute_force_probs(z, head)
            assert np.abs(np.array(probs.probabilities) - oracle).max() <= 1e-6

    def test_width_mismatch(self):
        head = _head()
        with pytest.raises(WidthMismatch):
            classify(torch.zeros(17), head)

    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            ClassProbabilities(probabilities=(0.5, 0.2, 0.2), logits=(0.0, 0.0, 0.0))


class TestClassificationLoss:
    def test_certain_correct_prediction_zero_loss(self):
        probs = ClassProbabilities(
            probabilities=(1.0, 0.0, 0.0), logits=(60.0, 0.0, 0.0)
        )
        assert classification_loss(probs, AbsLabel.IMAGE_LESS_ABSTRACT) == pytest.approx(
            0.0, abs=1e-20
        )

    def test_uniform_gives_log_three(self):
        probs = ClassProbabilities(
            probabilities=(1 / 3, 1 / 3, 1 / 3), logits=(0.0, 0.0, 0.0)
        )
        assert classification_loss(probs, AbsLabel.EQUAL_ABSTRACTNESS) == pytest.approx(
            math.log(3)
        )

    def test_loss_strictly_increases_as_true_probability_falls(self):
        losses = []
        for t in (3.0, 1.0, 0.0, -1.0, -3.0):
            log_probs = torch.log_softmax(torch.tensor([t, 0.0, 0.0]), dim=-1).tolist()
            probs = ClassProbabilities(
                probabilities=tuple(math.exp(lp) for lp in log_probs),
                logits=(t, 0.0, 0.0),
            )
            losses.append(classification_loss(probs, AbsLabel.IMAGE_LESS_ABSTRACT))
        assert losses == sorted(losses)
        assert all(b > a for a, b in zip(losses, losses[1:]))

    def test_batched_matches_single(self):
        head = _head()
        z = torch.from_numpy(RNG.standard_normal((5, 16)).astype(np.float32))
        labels = torch.tensor([0, 1, 2, 0, 1])
        with torch.no_grad():
            batched = float(classification_loss_from_logits(head(z), labels))
        singles = [
            classification_loss(classify(z[i], head), AbsLabel.from_index(int(labels[i])))
            for i in range(5)
        ]
        assert batched == pytest.approx(sum(singles) / len(singles), rel=1e-6)

    def test_extreme_logits_stay_finite(self):
        logits = torch.tensor([[1000.0, -1000.0, 0.0]])
        loss = classification_loss_from_logits(logits, torch.tensor([1]))
        assert math.isfinite(float(loss))


class TestPredict:
    def test_clear_winner(self):
        head = _head()
        with torch.no_grad():
            for param in head.parameters():
                param.zero_()
            head.output.bias.copy_(torch.tensor([2.0, 1.0, 0.5]))
        assert predict(torch.zeros(16), head) is AbsLabel.IMAGE_LESS_ABSTRACT

    def test_exact_tie_breaks_to_first_class(self):
        head = _head()
        with torch.no_grad():
            for param in head.parameters():
                param.zero_()
        assert predict(torch.zeros(16), head) is AbsLabel.IMAGE_LESS_ABSTRACT

    def test_predict_consistent_with_classify_argmax(self):
        head = _head(seed=4)
        for _ in range(1000):
            z = torch.from_numpy(RNG.standard_normal(16).astype(np.float32))
            probs = classify(z, head)
            assert predict(z, head).index == int(np.argmax(probs.probabilities))

    def test_softmax_shift_invariance(self):
        for _ in range(50):
            logits = RNG.standard_normal(3)
            shifted = logits + RNG.uniform(-40, 40)
            e = np.exp(logits - logits.max())
            p1 = e / e.sum()
            e2 = np.exp(shifted - shifted.max())
            p2 = e2 / e2.sum()
            assert np.abs(p1 - p2).max() <= 1e-9
            assert np.argmax(p1) == np.argmax(p2)
