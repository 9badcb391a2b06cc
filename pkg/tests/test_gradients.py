"""Finite-difference verification of every parameterized block."""

import numpy as np
import pytest
import torch

from absnet.training.gradcheck import BLOCK_PROBES, check_block, gradient_check

TOLERANCE = 1e-4


@pytest.mark.parametrize("block", sorted(BLOCK_PROBES))
def test_block_gradients(block):
    error = check_block(block)
    assert error <= TOLERANCE, f"{block}: max relative error {error:.3e}"


def test_linear_probe_is_essentially_exact():
    """Central differences are exact for a linear map up to rounding.

    A larger step costs nothing here (no truncation error for linear
    maps) and keeps float64 cancellation noise below 1e-10."""
    rng = np.random.default_rng(0)
    w = torch.from_numpy(rng.standard_normal(12)).requires_grad_(True)
    x = torch.from_numpy(rng.standard_normal(12))

    def loss_fn():
        return (w * x).sum()

    assert gradient_check(loss_fn, [w], eps=1e-3) <= 1e-10


class _ScaleGradient(torch.autograd.Function):
    """Identity forward whose backward is deliberately off by a factor."""

    @staticmethod
    def forward(ctx, x):
        return x.clone()

    @staticmethod
    def backward(ctx, grad):
        return 1.01 * grad


def test_checker_detects_one_percent_corruption():
    rng = np.random.default_rng(1)
    w = torch.from_numpy(rng.standard_normal(8)).requires_grad_(True)
    x = torch.from_numpy(rng.standard_normal(8))

    def loss_fn():
        return (_ScaleGradient.apply(w) * x).sum()

    assert gradient_check(loss_fn, [w]) >= 9e-3
