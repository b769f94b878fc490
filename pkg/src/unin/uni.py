"""Neighborhood-fusion convolution over the agent attention matrix.

Each row of the attention matrix is an agent's incoming attention profile
over every other agent; repeated same-size 1-D convolution along rows lets
information from the whole row (an unbounded set of neighbors) reach every
entry, without fixing the number of participants or a spatial radius. The
result is fused with the expanded category interaction weights.
"""

from __future__ import annotations

import warnings
from typing import Sequence

from . import numerics as nm
from .errors import ContractError, ShapeError
from .numerics import Tensor


def uni_conv(
    attention: Tensor,
    kernels: Sequence[Tensor],
    repeats: int | None = None,
    mode: str = "rows",
) -> Tensor:
    """Repeatedly convolve and rectify the attention matrix.

    One (unshared) kernel per repeat; zero-padded so shape is preserved.
    ``mode='columns'`` slides along the sender axis instead.
    """
    if repeats is None:
        repeats = len(kernels)
    if repeats < 1:
        raise ContractError(f"repeats must be at least 1, got {repeats}")
    if repeats != len(kernels):
        raise ContractError(f"{repeats} repeats need {repeats} kernels, got {len(kernels)}")
    if mode not in ("rows", "columns"):
        raise ContractError(f"mode must be 'rows' or 'columns', got {mode!r}")
    out = attention
    if out.values.ndim != 2:
        raise ShapeError(f"attention must be 2-D, got {out.shape}")
    n = out.shape[1] if mode == "rows" else out.shape[0]
    for kernel in kernels:
        if kernel.values.size > 2 * n:
            warnings.warn(
                f"convolution kernel of size {kernel.values.size} is wider than any "
                f"padded row of length {n}",
                stacklevel=2,
            )
    if mode == "columns":
        out = nm.transpose(out)
    for kernel in kernels:
        out = nm.relu(nm.conv1d_same(out, kernel))
    if mode == "columns":
        out = nm.transpose(out)
    return out


def fuse_interaction(ci_expanded: Tensor, h: Tensor) -> Tensor:
    """Entrywise fusion of category interaction and neighborhood features."""
    if tuple(ci_expanded.shape) != tuple(h.shape):
        raise ShapeError(f"shape mismatch: {ci_expanded.shape} vs {h.shape}")
    return nm.mul(ci_expanded, h)
