"""Hierarchical graph attention.

Two levels of interaction weights are derived from a scenario's graph:

* category level - per-category embeddings from padded member features,
  directed per-pair score vectors, max-pooled importance scalars, and a
  softmax over all ordered pairs;
* agent level - an inverse-distance kernel, its degree-normalized form,
  and the entrywise product with category-derived weights, which yields a
  generally asymmetric agent-to-agent attention matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numerics as nm
from .errors import ContractError, ShapeError
from .numerics import Tensor
from .trajdata import STCGraph

LEAKY_SLOPE = 0.2


@dataclass
class CategoryEmbeddings:
    """Embeddings of the categories present at one time step.

    ``categories`` lists the (ascending) category ids that have members;
    row ``i`` of ``vectors`` embeds ``categories[i]``.
    """

    categories: tuple[int, ...]
    vectors: Tensor  # (C_t, d_e)


def member_features(graph: STCGraph, t: int) -> dict[int, np.ndarray]:
    """Per-category member feature rows at step t: (x, y) relative to the
    centroid of the agents present at that step, members ascending by id."""
    nodes = graph.agent_nodes[t]
    if not nodes:
        raise ContractError(f"no agents present at step {t}")
    centroid = np.mean([n.position for n in nodes], axis=0)
    features: dict[int, np.ndarray] = {}
    for category, members in graph.members_at(t).items():
        by_index = {n.track_index: n for n in nodes}
        rows = np.array([np.asarray(by_index[i].position) - centroid for i in members])
        features[category] = rows
    return features


def embed_categories(graph: STCGraph, t: int, w_embed: Tensor, n_max: int) -> CategoryEmbeddings:
    """Project zero-padded, flattened member features to one vector per
    present category."""
    features = member_features(graph, t)
    if w_embed.values.ndim != 2 or w_embed.shape[0] != n_max * 2:
        raise ShapeError(
            f"projection expects ({n_max * 2}, d_e) for pad size {n_max}, got {w_embed.shape}"
        )
    rows = []
    categories = tuple(sorted(features))
    for category in categories:
        members = features[category]
        if members.shape[0] > n_max:
            raise ShapeError(f"category {category} has {members.shape[0]} members, pad size is {n_max}")
        padded = np.zeros((n_max, 2))
        padded[: members.shape[0]] = members
        rows.append(padded.reshape(1, -1))
    flat = Tensor(np.concatenate(rows, axis=0), _op="member_features")
    return CategoryEmbeddings(categories, nm.matmul(flat, w_embed))


def _pair_selectors(count: int) -> tuple[np.ndarray, np.ndarray]:
    # Row p = c1 * count + c2 selects (c1, c2); includes self-pairs.
    left = np.zeros((count * count, count))
    right = np.zeros((count * count, count))
    for c1 in range(count):
        for c2 in range(count):
            left[c1 * count + c2, c1] = 1.0
            right[c1 * count + c2, c2] = 1.0
    return left, right


def category_attention(embeddings: CategoryEmbeddings, mu) -> Tensor:
    """Directed score vectors for every ordered category pair.

    Row ``c1 * C + c2`` holds the score vector of ``c1`` attending to
    ``c2``: LeakyReLU(mu . (h_c1 || h_c2)). ``mu`` maps the concatenated
    pair (2 d_e) to the score length; pass a list of tensors (one per
    ordered pair over the full category table) for unshared weights.
    """
    count = len(embeddings.categories)
    h = embeddings.vectors
    if h.values.ndim != 2 or h.shape[0] != count:
        raise ShapeError(f"expected ({count}, d_e) embeddings, got {h.shape}")
    left_sel, right_sel = _pair_selectors(count)
    pairs = nm.concat(
        [nm.matmul(Tensor(left_sel), h), nm.matmul(Tensor(right_sel), h)], axis=1
    )
    if isinstance(mu, Tensor):
        if mu.shape[0] != 2 * h.shape[1]:
            raise ShapeError(f"attention weights expect ({2 * h.shape[1]}, d_a), got {mu.shape}")
        scored = nm.matmul(pairs, mu)
    else:
        table = int(round(len(mu) ** 0.5))
        if table * table != len(mu):
            raise ShapeError(f"per-pair weights must form a square table, got {len(mu)}")
        rows = []
        for p, (c1, c2) in enumerate(
            (a, b) for a in embeddings.categories for b in embeddings.categories
        ):
            row = nm.reshape(nm.select(pairs, p, axis=0), (1, pairs.shape[1]))
            rows.append(nm.matmul(row, mu[c1 * table + c2]))
        scored = nm.concat(rows, axis=0)
    return nm.leaky_relu(scored, LEAKY_SLOPE)


def category_importance(scores: Tensor) -> Tensor:
    """Max-pool each score vector to a single importance scalar."""
    if scores.values.ndim == 1:
        return nm.max_reduce(scores, axis=0)
    return nm.max_reduce(scores, axis=1)


def normalize_category_interaction(importance: Tensor, category_count: int) -> Tensor:
    """Softmax the importance scalars over all ordered pairs; returns the
    (C, C) interaction matrix whose entries sum to exactly one."""
    if category_count < 1:
        raise ContractError("category_count must be at least 1")
    flat = nm.reshape(importance, (importance.size,))
    if flat.size != category_count * category_count:
        raise ShapeError(
            f"expected {category_count * category_count} importance scalars, got {flat.size}"
        )
    return nm.reshape(nm.softmax(flat, axis=0), (category_count, category_count))


def distance_kernel(positions: np.ndarray) -> np.ndarray:
    """Symmetric inverse-distance matrix with zero diagonal.

    Coincident agents get weight 0 rather than infinity.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ShapeError(f"positions must be (N, 2), got {positions.shape}")
    delta = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((delta**2).sum(axis=2))
    with np.errstate(divide="ignore"):
        kernel = np.where(dist > 0.0, 1.0 / np.where(dist > 0.0, dist, 1.0), 0.0)
    np.fill_diagonal(kernel, 0.0)
    return kernel


def laplacian_normalize(kernel: np.ndarray) -> np.ndarray:
    """Degree-normalize kernel + I: D^(-1/2) (E + I) D^(-1/2).

    D is the diagonal of row sums of E + I, so it is always invertible and
    every output entry lies in (0, 1] on the diagonal.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ShapeError(f"kernel must be square, got {kernel.shape}")
    if not np.allclose(kernel, kernel.T, atol=1e-12):
        raise ContractError("kernel must be symmetric")
    if kernel.min() < 0:
        raise ContractError("kernel must be nonnegative")
    hat = kernel + np.eye(kernel.shape[0])
    inv_sqrt = 1.0 / np.sqrt(hat.sum(axis=1))
    return inv_sqrt[:, None] * hat * inv_sqrt[None, :]


def _membership_matrix(membership: Sequence, categories: Sequence[int]) -> np.ndarray:
    index = {c: i for i, c in enumerate(categories)}
    rows = np.zeros((len(membership), len(categories)))
    for i, cat in enumerate(membership):
        if cat is None:
            continue  # padded slot: contributes zero rows/columns
        if cat not in index:
            raise ContractError(f"agent {i} has unknown category {cat!r}")
        rows[i, index[cat]] = 1.0
    return rows


def expand_to_agents(matrix, membership: Sequence, categories: Sequence[int] | None = None):
    """Lift a (C, C) category matrix to an (N, N) agent matrix:
    out[i, j] = matrix[cat(i), cat(j)].

    ``membership`` maps each agent slot to its category (``None`` marks a
    padded slot, which gets zero rows and columns). Accepts a plain array
    or a recorded tensor; the tensor path keeps gradients flowing.
    """
    if categories is None:
        size = matrix.shape[0]
        categories = tuple(range(size))
    if isinstance(matrix, Tensor):
        onehot = Tensor(_membership_matrix(membership, categories), _op="membership")
        return nm.matmul(nm.matmul(onehot, matrix), nm.transpose(onehot))
    matrix = np.asarray(matrix, dtype=np.float64)
    onehot = _membership_matrix(membership, categories)
    return onehot @ matrix @ onehot.T


def agent_attention(normalized_kernel: np.ndarray, expanded: Tensor) -> Tensor:
    """Entrywise product of the distance branch and the learned branch."""
    kernel = np.asarray(normalized_kernel, dtype=np.float64)
    target = expanded.shape if isinstance(expanded, Tensor) else np.asarray(expanded).shape
    if kernel.shape != tuple(target):
        raise ShapeError(f"shape mismatch: kernel {kernel.shape} vs attention {tuple(target)}")
    if isinstance(expanded, Tensor):
        return nm.mul(Tensor(kernel, _op="kernel"), expanded)
    return kernel * np.asarray(expanded, dtype=np.float64)
