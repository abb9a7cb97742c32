"""Parameter accounting and matched-pair search.

A tied model reuses one kernel/bias pair for every hidden layer, so its
parameter count is independent of depth; an untied model pays for each
layer. ``match_pairs`` exhaustively enumerates (untied M, tied M) pairs
whose totals agree within a tolerance, which is what lets depth- and
width-controlled comparisons hold the budget fixed.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass

import numpy as np

from .model import ArchConfig


def param_count(config: ArchConfig) -> int:
    """Total independent weights and biases of a model.

    first kernels + hidden kernels (one layer's worth when tied) +
    per-map biases + classifier weights and biases. With the default
    extents this is
        8*8*3*M + 3*3*M^2*L_eff + M*(L_eff+1) + 64*M*K + K
    where L_eff is the layer count for untied models and 1 for tied.
    """
    l_eff = 1 if config.tied else config.layers
    m = config.feature_maps
    first = config.first_kernel * config.first_kernel * config.input_channels * m
    hidden = config.hidden_kernel * config.hidden_kernel * m * m * l_eff
    biases = m * (l_eff + 1)
    pooled = (config.input_h // config.pool) * (config.input_w // config.pool)
    classifier = pooled * m * config.classes + config.classes
    return first + hidden + biases + classifier


@dataclass(frozen=True)
class ModelPair:
    """A tied and an untied architecture with equal depth and nearly equal
    parameter totals."""

    layers: int
    m_untied: int
    m_tied: int
    p_untied: int
    p_tied: int
    rel_diff: float


def match_pairs(layers: int, m_range: tuple[int, int],
                tolerance: float) -> list[ModelPair]:
    """All (untied M, tied M) pairs over the inclusive feature-map range
    whose parameter counts differ by at most ``tolerance``.

    The relative difference uses the larger count as denominator
    (symmetric and conservative). Pairs come back sorted by rel_diff,
    then untied M; an empty range yields an empty list.
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be nonnegative, got {tolerance}")
    lo, hi = m_range
    if lo > hi:
        return []
    ms = np.arange(lo, hi + 1)
    p_untied = np.array([
        param_count(ArchConfig(feature_maps=int(m), layers=layers, tied=False))
        for m in ms], dtype=np.int64)
    p_tied = np.array([
        param_count(ArchConfig(feature_maps=int(m), layers=layers, tied=True))
        for m in ms], dtype=np.int64)
    diff = np.abs(p_untied[:, None] - p_tied[None, :])
    denom = np.maximum(p_untied[:, None], p_tied[None, :])
    rel = diff / denom
    iu, it = np.nonzero(rel <= tolerance)
    pairs = [
        ModelPair(
            layers=layers,
            m_untied=int(ms[i]),
            m_tied=int(ms[j]),
            p_untied=int(p_untied[i]),
            p_tied=int(p_tied[j]),
            rel_diff=float(rel[i, j]),
        )
        for i, j in zip(iu, it)
    ]
    pairs.sort(key=lambda p: (p.rel_diff, p.m_untied, p.m_tied))
    return pairs


def pairs_csv(pairs: list[ModelPair]) -> str:
    """Render pairs as CSV with columns
    L, m_untied, m_tied, p_untied, p_tied, rel_diff."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["L", "m_untied", "m_tied", "p_untied", "p_tied", "rel_diff"])
    for p in pairs:
        writer.writerow([p.layers, p.m_untied, p.m_tied,
                         p.p_untied, p.p_tied, repr(p.rel_diff)])
    return buf.getvalue()
