"""随机信道采样，用于在已证明范围之外探索乘性"""

from typing import List

import numpy as np

from app.channels.choi import require_valid
from app.channels.schema import DepolarizingForm, KrausForm, QuantumChannel
from app.linalg.sampling import random_isometry, stream_rng

from .config import SearchConfig

SEARCH_STREAM = 201


def random_kraus_channel(d: int, rank: int, rng: np.random.Generator) -> KrausForm:
    """Haar 等距 V (d·rank × d) 按行切成 rank 块：Σ A_k†A_k = V†V = I"""
    isometry = random_isometry(d * rank, d, rng)
    blocks = [isometry[k * d : (k + 1) * d, :] for k in range(rank)]
    return KrausForm(kraus_ops=blocks, label="random")


def random_depolarizing_channel(d: int, rng: np.random.Generator) -> DepolarizingForm:
    # q 取开区间 (0, 1)，避开端点
    q = float(rng.uniform(0.05, 0.95))
    return DepolarizingForm(d=d, q=round(q, 6))


def sample_factors(config: SearchConfig, seed: int, index: int) -> List[QuantumChannel]:
    rng = stream_rng(seed, SEARCH_STREAM, index)
    factors: List[QuantumChannel]
    if config.family == "depolarizing":
        factors = [random_depolarizing_channel(config.dim, rng) for _ in range(config.factors)]
    else:
        factors = [random_kraus_channel(config.dim, config.rank, rng) for _ in range(config.factors)]
    return [require_valid(f) for f in factors]
