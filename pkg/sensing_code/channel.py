"""
单源观测模型与最小距离译码器（K = L = 1）

    y = x · c(α_n) + w,  w ~ CN(0, σ^2 I_M)

随机数按 (seed, trial, stream) 派生，各次试验互不共享可变状态，
因此结果与执行顺序、线程数无关。
"""
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .codebook import Codebook
from .errors import DomainError

logger = logging.getLogger(__name__)

# 单位幅度信源 x = (1+j)/√2
DEFAULT_SOURCE = complex(1.0, 1.0) / math.sqrt(2.0)

# 每次试验的两条随机流：真实网格索引、噪声
INDEX_STREAM = 0
NOISE_STREAM = 1


class ChannelConfig(BaseModel):
    """观测模型参数"""
    model_config = ConfigDict(frozen=True)

    source_amplitude: complex = DEFAULT_SOURCE
    sigma: float = Field(ge=0.0)
    seed: int = Field(ge=0, lt=2 ** 64)

    @field_validator("source_amplitude")
    @classmethod
    def _unit_modulus(cls, v: complex) -> complex:
        if abs(abs(v) - 1.0) > 1e-9:
            raise ValueError(f"信源幅度必须为单位模，实际 |x|={abs(v)}")
        return v


class Observation(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y: np.ndarray
    true_index: Optional[int] = None


def snr_to_sigma(snr_db: float) -> float:
    """SNR := -20 log10(σ)"""
    return 10.0 ** (-snr_db / 20.0)


def trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, stream)))


def draw_index(N: int, seed: int, trial: int) -> int:
    """从网格点中均匀抽取真实索引 n ∈ [1, N]"""
    return int(trial_rng(seed, trial, INDEX_STREAM).integers(1, N + 1))


def synthesize(cb: Codebook, n: int, cfg: ChannelConfig, trial: int) -> Observation:
    if not 1 <= n <= cb.N:
        raise DomainError(f"网格索引 {n} 超出范围 [1, {cb.N}]")
    if trial < 0:
        raise DomainError(f"试验编号必须非负，实际为 {trial}")

    y = cfg.source_amplitude * cb.vectors[n - 1]
    if cfg.sigma > 0:
        g = trial_rng(cfg.seed, trial, NOISE_STREAM).standard_normal((2, cb.M))
        y = y + (g[0] + 1j * g[1]) * (cfg.sigma / math.sqrt(2.0))
    return Observation(y=y, true_index=n)


def _check_length(cb: Codebook, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    if y.shape[-1] != cb.M:
        raise DomainError(f"观测长度 {y.shape[-1]} 与阵元数 M={cb.M} 不符")
    return y


def matched_filter_scores(cb: Codebook, y: np.ndarray) -> np.ndarray:
    """scores[n-1] = |y^H c(α_n)|"""
    y = _check_length(cb, y)
    return np.abs(cb.vectors @ np.conj(y))


def decode(cb: Codebook, y: np.ndarray) -> int:
    """最小距离译码：返回使 |y^H c(α_n)| 最大的网格索引，并列时取最小索引"""
    return int(np.argmax(matched_filter_scores(cb, y))) + 1


def decode_batch(cb: Codebook, Y: np.ndarray) -> np.ndarray:
    """对按行堆叠的观测逐行译码，规则与 decode 相同"""
    Y = _check_length(cb, Y)
    scores = np.abs(np.conj(Y) @ cb.vectors.T)
    return np.argmax(scores, axis=1) + 1


def correction_radius(M: int, dmin: float) -> float:
    """噪声投影幅度低于该半径时译码必然正确"""
    return 0.5 * (M - M * math.sqrt(1.0 - dmin))


def guaranteed_correct(cb: Codebook, w: np.ndarray, dmin: float) -> bool:
    return bool(matched_filter_scores(cb, w).max() < correction_radius(cb.M, dmin))
