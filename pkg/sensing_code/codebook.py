"""
一维感知子空间码
由标尺生成 N 个码字（C^M 中的直线），计算子空间距离、波束方向图、最小距离及各项解析界。

网格约定：sinθ_n = -1 + 2(n-1)/N，α_n = exp(jπ sinθ_n) = -exp(j2π(n-1)/N)，
网格索引 n 从 1 开始计数。任意两点的比值 α_n* α_n' 都是 N 次单位根，
因此所有距离只依赖于滞后 k = (n' - n) mod N。
"""
import cmath
import logging
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .errors import DomainError
from .rulers import Ruler

logger = logging.getLogger(__name__)

# 按滞后分块计算方向图，限制中间矩阵的内存占用
_LAG_CHUNK = 4096


class Codebook(BaseModel):
    """感知子空间码：vectors[n-1] = (α_n^{d_1}, ..., α_n^{d_M})，未归一化（范数 √M）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ruler: Ruler
    alphas: np.ndarray
    vectors: np.ndarray

    @property
    def N(self) -> int:
        return self.ruler.modulus

    @property
    def M(self) -> int:
        return self.ruler.M


class DistanceReport(BaseModel):
    """最小距离报告"""
    M: int
    N: int
    dmin: float
    argmin_pair: Tuple[int, int]
    argmin_lag: int
    max_offpeak_beampattern: float
    welch_upper: Optional[float] = None
    construction_bound: Optional[float] = None
    welch_gap_ratio: Optional[float] = None


def _check_index(n: int, N: int) -> None:
    if not 1 <= n <= N:
        raise DomainError(f"网格索引 {n} 超出范围 [1, {N}]")


def grid_alpha(n: int, N: int) -> complex:
    _check_index(n, N)
    return -cmath.exp(2j * math.pi * (n - 1) / N)


def grid_angle(n: int, N: int) -> float:
    """网格索引对应的到达角 θ_n（弧度）"""
    _check_index(n, N)
    return math.asin(-1.0 + 2.0 * (n - 1) / N)


def build_codebook(r: Ruler) -> Codebook:
    N = r.modulus
    idx = np.arange(N, dtype=np.int64)
    d = np.asarray(r.positions, dtype=np.int64)

    # α_n^d = (-1)^d · exp(j2π (n-1) d / N)，相位先做整数取模以保证精度
    phase = np.outer(idx, d) % N
    sign = np.where(d % 2 == 0, 1.0, -1.0)
    vectors = sign * np.exp(2j * np.pi * phase / N)
    alphas = -np.exp(2j * np.pi * idx / N)

    vectors.setflags(write=False)
    alphas.setflags(write=False)
    logger.debug(f"码本构造完成: {r.label}, M={r.M}, N={N}")
    return Codebook(ruler=r, alphas=alphas, vectors=vectors)


def _lag_sums(positions: Tuple[int, ...], N: int, lags: np.ndarray) -> np.ndarray:
    """S[k] = Σ_m ω^{k d_m}，ω = exp(j2π/N)"""
    d = np.asarray(positions, dtype=np.int64)
    out = np.empty(len(lags), dtype=np.complex128)
    for start in range(0, len(lags), _LAG_CHUNK):
        k = lags[start:start + _LAG_CHUNK]
        phase = np.outer(k, d) % N
        out[start:start + _LAG_CHUNK] = np.exp(2j * np.pi * phase / N).sum(axis=1)
    return out


def ruler_beampattern(r: Ruler) -> np.ndarray:
    """不构造码本，直接由标尺计算 B[k]，k = 0..N-1"""
    sums = _lag_sums(r.positions, r.modulus, np.arange(r.modulus, dtype=np.int64))
    return np.abs(sums) ** 2


def beampattern(cb: Codebook) -> np.ndarray:
    return ruler_beampattern(cb.ruler)


def subspace_distance(cb: Codebook, n1: int, n2: int) -> float:
    """d(c(α_n1), c(α_n2)) = 1 - |Σ_m (α_n1* α_n2)^{d_m}|^2 / M^2"""
    _check_index(n1, cb.N)
    _check_index(n2, cb.N)
    lag = np.array([(n2 - n1) % cb.N], dtype=np.int64)
    s = _lag_sums(cb.ruler.positions, cb.N, lag)[0]
    return float(min(1.0, max(0.0, 1.0 - abs(s) ** 2 / cb.M ** 2)))


def principal_angle_distance_oracle(u: np.ndarray, v: np.ndarray) -> float:
    """
    两条直线之间的子空间距离 sin^2 β（r=1 的主角度公式），直接由原始向量计算
    """
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    nu = np.vdot(u, u).real
    nv = np.vdot(v, v).real
    if nu == 0 or nv == 0:
        raise DomainError("零向量不张成直线")
    cos2 = abs(np.vdot(v, u)) ** 2 / (nu * nv)
    return float(min(1.0, max(0.0, 1.0 - cos2)))


def bc_distance_bound(M: int) -> float:
    """Bose-Chowla 码的最小距离下界 1 - 2/M"""
    if M < 1:
        raise DomainError(f"阵元数必须 >= 1，实际为 {M}")
    return 1.0 - 2.0 / M


def ula_distance_bound() -> float:
    """ULA 码最小距离的上界 1 - 4/π^2（M > 3，N = M^2 - 1）"""
    return 1.0 - 4.0 / math.pi ** 2


def jordan_ula_lower_beampattern(M: int) -> float:
    # Jordan 不等式给出的 ULA 最大旁瓣下限
    return 4.0 * M * M / math.pi ** 2


def ula_closed_form_distance(M: int, N: int) -> float:
    """ULA 在滞后 1 处的距离（Dirichlet 核闭式）"""
    if M < 1 or N < 2:
        raise DomainError(f"无效的参数 M={M}, N={N}")
    peak = (math.sin(math.pi * M / N) / math.sin(math.pi / N)) ** 2
    return 1.0 - peak / M ** 2


def welch_upper_bound(N: int, M: int) -> float:
    """N 个 C^M 单位向量所能达到的最小距离上界（Welch 界）"""
    if M < 1 or N <= M:
        raise DomainError(f"Welch 界要求 N > M >= 1，实际 N={N}, M={M}")
    return 1.0 - (N - M) / (M * (N - 1))


def pe_upper_bound(M: int, N: int, sigma: float, dmin: float) -> float:
    """最小距离译码器错误概率上界，与平凡界 1 取最小"""
    if sigma < 0:
        raise DomainError(f"噪声标准差必须非负，实际为 {sigma}")
    if not 0.0 <= dmin <= 1.0:
        raise DomainError(f"最小距离必须位于 [0, 1]，实际为 {dmin}")
    if sigma == 0:
        return 0.0 if dmin > 0 else 1.0
    gap = 1.0 - math.sqrt(1.0 - dmin)
    exponent = -(M / (4.0 * sigma ** 2)) * gap ** 2 + math.log(N)
    return min(1.0, math.exp(exponent))


def bc_pe_bound(M: int, N: int, sigma: float) -> float:
    """Bose-Chowla 码的闭式错误概率上界（以 1 - 2/M 代替 d_min）"""
    if M < 1:
        raise DomainError(f"阵元数必须 >= 1，实际为 {M}")
    if sigma <= 0:
        raise DomainError(f"噪声标准差必须为正，实际为 {sigma}")
    gap = max(0.0, 1.0 - math.sqrt(2.0 / M))
    return min(1.0, math.exp(-(M / (4.0 * sigma ** 2)) * gap ** 2 + math.log(N)))


def construction_bound(r: Ruler) -> Optional[float]:
    if r.construction_q is not None:
        return bc_distance_bound(r.M)
    if r.label == "ula":
        return ula_distance_bound()
    return None


def ruler_min_distance(r: Ruler) -> DistanceReport:
    """由方向图全扫描得到精确最小距离"""
    M, N = r.M, r.modulus
    B = ruler_beampattern(r)
    off = B[1:]
    peak = float(off.max())
    # B[k] 与 B[N-k] 数学上相等，容差内取最小滞后
    lag = int(np.flatnonzero(off >= peak - 1e-9 * M * M)[0]) + 1
    dmin = max(0.0, 1.0 - peak / M ** 2)

    welch = welch_upper_bound(N, M) if N > M else None
    gap_ratio = (1.0 - dmin) / (1.0 - welch) if welch is not None else None
    report = DistanceReport(
        M=M,
        N=N,
        dmin=dmin,
        argmin_pair=(1, 1 + lag),
        argmin_lag=lag,
        max_offpeak_beampattern=peak,
        welch_upper=welch,
        construction_bound=construction_bound(r),
        welch_gap_ratio=gap_ratio,
    )
    logger.debug(f"{r.label}: M={M}, N={N}, dmin={dmin:.6g}, 最大旁瓣滞后 k={lag}")
    return report


def min_distance(cb: Codebook) -> DistanceReport:
    return ruler_min_distance(cb.ruler)
