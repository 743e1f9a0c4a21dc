"""
蒙特卡洛错误概率估计与参数扫描
- sweep_snr: 固定阵列，扫描 SNR
- sweep_m:   N = M^2 - 1，扫描阵元数 M
"""
import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, NamedTuple, Optional, TextIO, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.config import settings

from .channel import (
    DEFAULT_SOURCE,
    ChannelConfig,
    decode_batch,
    draw_index,
    snr_to_sigma,
    synthesize,
)
from .codebook import Codebook, build_codebook, pe_upper_bound, ruler_min_distance
from .errors import DomainError
from .gf import is_prime_power
from .rulers import Ruler, bose_chowla, ula

logger = logging.getLogger(__name__)


class SweepSpec(BaseModel):
    """扫描参数"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["bose-chowla", "ula", "custom"]
    variable: Literal["snr", "m"]
    snr_grid: Tuple[float, ...] = ()
    m_values: Tuple[int, ...] = ()
    M: Optional[int] = None
    N: Optional[int] = None
    snr_db: float = 0.0
    ruler: Optional[Ruler] = None
    trials: int = Field(default=settings.DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(default=None, ge=0)
    bound_only: bool = False
    source_amplitude: complex = DEFAULT_SOURCE

    @model_validator(mode="after")
    def _check(self) -> "SweepSpec":
        if self.variable == "snr":
            if not self.snr_grid:
                raise ValueError("SNR 扫描需要非空的 SNR 网格")
            if not all(math.isfinite(s) for s in self.snr_grid):
                raise ValueError("SNR 网格必须为有限值")
            if self.family == "custom" and self.ruler is None:
                raise ValueError("自定义几何需要提供标尺")
            if self.family != "custom" and self.M is None:
                raise ValueError("SNR 扫描需要固定的阵元数 M")
        else:
            if not self.m_values:
                raise ValueError("M 扫描需要非空的 M 网格")
            if self.family == "custom":
                raise ValueError("自定义标尺不支持 M 扫描")
        if not math.isfinite(self.snr_db):
            raise ValueError("SNR 必须为有限值")
        return self


class SweepRow(BaseModel):
    x_value: float
    M: int
    N: int
    dmin: float
    bound: float
    pe: Optional[float] = None
    stderr: Optional[float] = None
    errors: Optional[int] = None
    trials: Optional[int] = None
    pe_upper95: Optional[float] = None


class SweepResult(BaseModel):
    variable: Literal["snr", "m"]
    family: str
    bound_only: bool
    rows: List[SweepRow] = []
    skipped: List[int] = []


class PeEstimate(NamedTuple):
    pe: float
    stderr: float
    errors: int


def snr_grid(snr_min: float, snr_max: float, step: float) -> Tuple[float, ...]:
    """闭区间 [snr_min, snr_max] 上步长为 step 的网格，不累积浮点误差"""
    if step <= 0:
        raise DomainError(f"SNR 步长必须为正，实际为 {step}")
    if snr_max < snr_min:
        raise DomainError(f"SNR 上限 {snr_max} 小于下限 {snr_min}")
    count = int(math.floor((snr_max - snr_min) / step + 1e-9)) + 1
    return tuple(round(snr_min + i * step, 10) for i in range(count))


def resolve_threads(threads: Optional[int]) -> int:
    if threads:
        return threads
    return settings.DEFAULT_THREADS or os.cpu_count() or 1


def _count_errors(cb: Codebook, cfg: ChannelConfig, start: int, stop: int) -> int:
    truth = np.empty(stop - start, dtype=np.int64)
    Y = np.empty((stop - start, cb.M), dtype=np.complex128)
    for i, trial in enumerate(range(start, stop)):
        n = draw_index(cb.N, cfg.seed, trial)
        truth[i] = n
        Y[i] = synthesize(cb, n, cfg, trial).y
    errors = int(np.count_nonzero(decode_batch(cb, Y) != truth))
    logger.debug(f"试验 [{start}, {stop}) 错误数: {errors}")
    return errors


def estimate_pe(
    cb: Codebook,
    snr_db: float,
    trials: int,
    seed: int,
    threads: Optional[int] = None,
    source_amplitude: complex = DEFAULT_SOURCE,
) -> PeEstimate:
    """
    经验错误概率及其二项标准误

    每次试验从网格中均匀抽取真实索引，合成观测并译码。
    试验按固定块划分并行执行，错误数为整数求和，结果与线程数无关。
    """
    if trials < 1:
        raise DomainError(f"试验次数必须 >= 1，实际为 {trials}")
    cfg = ChannelConfig(source_amplitude=source_amplitude, sigma=snr_to_sigma(snr_db), seed=seed)
    chunk = max(1, settings.TRIAL_CHUNK_SIZE)
    bounds = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]

    workers = min(resolve_threads(threads), len(bounds))
    if workers == 1:
        counts = [_count_errors(cb, cfg, s, e) for s, e in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda b: _count_errors(cb, cfg, *b), bounds))

    errors = sum(counts)
    pe = errors / trials
    stderr = math.sqrt(pe * (1.0 - pe) / trials)
    return PeEstimate(pe=pe, stderr=stderr, errors=errors)


def _zero_error_upper95(trials: int) -> float:
    # 零错误时的单侧 95% 上限
    return 1.0 - 0.05 ** (1.0 / trials)


def _row(spec: SweepSpec, x_value: float, r: Ruler, cb: Optional[Codebook], snr_db: float, dmin: float) -> SweepRow:
    bound = pe_upper_bound(r.M, r.modulus, snr_to_sigma(snr_db), dmin)
    if spec.bound_only:
        return SweepRow(x_value=x_value, M=r.M, N=r.modulus, dmin=dmin, bound=bound)

    est = estimate_pe(cb, snr_db, spec.trials, spec.seed, spec.threads, spec.source_amplitude)
    return SweepRow(
        x_value=x_value,
        M=r.M,
        N=r.modulus,
        dmin=dmin,
        bound=bound,
        pe=est.pe,
        stderr=est.stderr,
        errors=est.errors,
        trials=spec.trials,
        pe_upper95=_zero_error_upper95(spec.trials) if est.errors == 0 else None,
    )


def _fixed_ruler(spec: SweepSpec) -> Ruler:
    if spec.family == "custom":
        return spec.ruler
    if spec.family == "bose-chowla":
        if not is_prime_power(spec.M):
            raise DomainError(f"Bose-Chowla 构造要求 M 为素数幂，实际为 {spec.M}")
        if spec.N is not None and spec.N != spec.M ** 2 - 1:
            raise DomainError(f"Bose-Chowla 构造要求 N = M^2 - 1 = {spec.M ** 2 - 1}")
        return bose_chowla(spec.M)
    return ula(spec.M, spec.N if spec.N is not None else spec.M ** 2 - 1)


def sweep_snr(spec: SweepSpec) -> SweepResult:
    if spec.variable != "snr":
        raise DomainError("sweep_snr 需要 variable='snr' 的扫描参数")
    r = _fixed_ruler(spec)
    dmin = ruler_min_distance(r).dmin
    cb = None if spec.bound_only else build_codebook(r)
    logger.info(f"SNR 扫描: {r.label}, M={r.M}, N={r.modulus}, dmin={dmin:.6g}, {len(spec.snr_grid)} 个点")

    result = SweepResult(variable="snr", family=spec.family, bound_only=spec.bound_only)
    for snr in spec.snr_grid:
        row = _row(spec, snr, r, cb, snr, dmin)
        result.rows.append(row)
        if row.pe is None:
            logger.info(f"SNR={snr:g} dB: 上界={row.bound:.4g}")
        else:
            logger.info(f"SNR={snr:g} dB: 错误 {row.errors}/{row.trials}, Pe={row.pe:.4g}, 上界={row.bound:.4g}")
    return result


def sweep_m(spec: SweepSpec) -> SweepResult:
    if spec.variable != "m":
        raise DomainError("sweep_m 需要 variable='m' 的扫描参数")
    result = SweepResult(variable="m", family=spec.family, bound_only=spec.bound_only)

    for M in spec.m_values:
        N = M * M - 1 if spec.N is None or spec.family == "bose-chowla" else spec.N
        if spec.family == "bose-chowla" and not is_prime_power(M):
            result.skipped.append(M)
            continue
        if M < 1 or N < 2 or N < M:
            result.skipped.append(M)
            continue
        r = bose_chowla(M) if spec.family == "bose-chowla" else ula(M, N)
        dmin = ruler_min_distance(r).dmin
        cb = None if spec.bound_only else build_codebook(r)
        row = _row(spec, M, r, cb, spec.snr_db, dmin)
        result.rows.append(row)
        logger.info(f"M={M}, N={N}: dmin={dmin:.6g}, 上界={row.bound:.4g}"
                    + ("" if row.pe is None else f", Pe={row.pe:.4g}"))

    if result.skipped:
        logger.warning(f"以下 M 无法构造 {spec.family} 阵列，已跳过: {result.skipped}")
    return result


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_sweep(result: SweepResult, stream: TextIO, fmt: str = "csv") -> None:
    """
    按固定表头输出扫描结果
        csv: 逗号分隔，\n 换行，浮点数保留 12 位有效数字，尾部以 # 开头的注释行
        dat: 空白分隔的 pgfplots 表格
    """
    x_name = "snr_db" if result.variable == "snr" else "M"
    if fmt == "dat":
        _write_dat(result, stream)
        return
    if fmt != "csv":
        raise DomainError(f"未知的输出格式: {fmt}")

    writer = csv.writer(stream, lineterminator="\n")
    header = [x_name] + (["N"] if result.variable == "m" else []) + ["dmin"]
    header += ["bound"] if result.bound_only else ["pe", "stderr", "bound", "errors", "trials"]
    writer.writerow(header)

    for row in result.rows:
        x = str(row.M) if result.variable == "m" else _fmt(row.x_value)
        cells = [x] + ([str(row.N)] if result.variable == "m" else []) + [_fmt(row.dmin)]
        if result.bound_only:
            cells.append(_fmt(row.bound))
        else:
            cells += [_fmt(row.pe), _fmt(row.stderr), _fmt(row.bound), str(row.errors), str(row.trials)]
        writer.writerow(cells)

    for row in result.rows:
        if row.pe_upper95 is not None:
            x = str(row.M) if result.variable == "m" else _fmt(row.x_value)
            stream.write(f"# pe_upper95 {x_name}={x} {_fmt(row.pe_upper95)}\n")
    if result.skipped:
        stream.write("# skipped " + " ".join(str(m) for m in result.skipped) + "\n")


def _write_dat(result: SweepResult, stream: TextIO) -> None:
    if result.variable == "snr":
        header = ["SNR", "bound", "dmin"] if result.bound_only else ["SNR", "Pe", "bound", "dmin"]
    else:
        header = ["M", "dmin", "bound"] if result.bound_only else ["M", "dmin", "Pe", "bound"]
    stream.write(" ".join(header) + "\n")
    for row in result.rows:
        values = {
            "SNR": _fmt(row.x_value),
            "M": str(row.M),
            "dmin": _fmt(row.dmin),
            "bound": _fmt(row.bound),
            "Pe": _fmt(row.pe) if row.pe is not None else "",
        }
        stream.write(" ".join(values[h] for h in header) + "\n")
