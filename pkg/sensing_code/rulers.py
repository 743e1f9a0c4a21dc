"""
阵列几何（标尺）的构造与校验
- Bose-Chowla Golomb 标尺
- 均匀线阵（ULA）
- 用户自定义标尺（文件格式见 parse_ruler）
"""
import logging
import math
import re
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import DomainError, RulerParseError
from .gf import (
    as_prime_power,
    field_mul,
    field_sub,
    find_irreducible,
    find_primitive,
    in_subfield,
    is_prime_power,
)

logger = logging.getLogger(__name__)

LABEL_PATTERN = r"^(bose-chowla\(\d+\)|ula|custom)$"


class Ruler(BaseModel):
    """传感器位置（单位：半波长）及网格模数 N"""
    model_config = ConfigDict(frozen=True)

    positions: Tuple[int, ...]
    modulus: int
    label: str = "custom"

    @field_validator("label")
    @classmethod
    def _check_label(cls, v: str) -> str:
        if not re.match(LABEL_PATTERN, v):
            raise ValueError(f"未知的构造标签: {v}")
        return v

    @field_validator("positions")
    @classmethod
    def _sorted_distinct(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("至少需要一个传感器")
        if len(set(v)) != len(v):
            raise ValueError("传感器位置不能重复")
        return tuple(sorted(v))

    @model_validator(mode="after")
    def _in_range(self) -> "Ruler":
        if self.modulus < 2:
            raise ValueError(f"网格模数 N 必须 >= 2，实际为 {self.modulus}")
        if self.positions[0] < 0 or self.positions[-1] > self.modulus - 1:
            raise ValueError(f"传感器位置必须位于 [0, {self.modulus - 1}]")
        return self

    @property
    def M(self) -> int:
        return len(self.positions)

    @property
    def construction_q(self) -> Optional[int]:
        """Bose-Chowla 标尺对应的 q，其余构造返回 None"""
        m = re.match(r"^bose-chowla\((\d+)\)$", self.label)
        return int(m.group(1)) if m else None


class DifferenceMultiset(BaseModel):
    """(d_i - d_l) mod N（i != l）的重数表"""
    model_config = ConfigDict(frozen=True)

    modulus: int
    counts: Dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def support(self) -> List[int]:
        return sorted(r for r, c in self.counts.items() if c)


class PerfectDifferenceReport(BaseModel):
    """完美差集校验结果，失败时给出第一个出错的余数"""
    ok: bool
    q: int
    support_size: int
    witness: Optional[int] = None
    reason: str = ""


def bose_chowla(q: int) -> Ruler:
    """
    Bose-Chowla 构造：S = {i ∈ [q^2-2] : g^i - g ∈ GF(q)}，N = q^2 - 1

    g 取 GF(q^2) 的规范本原元，逐次累乘得到 g^i。
    """
    pp = as_prime_power(q)
    ctx = find_irreducible(pp.p, 2 * pp.n)
    g = find_primitive(ctx)
    n_grid = q * q - 1

    positions = []
    power = g
    for i in range(1, n_grid):
        if in_subfield(ctx, field_sub(ctx, power, g), q):
            positions.append(i)
        power = field_mul(ctx, power, g)

    if len(positions) != q:
        raise AssertionError(f"Bose-Chowla 构造得到 {len(positions)} 个位置，期望 {q} 个")
    logger.info(f"Bose-Chowla 标尺构造完成: q={q}, N={n_grid}, 模多项式={ctx.modulus}, 本原元={g.coeffs}")
    return Ruler(positions=tuple(positions), modulus=n_grid, label=f"bose-chowla({q})")


def ula(M: int, N: int) -> Ruler:
    """均匀线阵：位置 0, 1, ..., M-1"""
    if M < 1:
        raise DomainError(f"阵元数必须 >= 1，实际为 {M}")
    if M > N:
        raise DomainError(f"阵元数 M={M} 超过网格大小 N={N}")
    if N < 2:
        raise DomainError(f"网格大小 N 必须 >= 2，实际为 {N}")
    return Ruler(positions=tuple(range(M)), modulus=N, label="ula")


def difference_multiset(r: Ruler) -> DifferenceMultiset:
    counts: Dict[int, int] = {}
    for i, di in enumerate(r.positions):
        for l, dl in enumerate(r.positions):
            if i != l:
                res = (di - dl) % r.modulus
                counts[res] = counts.get(res, 0) + 1
    return DifferenceMultiset(modulus=r.modulus, counts=counts)


def difference_coarray(r: Ruler) -> List[int]:
    """不取模的差集 A - A（去重后升序）"""
    return sorted({di - dl for di in r.positions for dl in r.positions if di != dl})


def verify_perfect_difference(r: Ruler, q: int) -> PerfectDifferenceReport:
    """
    校验 (A - A) mod (q^2-1) 是否恰好覆盖所有不被 q+1 整除的非零余数各一次
    """
    if r.modulus != q * q - 1:
        raise DomainError(f"网格模数 {r.modulus} 不等于 q^2-1={q * q - 1}")
    counts = difference_multiset(r).counts
    support_size = sum(1 for c in counts.values() if c)

    if counts.get(0, 0):
        return PerfectDifferenceReport(
            ok=False, q=q, support_size=support_size, witness=0,
            reason=f"余数 0 出现 {counts[0]} 次",
        )
    for m in range(1, r.modulus):
        expected = 0 if m % (q + 1) == 0 else 1
        got = counts.get(m, 0)
        if got != expected:
            return PerfectDifferenceReport(
                ok=False, q=q, support_size=support_size, witness=m,
                reason=f"余数 {m} 出现 {got} 次，期望 {expected} 次",
            )
    return PerfectDifferenceReport(ok=True, q=q, support_size=support_size)


def is_golomb(r: Ruler) -> bool:
    """所有无序差（不取模）互不相同"""
    seen = set()
    for i, di in enumerate(r.positions):
        for dl in r.positions[i + 1:]:
            diff = dl - di
            if diff in seen:
                return False
            seen.add(diff)
    return True


def parse_ruler(text: str) -> Ruler:
    """
    解析标尺文件（UTF-8 文本）:
        第 1 行: N=<整数>
        第 2 行: 空白分隔的升序整数
    以 # 开头的行被忽略。
    """
    content = [
        (lineno, line.strip())
        for lineno, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if len(content) < 2:
        lineno = content[-1][0] + 1 if content else 1
        raise RulerParseError(lineno, "缺少 N=<整数> 行或位置行")

    lineno, header = content[0]
    m = re.fullmatch(r"N\s*=\s*(\d+)", header)
    if not m:
        raise RulerParseError(lineno, f"期望 N=<整数>，实际为 {header!r}")
    n_grid = int(m.group(1))
    if n_grid < 2:
        raise RulerParseError(lineno, f"N 必须 >= 2，实际为 {n_grid}")

    lineno, body = content[1]
    positions: List[int] = []
    for token in body.split():
        if not re.fullmatch(r"\d+", token):
            raise RulerParseError(lineno, f"无法解析的位置 {token!r}")
        d = int(token)
        if d in positions:
            raise RulerParseError(lineno, f"位置 {d} 重复")
        if d >= n_grid:
            raise RulerParseError(lineno, f"位置 {d} 超出范围 [0, {n_grid - 1}]")
        if positions and d < positions[-1]:
            raise RulerParseError(lineno, f"位置必须升序排列，{d} 位于 {positions[-1]} 之后")
        positions.append(d)

    if len(content) > 2:
        raise RulerParseError(content[2][0], "位置行之后存在多余内容")
    return Ruler(positions=tuple(positions), modulus=n_grid, label="custom")


def format_ruler(r: Ruler) -> str:
    return f"# {r.label}\nN={r.modulus}\n{' '.join(str(d) for d in r.positions)}\n"


def infer_q(r: Ruler) -> Optional[int]:
    """N = q^2 - 1 且 q 为素数幂时返回 q，否则返回 None"""
    q = math.isqrt(r.modulus + 1)
    if q * q != r.modulus + 1 or not is_prime_power(q):
        return None
    return q
