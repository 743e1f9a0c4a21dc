"""
有限域 GF(p^n) 精确运算
- 素性判定与分解（sympy）
- 规范首一不可约多项式与规范本原元的选取
- 子域成员判定（Frobenius 不动点），供 Bose-Chowla 构造使用

域元素的系数按“常数项在前”的顺序存放；
sympy.polys.galoistools 使用“最高次在前”的稠密表示，只在边界处转换。
"""
import logging
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from sympy import factorint, isprime
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_add, gf_irreducible_p, gf_mul, gf_pow_mod, gf_rem, gf_strip, gf_sub

from .errors import DomainError

logger = logging.getLogger(__name__)

# q^2 - 1 必须落在 64 位精确整数范围内
MAX_EXACT_INT = 2 ** 63 - 1


def is_prime(u: int) -> bool:
    return u >= 2 and bool(isprime(u))


def factorize(u: int) -> Dict[int, int]:
    """
    分解为 {素因子: 重数}

    Raises:
        DomainError: u < 2
    """
    if u < 2:
        raise DomainError(f"无法分解 {u}，要求 u >= 2")
    return {int(r): int(k) for r, k in factorint(u).items()}


class PrimePower(BaseModel):
    """素数幂 q = p^n"""
    model_config = ConfigDict(frozen=True)

    p: int
    n: int
    q: int

    @model_validator(mode="after")
    def _check(self) -> "PrimePower":
        if not is_prime(self.p):
            raise ValueError(f"{self.p} 不是素数")
        if self.n < 1:
            raise ValueError(f"指数必须 >= 1，实际为 {self.n}")
        if self.p ** self.n != self.q:
            raise ValueError(f"{self.p}^{self.n} != {self.q}")
        if self.q * self.q - 1 > MAX_EXACT_INT:
            raise ValueError(f"q^2 - 1 超出 64 位精确整数范围 (q={self.q})")
        return self


def as_prime_power(q: int) -> PrimePower:
    """把整数 q 分解为素数幂 p^n，不是素数幂时抛出 DomainError"""
    if q < 2:
        raise DomainError(f"{q} 不是素数幂")
    if q * q - 1 > MAX_EXACT_INT:
        raise DomainError(f"q^2 - 1 超出 64 位精确整数范围 (q={q})")
    factors = factorize(q)
    if len(factors) != 1:
        raise DomainError(f"{q} 不是素数幂")
    (p, n), = factors.items()
    return PrimePower(p=p, n=n, q=q)


def is_prime_power(q: int) -> bool:
    try:
        as_prime_power(q)
    except DomainError:
        return False
    return True


# ---- 与 galoistools 稠密表示之间的转换 ----

def _to_gf(coeffs: Sequence[int]) -> List:
    return gf_strip([ZZ(c) for c in reversed(coeffs)])


def _from_gf(poly: Sequence, degree: int) -> Tuple[int, ...]:
    low_first = [int(c) for c in reversed(poly)]
    return tuple(low_first) + (0,) * (degree - len(low_first))


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """首一多项式 f（常数项在前）在 GF(p) 上是否不可约"""
    g = _to_gf([c % p for c in f])
    if len(g) < 2:
        return False
    return bool(gf_irreducible_p(g, p, ZZ))


@lru_cache(maxsize=None)
def _canonical_modulus(p: int, degree: int) -> Tuple[int, ...]:
    # 首一多项式按低次系数的 p 进制值递增扫描，即规范顺序
    for v in range(p ** degree):
        coeffs = []
        for _ in range(degree):
            v, c = divmod(v, p)
            coeffs.append(c)
        f = tuple(coeffs) + (1,)
        if is_irreducible(f, p):
            return f
    raise AssertionError(f"GF({p}) 上不存在 {degree} 次不可约多项式")

class FieldElement(BaseModel):
    """域元素：长度等于扩张次数的系数元组"""
    model_config = ConfigDict(frozen=True)

    coeffs: Tuple[int, ...]

    @field_validator("coeffs")
    @classmethod
    def _non_negative(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(c < 0 for c in v):
            raise ValueError("系数必须非负")
        return v


class FieldCtx(BaseModel):
    """有限域 GF(p^degree)，modulus 为规范首一不可约多项式"""
    model_config = ConfigDict(frozen=True)

    p: int
    degree: int
    modulus: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_modulus(self) -> "FieldCtx":
        if not is_prime(self.p):
            raise ValueError(f"特征 {self.p} 不是素数")
        if self.degree < 1:
            raise ValueError("扩张次数必须 >= 1")
        if len(self.modulus) != self.degree + 1 or self.modulus[-1] != 1:
            raise ValueError("模多项式必须是首一的且次数等于扩张次数")
        if self.modulus != _canonical_modulus(self.p, self.degree):
            raise ValueError("模多项式不是规范不可约多项式")
        return self

    @property
    def order(self) -> int:
        return self.p ** self.degree

    def element(self, coeffs: Sequence[int]) -> FieldElement:
        """由系数构造元素，不足的高次项补零"""
        if len(coeffs) > self.degree:
            raise DomainError(f"系数个数 {len(coeffs)} 超过扩张次数 {self.degree}")
        padded = tuple(c % self.p for c in coeffs) + (0,) * (self.degree - len(coeffs))
        return FieldElement(coeffs=padded)

    def zero(self) -> FieldElement:
        return FieldElement.model_construct(coeffs=(0,) * self.degree)

    def one(self) -> FieldElement:
        return FieldElement.model_construct(coeffs=(1,) + (0,) * (self.degree - 1))


@lru_cache(maxsize=None)
def find_irreducible(p: int, degree: int) -> FieldCtx:
    """返回 GF(p) 上给定次数的规范首一不可约多项式所定义的域"""
    if not is_prime(p):
        raise DomainError(f"{p} 不是素数")
    if degree < 1:
        raise DomainError(f"次数必须 >= 1，实际为 {degree}")
    ctx = FieldCtx(p=p, degree=degree, modulus=_canonical_modulus(p, degree))
    logger.debug(f"GF({p}^{degree}) 模多项式: {ctx.modulus}")
    return ctx


def _check(ctx: FieldCtx, *elements: FieldElement) -> None:
    for a in elements:
        if len(a.coeffs) != ctx.degree or any(c >= ctx.p for c in a.coeffs):
            raise DomainError(f"元素 {a.coeffs} 不属于 GF({ctx.p}^{ctx.degree})")


def element_to_int(ctx: FieldCtx, a: FieldElement) -> int:
    """规范编码：系数作为 p 进制数字，常数项为最低位"""
    _check(ctx, a)
    v = 0
    for c in reversed(a.coeffs):
        v = v * ctx.p + c
    return v


def element_from_int(ctx: FieldCtx, v: int) -> FieldElement:
    if not 0 <= v < ctx.order:
        raise DomainError(f"编码 {v} 超出 GF({ctx.order}) 的范围")
    coeffs = []
    for _ in range(ctx.degree):
        v, c = divmod(v, ctx.p)
        coeffs.append(c)
    return FieldElement.model_construct(coeffs=tuple(coeffs))


def _modulus_gf(ctx: FieldCtx) -> List:
    return _to_gf(ctx.modulus)


def field_add(ctx: FieldCtx, a: FieldElement, b: FieldElement) -> FieldElement:
    _check(ctx, a, b)
    s = gf_add(_to_gf(a.coeffs), _to_gf(b.coeffs), ctx.p, ZZ)
    return FieldElement.model_construct(coeffs=_from_gf(s, ctx.degree))


def field_sub(ctx: FieldCtx, a: FieldElement, b: FieldElement) -> FieldElement:
    _check(ctx, a, b)
    s = gf_sub(_to_gf(a.coeffs), _to_gf(b.coeffs), ctx.p, ZZ)
    return FieldElement.model_construct(coeffs=_from_gf(s, ctx.degree))


def field_mul(ctx: FieldCtx, a: FieldElement, b: FieldElement) -> FieldElement:
    _check(ctx, a, b)
    prod = gf_mul(_to_gf(a.coeffs), _to_gf(b.coeffs), ctx.p, ZZ)
    r = gf_rem(prod, _modulus_gf(ctx), ctx.p, ZZ)
    return FieldElement.model_construct(coeffs=_from_gf(r, ctx.degree))


def field_pow(ctx: FieldCtx, a: FieldElement, e: int) -> FieldElement:
    """约定 0^0 = 1"""
    _check(ctx, a)
    if e < 0:
        raise DomainError(f"指数必须非负，实际为 {e}")
    r = gf_pow_mod(_to_gf(a.coeffs), e, _modulus_gf(ctx), ctx.p, ZZ)
    return FieldElement.model_construct(coeffs=_from_gf(r, ctx.degree))


def is_primitive(ctx: FieldCtx, g: FieldElement) -> bool:
    """g 的乘法阶是否等于 p^degree - 1"""
    _check(ctx, g)
    if g == ctx.zero():
        raise DomainError("零元没有乘法阶")
    order = ctx.order - 1
    one = ctx.one()
    if order == 1:
        return g == one
    return all(field_pow(ctx, g, order // r) != one for r in factorize(order))


@lru_cache(maxsize=None)
def find_primitive(ctx: FieldCtx) -> FieldElement:
    """按规范元素顺序扫描，返回第一个本原元"""
    for v in range(1, ctx.order):
        g = element_from_int(ctx, v)
        if is_primitive(ctx, g):
            logger.debug(f"GF({ctx.order}) 规范本原元: {g.coeffs}")
            return g
    raise AssertionError(f"GF({ctx.order}) 中未找到本原元")


def in_subfield(ctx: FieldCtx, x: FieldElement, q: int) -> bool:
    """
    ctx 表示 GF(q^2) 时，判断 x 是否属于子域 GF(q)

    利用 Frobenius 不动点：x ∈ GF(q) 当且仅当 x^q = x。
    """
    if ctx.degree % 2:
        raise DomainError(f"扩张次数 {ctx.degree} 为奇数，不存在二次子域")
    if ctx.p ** (ctx.degree // 2) != q:
        raise DomainError(f"q={q} 与 GF({ctx.p}^{ctx.degree}) 的二次子域不符")
    return field_pow(ctx, x, q) == x
