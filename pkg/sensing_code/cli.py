"""
命令行入口

    python -m sensing_code ruler bose-chowla --q 3
    python -m sensing_code code dmin --ula 19 --n 360
    python -m sensing_code sim sweep-snr --q 19 --snr-min -10 --snr-max 10 --step 1 --out f.csv

退出码：0 成功，1 用法或定义域错误，2 校验失败。
配置文件为 key = value 文本（# 注释），键名与命令行参数同名，命令行参数优先。
"""
import argparse
import contextlib
import csv
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, TextIO

from dotenv import dotenv_values
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, model_validator

from common.config import settings

from .channel import correction_radius
from .codebook import (
    bc_pe_bound,
    grid_angle,
    jordan_ula_lower_beampattern,
    ruler_beampattern,
    ruler_min_distance,
)
from .errors import DomainError, UsageError
from .rulers import (
    Ruler,
    bose_chowla,
    difference_coarray,
    format_ruler,
    infer_q,
    is_golomb,
    parse_ruler,
    ula,
    verify_perfect_difference,
)
from .sim import SweepSpec, snr_grid, sweep_m, sweep_snr, write_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class _Parser(argparse.ArgumentParser):
    """用法错误统一抛出 UsageError，由 main 转换为退出码 1"""

    def error(self, message: str):
        raise UsageError(message)


# ---- 参数模型：命令行与配置文件合并后统一校验，未知键即报错 ----

class _Options(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RulerBoseChowlaOptions(_Options):
    q: int


class RulerUlaOptions(_Options):
    m: int
    n: int


class RulerVerifyOptions(_Options):
    file: Path
    q: Optional[int] = None


class _GeometryOptions(_Options):
    # sweep-snr 的 --q 与 code 的 --bose-chowla 指向同一字段
    bose_chowla: Optional[int] = Field(default=None, validation_alias=AliasChoices("bose_chowla", "q"))
    ula: Optional[int] = None
    n: Optional[int] = None
    file: Optional[Path] = None

    @model_validator(mode="after")
    def _one_geometry(self):
        given = [g for g in (self.bose_chowla, self.ula, self.file) if g is not None]
        if len(given) != 1:
            raise ValueError("必须且只能指定一种几何: --bose-chowla / --ula / --file")
        if self.n is not None and self.ula is None:
            raise ValueError("--n 只能与 --ula 一起使用")
        return self


class CodeOptions(_GeometryOptions):
    out: Optional[Path] = None


class SweepSnrOptions(_GeometryOptions):
    snr_min: float = -10.0
    snr_max: float = 10.0
    step: float = 1.0
    trials: int = Field(default=settings.DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0)
    threads: int = Field(default=settings.DEFAULT_THREADS, ge=0)
    out: Optional[Path] = None
    bound_only: bool = False
    format: Literal["csv", "dat"] = "csv"


class SweepMOptions(_Options):
    family: Literal["bc", "ula"]
    m_min: int = Field(default=2, ge=1)
    m_max: int
    snr: float = 0.0
    trials: int = Field(default=settings.DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0)
    threads: int = Field(default=settings.DEFAULT_THREADS, ge=0)
    out: Optional[Path] = None
    bound_only: bool = False
    format: Literal["csv", "dat"] = "csv"


# ---- 工具函数 ----

def load_config_file(path: Path) -> Dict[str, str]:
    """读取 key = value 配置文件，键名中的 - 与 _ 等价"""
    if not path.is_file():
        raise UsageError(f"配置文件不存在: {path}")
    values = {}
    for key, value in dotenv_values(path, encoding="utf-8").items():
        if value is None:
            raise UsageError(f"配置项 {key} 缺少取值")
        values[key.replace("-", "_")] = value
    logger.debug(f"读取配置文件 {path}: {sorted(values)}")
    return values


def _configure_logging(level: str) -> None:
    if not isinstance(logging.getLevelName(level.upper()), int):
        raise UsageError(f"未知的日志级别: {level}")
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE, encoding="utf-8"))
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers, force=True)


@contextlib.contextmanager
def _output(path: Optional[Path]) -> Iterator[TextIO]:
    """未指定 --out 时写到标准输出"""
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        yield f
    logger.info(f"结果已写入: {path}")


def _read_ruler(path: Path) -> Ruler:
    if not path.is_file():
        raise UsageError(f"标尺文件不存在: {path}")
    try:
        text = path.read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as e:
        raise UsageError(f"标尺文件不是 UTF-8 文本: {path}") from e
    return parse_ruler(text)


def _geometry(opts: _GeometryOptions) -> Ruler:
    if opts.bose_chowla is not None:
        return bose_chowla(opts.bose_chowla)
    if opts.ula is not None:
        return ula(opts.ula, opts.n if opts.n is not None else opts.ula ** 2 - 1)
    return _read_ruler(opts.file)


def _fmt(v: Optional[float]) -> str:
    return "NA" if v is None else f"{v:.12g}"


# ---- 子命令 ----

def cmd_ruler(action: str, options: Dict[str, Any]) -> int:
    if action == "bose-chowla":
        opts = RulerBoseChowlaOptions.model_validate(options)
        sys.stdout.write(format_ruler(bose_chowla(opts.q)))
        return EXIT_OK
    if action == "ula":
        opts = RulerUlaOptions.model_validate(options)
        sys.stdout.write(format_ruler(ula(opts.m, opts.n)))
        return EXIT_OK

    opts = RulerVerifyOptions.model_validate(options)
    r = _read_ruler(opts.file)
    golomb = is_golomb(r)
    lines = [
        f"M={r.M}",
        f"N={r.modulus}",
        "positions=" + " ".join(str(d) for d in r.positions),
        f"golomb={str(golomb).lower()}",
        f"coarray_size={len(difference_coarray(r))}",
    ]
    ok = golomb

    q = opts.q if opts.q is not None else infer_q(r)
    if q is not None:
        report = verify_perfect_difference(r, q)
        lines += [
            f"q={q}",
            f"perfect_difference={str(report.ok).lower()}",
            f"support_size={report.support_size}",
        ]
        if not report.ok:
            lines.append(f"witness={report.witness}")
            logger.error(f"完美差集校验失败: {report.reason}")
        ok = ok and report.ok
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_code(action: str, options: Dict[str, Any]) -> int:
    opts = CodeOptions.model_validate(options)
    r = _geometry(opts)

    if action == "dmin":
        report = ruler_min_distance(r)
        block = [
            f"M={report.M}",
            f"N={report.N}",
            f"dmin={_fmt(report.dmin)}",
            f"argmin_k={report.argmin_lag}",
            f"argmin_pair={report.argmin_pair[0]},{report.argmin_pair[1]}",
            f"max_offpeak={_fmt(report.max_offpeak_beampattern)}",
            f"welch={_fmt(report.welch_upper)}",
            f"bound={_fmt(report.construction_bound)}",
            f"gap_ratio={_fmt(report.welch_gap_ratio)}",
        ]
        theta = [grid_angle(n, r.modulus) for n in report.argmin_pair]
        block += [
            f"argmin_theta={_fmt(theta[0])},{_fmt(theta[1])}",
            f"correction_radius={_fmt(correction_radius(r.M, report.dmin))}",
        ]
        if r.construction_q is not None:
            # 0 dB（σ = 1）下的闭式错误概率上界
            block.append(f"pe_bound_0db={_fmt(bc_pe_bound(r.M, r.modulus, 1.0))}")
        elif r.label == "ula" and r.M > 3:
            block.append(f"jordan_floor={_fmt(jordan_ula_lower_beampattern(r.M))}")
        with _output(opts.out) as stream:
            stream.write("\n".join(block) + "\n")
        return EXIT_OK

    B = ruler_beampattern(r)
    with _output(opts.out) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["k", "B"])
        for k, b in enumerate(B):
            writer.writerow([k, _fmt(float(b))])
    return EXIT_OK


def cmd_sim(action: str, options: Dict[str, Any]) -> int:
    if action == "sweep-snr":
        opts = SweepSnrOptions.model_validate(options)
        common = dict(
            variable="snr",
            snr_grid=snr_grid(opts.snr_min, opts.snr_max, opts.step),
            trials=opts.trials,
            seed=opts.seed,
            threads=opts.threads,
            bound_only=opts.bound_only,
        )
        if opts.bose_chowla is not None:
            spec = SweepSpec(family="bose-chowla", M=opts.bose_chowla, **common)
        elif opts.ula is not None:
            spec = SweepSpec(family="ula", M=opts.ula, N=opts.n, **common)
        else:
            spec = SweepSpec(family="custom", ruler=_read_ruler(opts.file), **common)
        result = sweep_snr(spec)
    else:
        opts = SweepMOptions.model_validate(options)
        if opts.m_max < opts.m_min:
            raise DomainError(f"--m-max {opts.m_max} 小于 --m-min {opts.m_min}")
        spec = SweepSpec(
            family="bose-chowla" if opts.family == "bc" else "ula",
            variable="m",
            m_values=tuple(range(opts.m_min, opts.m_max + 1)),
            snr_db=opts.snr,
            trials=opts.trials,
            seed=opts.seed,
            threads=opts.threads,
            bound_only=opts.bound_only,
        )
        result = sweep_m(spec)

    with _output(opts.out) as stream:
        write_sweep(result, stream, opts.format)
    return EXIT_OK


# ---- 参数解析 ----

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="key = value 配置文件")
    common.add_argument("--log-level", help="日志级别，覆盖 LOG_LEVEL")

    parser = _Parser(prog="sensing_code", description="感知子空间码构造、评估与仿真工具")
    commands = parser.add_subparsers(dest="command", required=True)

    def leaf(group, name: str, help_text: str) -> argparse.ArgumentParser:
        return group.add_parser(name, help=help_text, parents=[common], argument_default=argparse.SUPPRESS)

    def geometry(p: argparse.ArgumentParser, bc_flag: str) -> None:
        p.add_argument(bc_flag, dest="bose_chowla", metavar="Q", help="Bose-Chowla 标尺 (q 为素数幂)")
        p.add_argument("--ula", metavar="M", help="M 阵元均匀线阵")
        p.add_argument("--n", help="ULA 网格大小，默认 M^2-1")
        p.add_argument("--file", type=Path, help="自定义标尺文件")

    ruler = commands.add_parser("ruler", help="构造与校验阵列几何")
    ruler_actions = ruler.add_subparsers(dest="action", required=True)
    p = leaf(ruler_actions, "bose-chowla", "Bose-Chowla Golomb 标尺")
    p.add_argument("--q", required=True)
    p = leaf(ruler_actions, "ula", "均匀线阵")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)
    p = leaf(ruler_actions, "verify", "校验标尺文件")
    p.add_argument("--file", type=Path, required=True)
    p.add_argument("--q")
    ruler.set_defaults(handler=cmd_ruler)

    code = commands.add_parser("code", help="码本距离与波束方向图")
    code_actions = code.add_subparsers(dest="action", required=True)
    for name, help_text in (("dmin", "最小距离报告"), ("beampattern", "波束方向图 k,B")):
        p = leaf(code_actions, name, help_text)
        geometry(p, "--bose-chowla")
        p.add_argument("--out", type=Path)
    code.set_defaults(handler=cmd_code)

    sim = commands.add_parser("sim", help="蒙特卡洛仿真与参数扫描")
    sim_actions = sim.add_subparsers(dest="action", required=True)
    p = leaf(sim_actions, "sweep-snr", "固定阵列扫描 SNR")
    geometry(p, "--q")
    p.add_argument("--snr-min")
    p.add_argument("--snr-max")
    p.add_argument("--step")
    p = leaf(sim_actions, "sweep-m", "N = M^2-1 下扫描 M")
    p.add_argument("--family", required=True)
    p.add_argument("--m-min")
    p.add_argument("--m-max", required=True)
    p.add_argument("--snr")
    for p in (sim_actions.choices["sweep-snr"], sim_actions.choices["sweep-m"]):
        p.add_argument("--trials")
        p.add_argument("--seed")
        p.add_argument("--threads", help="并行线程上限，不影响结果")
        p.add_argument("--out", type=Path)
        p.add_argument("--bound-only", action="store_true", help="跳过蒙特卡洛，只输出 dmin 与上界")
        p.add_argument("--format", help="csv 或 dat")
    sim.set_defaults(handler=cmd_sim)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        _configure_logging(settings.LOG_LEVEL)
        args = build_parser().parse_args(argv)
        options = {k: v for k, v in vars(args).items() if k not in ("command", "action", "handler")}

        merged: Dict[str, Any] = {}
        config_path = options.pop("config", None)
        if config_path is not None:
            merged.update(load_config_file(config_path))
        merged.update(options)
        _configure_logging(merged.pop("log_level", settings.LOG_LEVEL))

        return args.handler(args.action, merged)
    except UsageError as e:
        logger.error(f"用法错误: {e}")
        return EXIT_USAGE
    except ValidationError as e:
        logger.error(f"参数校验失败: {e}")
        return EXIT_USAGE
    except DomainError as e:
        logger.error(f"定义域错误: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"文件读写失败: {e}", exc_info=True)
        return EXIT_USAGE
