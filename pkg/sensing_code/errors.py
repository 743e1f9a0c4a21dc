"""
异常定义
库代码只负责抛出，由命令行入口统一转换为退出码
"""


class DomainError(ValueError):
    """参数超出定义域（非素数幂、索引越界、上下文不匹配等）"""


class RulerParseError(DomainError):
    """标尺文件解析失败，携带出错行号"""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"第 {lineno} 行: {message}")


class UsageError(Exception):
    """命令行用法错误（未知参数、未知配置项、文件缺失）"""
