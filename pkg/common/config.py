"""
配置文件
定义蒙特卡洛仿真、并行度和日志的默认参数
"""
from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """应用配置"""

    # 蒙特卡洛默认试验次数
    DEFAULT_TRIALS: int = 10000

    # 默认随机种子
    DEFAULT_SEED: int = 42

    # 仿真线程数，0 表示使用机器的全部并行度
    DEFAULT_THREADS: int = 0

    # 每个并行任务包含的试验数（不影响结果）
    TRIAL_CHUNK_SIZE: int = 512

    # 日志级别与可选的日志文件
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True


# 创建全局配置实例
settings = Settings()
