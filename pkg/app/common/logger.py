import logging
import sys
from typing import Any, Dict, Optional

import structlog
from structlog.stdlib import LoggerFactory
from structlog.types import Processor

from app.settings import settings


def add_service_name() -> Processor:
    """添加服务名称到日志"""

    def processor(logger: Any, name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
        event_dict["service"] = settings.name
        return event_dict

    return processor


def setup_logger(level: Optional[str] = None, json_output: Optional[bool] = None):
    """配置结构化日志

    日志写入 stderr，stdout 只留给报告输出。
    根据是否是TTY终端决定日志格式：
    - 当是TTY终端时（如命令行），输出易读的控制台格式
    - 当不是TTY终端时（如容器或重定向），输出JSON格式
    """
    level_name = (level or settings.log_level).upper()
    log_level = getattr(logging, level_name, logging.INFO)

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        stream=sys.stderr,
        force=True,  # 强制重新配置
    )
    logging.getLogger().setLevel(log_level)

    processors = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S.%f"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        add_service_name(),
    ]

    if json_output is None:
        json_output = settings.log_json
    if json_output is None:
        json_output = not sys.stderr.isatty()

    if json_output:
        processors.extend(
            [
                structlog.processors.dict_tracebacks,
                structlog.processors.JSONRenderer(indent=None),
            ]
        )
    else:
        processors.append(
            structlog.dev.ConsoleRenderer(
                colors=True,
                exception_formatter=structlog.dev.default_exception_formatter,
            )
        )

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

    return structlog.get_logger()


# 创建全局logger实例
logger = setup_logger()
