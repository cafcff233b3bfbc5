import logging
import logging.config
import sys
from typing import List, Optional, Union

import structlog

from wbk.settings import get_settings
from wbk.types.main import LogFormat

settings = get_settings()

# loggers routed through the wbk handler; py.warnings carries numpy/scipy warnings
# (LinAlgWarning from ill-conditioned Gram systems, overflow in series sums)
ROUTED_LOGGERS = ("wbk", "py.warnings")

structlog.configure(
    processors=[
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)


def shared_processors(callsite: bool = True) -> List:
    """Processors applied to stdlib and structlog records before rendering."""
    processors = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt=settings.DATETIME_STRING_FORMAT),
    ]
    if callsite:
        processors.append(
            structlog.processors.CallsiteParameterAdder(
                {
                    structlog.processors.CallsiteParameter.FILENAME,
                    structlog.processors.CallsiteParameter.FUNC_NAME,
                    structlog.processors.CallsiteParameter.LINENO,
                }
            )
        )
    processors += [
        # experiment name bound by the runner, step index by sequence runs
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.ProcessorFormatter.remove_processors_meta,
    ]
    return processors


def renderer(log_format: Union[LogFormat, str], colors: bool):
    if log_format == LogFormat.json:
        return structlog.processors.JSONRenderer(sort_keys=True)
    return structlog.dev.ConsoleRenderer(colors=colors)


def configure_logging(app_level: Optional[Union[int, str]] = None, stream=None, log_format=None):
    """
    Sends `wbk` and captured Python warnings to `stream` (stderr by default).

    Colors are only used for the console format on stderr; `log_format`
    defaults to `settings.LOG_FORMAT`.
    """
    log_format = log_format or settings.LOG_FORMAT
    logging.captureWarnings(True)
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "wbk": {
                    "()": structlog.stdlib.ProcessorFormatter,
                    "processors": shared_processors(callsite=log_format != LogFormat.json)
                    + [renderer(log_format, colors=stream is None)],
                    "foreign_pre_chain": [structlog.stdlib.ExtraAdder()],
                },
            },
            "handlers": {
                "default": {
                    "class": "logging.StreamHandler",
                    "formatter": "wbk",
                    "stream": stream or sys.stderr,
                },
            },
            "loggers": {
                name: {"handlers": ["default"], "level": "WARNING", "propagate": True}
                for name in ROUTED_LOGGERS
            },
        }
    )
    logging.getLogger("wbk").setLevel(app_level or settings.LOG_LEVEL)
