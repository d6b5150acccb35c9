import logging

import colorlog

DEFAULT_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
DEFAULT_LOG_FORMAT = "%(asctime)s %(log_color)s%(levelname)-8s%(reset)s %(message)s"


def logger_formatter(log_format=DEFAULT_LOG_FORMAT, date_format=DEFAULT_DATE_FORMAT) -> logging.Formatter:
    return colorlog.ColoredFormatter(log_format, date_format)


def get_logger(name: str, level: int = logging.INFO) -> logging.Logger:
    logger = logging.getLogger(name)

    # modules are imported from tests and scripts alike, one handler is enough
    if not any(isinstance(h, logging.StreamHandler) for h in logger.handlers):
        ch = logging.StreamHandler()
        ch.setFormatter(logger_formatter())
        logger.addHandler(ch)

    logger.setLevel(level)

    return logger


def set_level(level: int) -> None:
    """Sets level of all loggers created within softgrad packages."""

    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith("softgrad") and isinstance(logger, logging.Logger):
            logger.setLevel(level)
