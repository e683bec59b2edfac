"""
Logger for the RIS blind-estimation simulator
"""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path

import coloredlogs

# Fix encoding
try:
    sys.stdout.reconfigure(encoding='utf-8')
    sys.stderr.reconfigure(encoding='utf-8')
except AttributeError:
    pass

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class Logger:
    """Named logger with a dated file handler and a colored console"""

    def __init__(self, name="ris_blind", logs_dir=None, console_level=None):
        self.logger = logging.getLogger(name)

        # Prevent duplicate handlers
        if self.logger.handlers:
            return

        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        logs_dir = Path(logs_dir or os.getenv("LOGS_PATH", "logs"))
        console_level = console_level or os.getenv("LOG_LEVEL", "INFO").upper()

        try:
            logs_dir.mkdir(parents=True, exist_ok=True)
            today = datetime.now().strftime("%Y%m%d")
            file_handler = logging.FileHandler(logs_dir / f"ris_blind_{today}.log", encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
            self.logger.addHandler(file_handler)
        except OSError:
            # Read-only working directory: console only
            pass

        coloredlogs.install(
            level=console_level,
            logger=self.logger,
            fmt=LOG_FORMAT,
            datefmt=DATE_FORMAT,
            stream=sys.stderr,
        )

        self.logger.debug(f"Logger initialized for {name}")

    def get_logger(self):
        return self.logger

    def set_level(self, level):
        """Change the console verbosity; the file handler keeps DEBUG"""
        for handler in self.logger.handlers:
            if not isinstance(handler, logging.FileHandler):
                handler.setLevel(level)


# Create global logger instance
_logger = Logger()
logger = _logger.get_logger()


def set_console_level(level):
    _logger.set_level(level)


__all__ = ['Logger', 'logger', 'set_console_level']
