"""
Shared utilities: logging, errors, linear algebra and helpers
"""

from .logger import Logger, logger, set_console_level

__all__ = ['Logger', 'logger', 'set_console_level']
