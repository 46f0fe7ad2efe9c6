# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

import inspect
import logging
from functools import wraps

import numpy as np

from perception.depthcal.exceptions import NonFiniteInput

LOGGER_NAME = 'perception.depthcal'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _bound_argument(sig, index, args, kwargs):
    """Value of the ``index``-th parameter of ``sig`` for this call."""
    bound = sig.bind(*args, **kwargs)
    bound.apply_defaults()
    return bound.arguments[list(sig.parameters)[index]]


def validate_factor(func):
    """
    Decorator to assert that the noise factor, the second parameter of
    the decorated function, is strictly positive. The factor may be
    passed positionally or by keyword.

    :param func: function to be decorated and checked.
    """
    def _exception(factor):
        raise ValueError("Noise factor must be > 0, got %r" % (factor,))

    sig = inspect.signature(func)

    @wraps(func)
    def wrapper(*args, **kwargs):
        factor = _bound_argument(sig, 1, args, kwargs)
        if factor > 0:
            return func(*args, **kwargs)
        else:
            return _exception(factor)
    wrapper.__wrapped__ = func

    return wrapper


def validate_finite_logits(func):
    """
    Decorator to assert that the depth distribution, the first parameter
    of the decorated function, carries only finite logits.

    :param func: function to be decorated and checked.
    """
    def _exception():
        raise NonFiniteInput("Depth logits contain NaN or Inf values.")

    sig = inspect.signature(func)

    @wraps(func)
    def wrapper(*args, **kwargs):
        pred = _bound_argument(sig, 0, args, kwargs)
        if np.all(np.isfinite(pred.logits)):
            return func(*args, **kwargs)
        else:
            return _exception()
    wrapper.__wrapped__ = func

    return wrapper


def set_logging(log_file=None, log_level=logging.WARNING):
    """
    Set logging parameters for the package logger. Can be invoked any
    number of times; each call replaces the handler installed by the
    previous one.

    :param log_file: Path of log file.
                     If set to "/dev/null", nothing will be logged.
                     If set to None, records go to stderr.
    :param log_level: Level name (e.g. "DEBUG") or integer level.
    :returns: the configured package logger.
    """
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    if isinstance(log_level, str):
        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError("Unknown log level %r" % (log_level,))
        log_level = level

    if log_file == "/dev/null":
        handler = logging.NullHandler()
    elif log_file is None:
        handler = logging.StreamHandler()
    else:
        handler = logging.FileHandler(log_file)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(log_level)
    logger.propagate = False
    return logger


def disable_logging():
    """
    Sends logs to /dev/null effectively disabling them
    """
    return set_logging("/dev/null")
