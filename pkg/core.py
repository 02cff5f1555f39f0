# -*- coding: utf-8 -*-

"""Core module - shared/common resources
"""

from os import makedirs, environ
import os.path
import logging
import logging.handlers

#####################
# files/directories #
#####################

FILE_DIR     = os.path.dirname(os.path.realpath(__file__))
BASE_DIR     = FILE_DIR
LOG_DIR      = os.path.join(BASE_DIR, 'log')
CONFIG_DIR   = os.path.join(BASE_DIR, 'config')
OUTPUT_DIR   = environ.get('ACCELRAD_OUTPUT') or os.path.join(BASE_DIR, 'output')

def ConfigFile(file_name: str) -> str:
    """Full path name of a file in CONFIG_DIR
    """
    return os.path.join(CONFIG_DIR, file_name)

def OutputDir(name: str, base_dir: str = None) -> str:
    """Return (and create, if needed) the output directory for the named run.  Note that
    `base_dir` defaults to OUTPUT_DIR, which may be overridden by ACCELRAD_OUTPUT.
    """
    out_dir = os.path.abspath(os.path.join(base_dir or OUTPUT_DIR, name))
    makedirs(out_dir, exist_ok=True)
    return out_dir

#####################
# debugging/logging #
#####################

DEBUG = int(environ.get('ACCELRAD_DEBUG') or 0)

# logger (file always, console with ACCELRAD_DEBUG > 1)
LOGGER_NAME  = 'accelrad'
LOG_FILE     = LOGGER_NAME + '.log'
LOG_PATH     = os.path.join(LOG_DIR, LOG_FILE)
LOG_FMTR     = logging.Formatter('%(asctime)s %(levelname)s [%(filename)s:%(lineno)s]: %(message)s')
LOG_FILE_MAX = 50000000
LOG_FILE_NUM = 50

makedirs(LOG_DIR, exist_ok=True)
dflt_hand = logging.handlers.RotatingFileHandler(LOG_PATH, 'a', LOG_FILE_MAX, LOG_FILE_NUM)
dflt_hand.setLevel(logging.DEBUG)
dflt_hand.setFormatter(LOG_FMTR)

dbg_hand = logging.StreamHandler()
dbg_hand.setLevel(logging.DEBUG)
dbg_hand.setFormatter(LOG_FMTR)

log = logging.getLogger(LOGGER_NAME)
log.setLevel(logging.INFO)
log.addHandler(dflt_hand)
if DEBUG:
    log.setLevel(logging.DEBUG)
    if DEBUG > 1:
        log.addHandler(dbg_hand)

##############
# exceptions #
##############

class DataError(RuntimeError):
    """Thrown if there is a problem detected with any of the data at runtime, whether due
    to bad and/or insufficient external data or errant internal data processing
    """
    pass

class ConfigError(RuntimeError):
    """Thrown if there is a problem with a config file entry, or combination of entries
    (also unknown presets and bad sweep fields)
    """
    pass

class LogicError(RuntimeError):
    """Basically the same as an assert, but with a `raise` interface
    """
    pass

class DimensionError(DataError):
    """Invalid Hilbert-space dimension, embedding slot, or operand shape mismatch
    """
    pass

class StateError(DataError):
    """Density matrix input that violates Hermiticity (or other state invariants) beyond
    tolerance
    """
    pass

class UnsupportedProfileError(DataError):
    """Closed-form analytics requested for modulation profiles they do not cover
    """
    pass

class IntegrationError(RuntimeError):
    """Adaptive integration failed (step size underflow); `time` is the failure time, in
    units of 1/omega
    """
    def __init__(self, msg: str, time: float):
        super().__init__(msg)
        self.time = time

class QuadratureError(RuntimeError):
    """Quadrature did not converge; `est_error` is the last achieved error estimate
    """
    def __init__(self, msg: str, est_error: float):
        super().__init__(msg)
        self.est_error = est_error
