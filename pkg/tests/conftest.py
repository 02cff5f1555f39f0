# -*- coding: utf-8 -*-

"""Common constants, fixtures, ..., other stuff
"""

from collections.abc import Generator
from os import environ
import math

import numpy as np
import pytest

from operators import DensityMatrix
from model import SystemConfig, ModulationProfile, static_profile, entanglement_pair
from database import db_reset

#############
# constants #
#############

RAND_SEEDS = list(x * 10 for x in range(10))

# long-running checks are opt-in
SLOW = int(environ.get('ACCELRAD_SLOW') or 0)
slow = pytest.mark.skipif(not SLOW, reason="set ACCELRAD_SLOW=1 to run")

###################
# state utilities #
###################

def random_density(dims: tuple[int, ...], seed: int, rank: int = None) -> DensityMatrix:
    """Random mixed state (Wishart construction) with the specified subsystem dims.
    """
    rng = np.random.default_rng(seed)
    dim = math.prod(dims)
    rank = rank or dim
    z = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = z @ z.conj().T
    return DensityMatrix(rho / np.trace(rho).real, dims)

def random_ket(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ket = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return ket / np.linalg.norm(ket)

def bell_state(phi: float = 0.0) -> np.ndarray:
    """(|ge⟩ + e^(iφ)|eg⟩)/√2 in the (g, e) ⊗ (g, e) basis.
    """
    ket = np.zeros(4, dtype=complex)
    ket[1] = 1.0
    ket[2] = np.exp(1j * phi)
    return ket / math.sqrt(2.0)

####################
# config utilities #
####################

def small_config(n_fock: int = 2, **kwargs) -> SystemConfig:
    """Weakly coupled, lightly damped system with a small cavity space (dim 4·(N+1)).
    """
    info = {'g'         : (0.02, 0.02),
            'modulation': entanglement_pair(1.0, 1.0),
            'kappa'     : 0.01,
            'gamma'     : (0.002, 0.002),
            'gamma_phi' : (0.003, 0.003),
            'n_fock'    : n_fock}
    return SystemConfig(**(info | kwargs))

def static_config(n_fock: int = 1, **kwargs) -> SystemConfig:
    """Time-independent generator (modulation disabled), with dissipation on every channel.
    """
    info = {'g'         : (0.05, 0.03),
            'modulation': (static_profile(0.3), static_profile(1.1)),
            'kappa'     : 0.05,
            'gamma'     : (0.01, 0.02),
            'gamma_phi' : (0.02, 0.01),
            'n_fock'    : n_fock}
    return SystemConfig(**(info | kwargs))

def driven_config(n_fock: int = 1, **kwargs) -> SystemConfig:
    """Strongly coupled (so integration errors are visible), time-dependent system.
    """
    info = {'g'         : (0.2, 0.15),
            'modulation': (ModulationProfile(0.5, 0.8, 1.3), ModulationProfile(1.0, 0.6, 0.7, 0.4)),
            'kappa'     : 0.05,
            'gamma'     : (0.02, 0.01),
            'gamma_phi' : (0.01, 0.03),
            'n_fock'    : n_fock}
    return SystemConfig(**(info | kwargs))

############
# fixtures #
############

@pytest.fixture
def output_dir(tmp_path) -> Generator[str]:
    """Scratch output base directory (the manifest database is unbound afterwards).
    """
    yield str(tmp_path)
    db_reset(force=True)
