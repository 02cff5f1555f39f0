# -*- coding: utf-8 -*-

"""Time-dependent Hamiltonian for two qubits with modulated coupling to a single cavity
mode, and the zero-temperature dissipators.  Units are ħ = 1 and ω = 1
(cavity frequency); `t` arguments in this module are in units of 1/ω.

The simulated qubit motion enters only through the coupling modulation

    m_ℓ(t) = cos(f0 + delta_f·cos(omega_d·t + phase))

i.e. k·x_qℓ(t) for a qubit oscillating harmonically about k·x = f0.  Geometric
trajectories are expressed in units of the cavity length L_c, for the fundamental mode
(λ = 2·L_c, so k·L_c = π); see `trajectory_profile`.  The overall sign of m(t) (and the σ^z
sign convention) does not affect any observable, since only |m| patterns matter for
populations and concurrence.
"""

from dataclasses import dataclass, field, fields
from collections.abc import Mapping
from functools import lru_cache
from typing import NamedTuple
import math

import numpy as np
from ckautils import typecast

from core import ConfigError, log
from operators import (Q1, Q2, CAV, OperatorMatrix, Pauli, pauli, annihilation, number_op,
                       embed, system_layout)

QUBITS = (Q1, Q2)

#####################
# ModulationProfile #
#####################

@dataclass(frozen=True)
class ModulationProfile:
    """Per-qubit coupling modulation.  `f0` and `delta_f` are phases in radians (k·x at
    zero modulation, and k·amplitude); `omega_d` is in units of ω.  A disabled profile is
    a static qubit at k·x = f0.
    """
    f0:      float = 0.0
    delta_f: float = 0.0
    omega_d: float = 0.0
    phase:   float = 0.0
    enabled: bool  = True

    def __post_init__(self):
        if self.delta_f < 0.0:
            raise ConfigError(f"delta_f must be >= 0 (got {self.delta_f})")
        if self.omega_d < 0.0:
            raise ConfigError(f"omega_d must be >= 0 (got {self.omega_d})")

def modulation_value(p: ModulationProfile, t: float | np.ndarray) -> float | np.ndarray:
    """Coupling modulation m(t) for the profile; `t` may be a scalar or an array (the
    return value follows).
    """
    if not p.enabled:
        return np.cos(p.f0) + np.zeros_like(t, dtype=float)
    return np.cos(p.f0 + p.delta_f * np.cos(p.omega_d * t + p.phase))

##########################
# trajectory constructors #
##########################

# k·L_c for the fundamental mode (λ = 2·L_c)
K_LC = math.pi

def trajectory_profile(center: float, amplitude: float, omega_d: float,
                       phase: float = 0.0) -> ModulationProfile:
    """Qubit oscillating as x(t) = center + amplitude·cos(omega_d·t + phase), with
    positions in units of L_c.
    """
    if amplitude < 0.0:
        amplitude, phase = -amplitude, phase + math.pi
    return ModulationProfile(f0=K_LC * center, delta_f=K_LC * amplitude, omega_d=omega_d,
                             phase=phase)

def mirror_to_mirror(omega_d: float) -> ModulationProfile:
    """x(t) = L_c/2 + (L_c/2)·cos(omega_d·t), i.e. f0 = delta_f = π/2.  Note that the
    static case (omega_d = 0) leaves the qubit at the mirror, fully coupled.
    """
    return trajectory_profile(0.5, 0.5, omega_d)

def entanglement_pair(omega_d1: float, omega_d2: float) -> tuple[ModulationProfile, ModulationProfile]:
    """Qubit pair separated by D = λ/4 (= L_c/2), each with amplitude L_c/4: qubit 1 has
    f0 = delta_f = π/4, and qubit 2 is offset by π/2 in f0.
    """
    return (trajectory_profile(0.25, 0.25, omega_d1),
            trajectory_profile(0.75, 0.25, omega_d2))

def quarter_point(amplitude: float, omega_d: float) -> ModulationProfile:
    """Qubit initially placed at L_c/4, oscillating with the specified amplitude (in units
    of L_c), e.g. 1/4 → delta_f = π/4, 1/16 → delta_f = π/16.
    """
    return trajectory_profile(0.25, amplitude, omega_d)

def static_profile(f0: float = 0.0) -> ModulationProfile:
    return ModulationProfile(f0=f0, enabled=False)

################
# SystemConfig #
################

Pair = tuple[float, float]

def dephasing_rate(gamma: float, t2_t1_ratio: float) -> float:
    """Pure-dephasing rate from the relaxation rate and a T2/T1 ratio, using T1 = 1/Γ and
    T2 = 1/Γ_φ directly (no 1/(2·T1) correction).
    """
    if t2_t1_ratio <= 0.0:
        raise ConfigError(f"T2/T1 ratio must be positive (got {t2_t1_ratio})")
    return gamma / t2_t1_ratio

@dataclass(frozen=True)
class SystemConfig:
    """All physical and numerical parameters of one simulation.  Per-qubit values are
    pairs (qubit 1, qubit 2); frequencies and rates are in units of ω.
    """
    omega:      float = 1.0
    omega_q:    Pair  = (1.0, 1.0)
    g:          Pair  = (0.0, 0.0)
    modulation: tuple[ModulationProfile, ModulationProfile] = field(
        default=(ModulationProfile(), ModulationProfile()))
    kappa:      float = 0.0
    gamma:      Pair  = (0.0, 0.0)
    gamma_phi:  Pair  = (0.0, 0.0)
    n_fock:     int   = 10

    def __post_init__(self):
        for name in ('omega_q', 'g', 'modulation', 'gamma', 'gamma_phi'):
            val = tuple(getattr(self, name))
            if len(val) != 2:
                raise ConfigError(f"'{name}' must have one entry per qubit (got {val})")
            object.__setattr__(self, name, val)
        if self.omega <= 0.0:
            raise ConfigError(f"omega must be positive (got {self.omega})")
        rates = [self.kappa, *self.gamma, *self.gamma_phi]
        if min(rates) < 0.0:
            raise ConfigError(f"decay rates must be >= 0 (got {rates})")
        if self.n_fock < 1:
            raise ConfigError(f"n_fock must be >= 1 (got {self.n_fock})")

    @property
    def layout(self) -> tuple[int, int, int]:
        return system_layout(self.n_fock)

    @property
    def detuning(self) -> Pair:
        """Δ_ℓ = ω^q_ℓ - ω
        """
        return tuple(wq - self.omega for wq in self.omega_q)

    def t1(self, qubit: int) -> float:
        """Derived (T1 = 1/Γ), infinite for zero rate.
        """
        return 1.0 / self.gamma[qubit] if self.gamma[qubit] else math.inf

    def t2(self, qubit: int) -> float:
        """Derived (T2 = 1/Γ_φ), infinite for zero rate.
        """
        return 1.0 / self.gamma_phi[qubit] if self.gamma_phi[qubit] else math.inf

    @property
    def fastest_frequency(self) -> float:
        return max(self.omega, *self.omega_q, *(p.omega_d for p in self.modulation))

###########################
# flat (dotted) key space #
###########################

# qubit-indexed keys are 1-based (e.g. 'system.omega_q.1')
PROFILE_FIELDS = [f.name for f in fields(ModulationProfile)]
PAIR_FIELDS    = ['omega_q', 'g', 'gamma', 'gamma_phi']

def config_to_dict(cfg: SystemConfig) -> dict[str, float | int | bool]:
    """Flatten config into dotted keys (insertion order is the canonical file order).
    """
    flat = {'system.omega': cfg.omega}
    for name in PAIR_FIELDS:
        for i, val in enumerate(getattr(cfg, name)):
            flat[f'system.{name}.{i + 1}'] = val
    flat['system.kappa'] = cfg.kappa
    flat['system.n_fock'] = cfg.n_fock
    for i, prof in enumerate(cfg.modulation):
        for name in PROFILE_FIELDS:
            flat[f'modulation.{i + 1}.{name}'] = getattr(prof, name)
    return flat

CONFIG_KEYS = list(config_to_dict(SystemConfig()))

def config_from_dict(flat: dict[str, object]) -> SystemConfig:
    """Inverse of `config_to_dict`; missing keys take default values, unknown keys raise
    `ConfigError`.
    """
    if unknown := [k for k in flat if k not in CONFIG_KEYS]:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    full = config_to_dict(SystemConfig()) | flat
    try:
        pair = lambda name, cast=float: tuple(cast(full[f'system.{name}.{i}']) for i in (1, 2))
        profiles = []
        for i in (1, 2):
            info = {name: full[f'modulation.{i}.{name}'] for name in PROFILE_FIELDS}
            info['enabled'] = parse_bool(info['enabled'])
            profiles.append(ModulationProfile(**{k: v if k == 'enabled' else float(v)
                                                 for k, v in info.items()}))
        return SystemConfig(omega=float(full['system.omega']),
                            omega_q=pair('omega_q'),
                            g=pair('g'),
                            modulation=tuple(profiles),
                            kappa=float(full['system.kappa']),
                            gamma=pair('gamma'),
                            gamma_phi=pair('gamma_phi'),
                            n_fock=int(full['system.n_fock']))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad config value: {e}") from e

def parse_bool(val: object) -> bool:
    """Accepts actual bools, 0/1, and anything `typecast` resolves to a bool.
    """
    if isinstance(val, str):
        val = typecast(val.strip())
    if isinstance(val, bool):
        return val
    if isinstance(val, int) and val in (0, 1):
        return bool(val)
    raise ConfigError(f"bad boolean value '{val}'")

def config_with(cfg: SystemConfig, overrides: Mapping[str, object]) -> SystemConfig:
    """Return copy of config with the specified (dotted key) fields replaced.
    """
    if unknown := [k for k in overrides if k not in CONFIG_KEYS]:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    if not overrides:
        return cfg
    return config_from_dict(config_to_dict(cfg) | dict(overrides))

###############
# Hamiltonian #
###############

class HamiltonianParts(NamedTuple):
    """H(t) = free + Σ_ℓ g_ℓ·m_ℓ(t)·coupling[ℓ]
    """
    free:     np.ndarray
    coupling: tuple[np.ndarray, np.ndarray]

@lru_cache(maxsize=32)
def hamiltonian_parts(cfg: SystemConfig) -> HamiltonianParts:
    """Static pieces of the Hamiltonian (cached per config, arrays are read-only).
    """
    layout = cfg.layout
    n_levels = layout[CAV]
    a = embed(annihilation(n_levels), CAV, layout)
    field_x = a + a.dag()
    free = cfg.omega * embed(number_op(n_levels), CAV, layout)
    coupling = []
    for q in QUBITS:
        free = free + (cfg.omega_q[q] / 2.0) * embed(pauli(Pauli.Z), q, layout)
        coupling.append((embed(pauli(Pauli.X), q, layout) @ field_x).entries.real.copy())
    free_arr = free.entries.real.copy()
    for arr in (free_arr, *coupling):
        arr.setflags(write=False)
    log.debug(f"built hamiltonian parts (dim {free_arr.shape[0]})")
    return HamiltonianParts(free_arr, tuple(coupling))

def coupling_coeffs(cfg: SystemConfig, t: float) -> tuple[float, float]:
    """g_ℓ·m_ℓ(t) for both qubits.
    """
    return tuple(cfg.g[q] * float(modulation_value(cfg.modulation[q], t)) for q in QUBITS)

def hamiltonian_array(cfg: SystemConfig, t: float) -> np.ndarray:
    """Raw (real) array form of `hamiltonian`, for the integrators.
    """
    parts = hamiltonian_parts(cfg)
    c1, c2 = coupling_coeffs(cfg, t)
    return parts.free + c1 * parts.coupling[0] + c2 * parts.coupling[1]

def hamiltonian(cfg: SystemConfig, t: float) -> OperatorMatrix:
    """H(t) = ω a†a + Σ_ℓ [ (ω^q_ℓ/2) σ^z_ℓ + g_ℓ·m_ℓ(t)·σ^x_ℓ (a† + a) ], on the full
    space.  All coefficients are real and all operators real symmetric, so the result is
    exactly Hermitian.
    """
    return OperatorMatrix(hamiltonian_array(cfg, t), cfg.layout)

######################
# collapse operators #
######################

def collapse_operators(cfg: SystemConfig) -> list[OperatorMatrix]:
    """Zero-temperature Lindblad operators: sqrt(κ)·a, sqrt(Γ_ℓ)·σ⁻_ℓ, sqrt(Γ_φℓ/2)·σ^z_ℓ
    (so that coherences decay at exactly Γ_φ).  Zero-rate operators are omitted.
    """
    layout = cfg.layout
    c_ops = []
    if cfg.kappa > 0.0:
        c_ops.append(math.sqrt(cfg.kappa) * embed(annihilation(layout[CAV]), CAV, layout))
    for q in QUBITS:
        if cfg.gamma[q] > 0.0:
            c_ops.append(math.sqrt(cfg.gamma[q]) * embed(pauli(Pauli.MINUS), q, layout))
    for q in QUBITS:
        if cfg.gamma_phi[q] > 0.0:
            c_ops.append(math.sqrt(cfg.gamma_phi[q] / 2.0) * embed(pauli(Pauli.Z), q, layout))
    return c_ops
