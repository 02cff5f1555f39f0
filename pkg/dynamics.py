# -*- coding: utf-8 -*-

"""Integration of the time-dependent Lindblad master equation

    dρ/dt = -i[H(t), ρ] + Σ_k (L_k·ρ·L_k† - ½{L_k†L_k, ρ})

on the full density matrix, with a fixed-step classical RK4 and an adaptive Dormand-Prince
5(4) stepper (the default), plus the exact (frozen-generator) propagator used as a
validation oracle.

Time conventions: `evolve` takes `t_final` in cavity periods (ωt/2π), and reports
`EvolutionResult.times` in the same units; everything else here (`dt`, `t0`, failure
times) is in units of 1/ω.
"""

from dataclasses import dataclass, replace
from collections.abc import Callable, Sequence
from enum import StrEnum
from typing import NamedTuple
import math

import numpy as np
from scipy.linalg import expm

from core import log, DataError, DimensionError, ConfigError, IntegrationError
from operators import OperatorMatrix, DensityMatrix
from model import SystemConfig, hamiltonian_parts, coupling_coeffs, hamiltonian_array, collapse_operators
from observables import ObservableTrace, sample_observables

#####################
# IntegratorOptions #
#####################

class Method(StrEnum):
    RK4_FIXED     = 'rk4_fixed'
    RK45_ADAPTIVE = 'rk45_adaptive'

DFLT_METHOD      = Method.RK45_ADAPTIVE
DFLT_REL_TOL     = 1e-8
DFLT_ABS_TOL     = 1e-10
STEPS_PER_PERIOD = 50
MIN_STEP         = 1e-12
MAX_STEPS        = 20_000_000
DFLT_SAMPLES     = 101

@dataclass(frozen=True)
class IntegratorOptions:
    """`dt` is the fixed step for rk4_fixed, or the initial step for rk45_adaptive; if not
    specified, (2π/fastest frequency)/50 is used.
    """
    method:            Method      = DFLT_METHOD
    dt:                float | None = None
    rel_tol:           float       = DFLT_REL_TOL
    abs_tol:           float       = DFLT_ABS_TOL
    renormalize_trace: bool        = False

    def __post_init__(self):
        try:
            object.__setattr__(self, 'method', Method(self.method))
        except ValueError as e:
            raise ConfigError(f"unknown integration method '{self.method}'") from e
        if self.dt is not None and not self.dt > 0.0:
            raise ConfigError(f"dt must be positive (got {self.dt})")
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ConfigError(f"tolerances must be positive (got {self.rel_tol}, {self.abs_tol})")

    def initial_step(self, cfg: SystemConfig) -> float:
        if self.dt is not None:
            return self.dt
        return 2.0 * math.pi / cfg.fastest_frequency / STEPS_PER_PERIOD

    def tightened(self, factor: float = 0.5) -> 'IntegratorOptions':
        """Copy with both tolerances (and a fixed step, if specified) scaled by `factor`.
        """
        dt = self.dt * factor if self.dt is not None and self.method == Method.RK4_FIXED else self.dt
        return replace(self, dt=dt, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)

###################
# EvolutionResult #
###################

class Diagnostics(NamedTuple):
    """Trace drift is max |trace(ρ) - 1| over all accepted steps (recorded before any
    renormalization); eigenvalue and Hermiticity figures are over recorded samples.
    """
    max_trace_drift: float
    min_eigenvalue:  float
    max_herm_defect: float
    steps:           int
    rejected:        int

@dataclass(frozen=True)
class EvolutionResult:
    """`states` is `None` if the evolution was run with `keep_states=False`, in which case
    `observables` holds the sampled observables instead.  The final state is always kept.
    """
    times:       np.ndarray
    states:      tuple[DensityMatrix, ...] | None
    final_state: DensityMatrix
    diagnostics: Diagnostics
    observables: ObservableTrace | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        if len(times) > 1 and not np.all(np.diff(times) > 0.0):
            raise DataError("evolution times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, 'times', times)

#####################
# Lindblad generator #
#####################

def lindblad_rhs(H_t: OperatorMatrix, rho: OperatorMatrix,
                 collapse: Sequence[OperatorMatrix]) -> np.ndarray:
    """-i[H, ρ] + Σ_k (L_k ρ L_k† - ½ L_k†L_k ρ - ½ ρ L_k†L_k), returned as a raw array.
    """
    for op in [rho, *collapse]:
        if op.dim != H_t.dim:
            raise DimensionError(f"operand dim {op.dim} does not match H dim {H_t.dim}")
    h = H_t.entries
    r = rho.entries
    out = -1j * (h @ r - r @ h)
    for c_op in collapse:
        l = c_op.entries
        l_dag = l.conj().T
        l_dag_l = l_dag @ l
        out += l @ r @ l_dag - 0.5 * (l_dag_l @ r + r @ l_dag_l)
    return out

class LindbladGenerator:
    """Precomputed form of the generator for a config, evaluated as

        dρ/dt = -i(H_eff·ρ - ρ·H_eff†) + Σ_k L_k·ρ·L_k†,  H_eff = H(t) - (i/2)·Σ_k L_k†L_k

    (callable with `(t, rho)`, where `t` is in units of 1/ω and `rho` is a raw array).
    """
    def __init__(self, cfg: SystemConfig):
        parts = hamiltonian_parts(cfg)
        self.cfg = cfg
        self.coupling = parts.coupling
        self.c_ops = [c.entries for c in collapse_operators(cfg)]
        self.c_dags = [c.conj().T for c in self.c_ops]
        decay = np.zeros(parts.free.shape, dtype=complex)
        for l, l_dag in zip(self.c_ops, self.c_dags):
            decay += l_dag @ l
        self.heff_static = parts.free - 0.5j * decay

    def heff(self, t: float) -> np.ndarray:
        c1, c2 = coupling_coeffs(self.cfg, t)
        return self.heff_static + c1 * self.coupling[0] + c2 * self.coupling[1]

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        heff = self.heff(t)
        out = -1j * (heff @ rho - rho @ heff.conj().T)
        for l, l_dag in zip(self.c_ops, self.c_dags):
            out += l @ rho @ l_dag
        return out

RHS = Callable[[float, np.ndarray], np.ndarray]

###############
# integrators #
###############

def rk4_step(f: RHS, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step.
    """
    k1 = f(t, y)
    k2 = f(t + h / 2.0, y + h / 2.0 * k1)
    k3 = f(t + h / 2.0, y + h / 2.0 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

# Dormand-Prince 5(4) tableau
DP_C = (0.0, 1/5, 3/10, 4/5, 8/9, 1.0, 1.0)
DP_A = (
    (),
    (1/5,),
    (3/40, 9/40),
    (44/45, -56/15, 32/9),
    (19372/6561, -25360/2187, 64448/6561, -212/729),
    (9017/3168, -355/33, 46732/5247, 49/176, -5103/18656),
    (35/384, 0.0, 500/1113, 125/192, -2187/6784, 11/84)
)
# error weights (5th minus 4th order)
DP_E = (71/57600, 0.0, -71/16695, 71/1920, -17253/339200, 22/525, -1/40)

def dopri_step(f: RHS, t: float, y: np.ndarray, h: float,
               k1: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One Dormand-Prince step from (t, y) with known k1 = f(t, y); returns the 5th-order
    solution, the local error estimate, and f at the new point (i.e. the next k1).
    """
    ks = [k1]
    for i in range(1, 7):
        y_i = y + h * sum(a * k for a, k in zip(DP_A[i], ks) if a != 0.0)
        ks.append(f(t + DP_C[i] * h, y_i))
        if i == 6:
            y_new = y_i
    err = h * sum(e * k for e, k in zip(DP_E, ks) if e != 0.0)
    return y_new, err, ks[6]

SAFETY     = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

def error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray,
               rel_tol: float, abs_tol: float) -> float:
    """RMS of the local error, scaled by abs_tol + rel_tol·max(|y|, |y_new|).
    """
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))

class StepTracker:
    """Accepted/rejected step bookkeeping, trace drift, and optional renormalization.
    """
    def __init__(self, renormalize: bool):
        self.renormalize = renormalize
        self.max_drift = 0.0
        self.steps = 0
        self.rejected = 0

    def accept(self, y: np.ndarray) -> tuple[np.ndarray, float]:
        """Returns the (possibly renormalized) state and the scale factor applied.
        """
        self.steps += 1
        if self.steps > MAX_STEPS:
            raise IntegrationError(f"exceeded {MAX_STEPS} integration steps", math.nan)
        tr = float(np.trace(y).real)
        self.max_drift = max(self.max_drift, abs(tr - 1.0))
        if self.renormalize:
            return y / tr, 1.0 / tr
        return y, 1.0

def advance_rk4(f: RHS, t: float, y: np.ndarray, t_end: float, dt: float,
                tracker: StepTracker) -> np.ndarray:
    """Integrate to `t_end` with equal steps no longer than `dt`.
    """
    n_steps = max(1, math.ceil((t_end - t) / dt - 1e-9))
    h = (t_end - t) / n_steps
    for i in range(n_steps):
        y = rk4_step(f, t + i * h, y, h)
        y, _ = tracker.accept(y)
    return y

class AdaptiveState(NamedTuple):
    y:  np.ndarray
    h:  float
    k1: np.ndarray

def advance_rk45(f: RHS, t: float, state: AdaptiveState, t_end: float,
                 opts: IntegratorOptions, tracker: StepTracker) -> AdaptiveState:
    """Adaptive integration to exactly `t_end` (the last step is truncated to land on it).
    """
    y, h, k1 = state
    t_eps = 1e-13 * max(1.0, abs(t_end))
    while t_end - t > t_eps:
        last = h >= t_end - t - t_eps
        h_try = t_end - t if last else h
        y_new, err, k_new = dopri_step(f, t, y, h_try, k1)
        err_norm = error_norm(err, y, y_new, opts.rel_tol, opts.abs_tol)
        factor = SAFETY * err_norm ** -0.2 if err_norm > 0.0 else MAX_FACTOR
        factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
        if err_norm <= 1.0:
            t = t_end if last else t + h_try
            y, scale = tracker.accept(y_new)
            # the generator is linear, so renormalization rescales k directly
            k1 = k_new * scale
            h = max(h, h_try * factor) if last else h_try * factor
        else:
            tracker.rejected += 1
            h = h_try * min(1.0, factor)
            if h < MIN_STEP:
                raise IntegrationError(f"step size underflow ({h:.3g}) at t = {t:.6g}", t)
    return AdaptiveState(y, h, k1)

##########
# evolve #
##########

def sample_indices(samples: int, sample_every: int) -> list[int]:
    """Grid indices recorded for the specified stride (the final point is always kept).
    """
    idxs = list(range(0, samples, sample_every))
    if idxs[-1] != samples - 1:
        idxs.append(samples - 1)
    return idxs

def evolve(cfg: SystemConfig, rho0: DensityMatrix, t_final: float,
           opts: IntegratorOptions = None, sample_every: int = 1,
           samples: int = DFLT_SAMPLES, keep_states: bool = True) -> EvolutionResult:
    """Integrate from ρ0 at t = 0 to `t_final` (in periods ωt/2π), on a uniform grid of
    `samples` points, recording every `sample_every`-th grid point (and the last).  With
    `keep_states=False`, only the sampled observables (and final state) are retained.
    """
    opts = opts or IntegratorOptions()
    if not t_final > 0.0:
        raise DataError(f"t_final must be positive (got {t_final})")
    if samples < 2 or sample_every < 1:
        raise DataError(f"bad sampling (samples {samples}, sample_every {sample_every})")
    if rho0.subsystem_dims != cfg.layout:
        raise DimensionError(f"initial state dims {rho0.subsystem_dims} do not match {cfg.layout}")
    DensityMatrix(rho0.entries, rho0.subsystem_dims).check()

    f = LindbladGenerator(cfg)
    tracker = StepTracker(opts.renormalize_trace)
    period = 2.0 * math.pi / cfg.omega
    grid = np.linspace(0.0, t_final, samples)
    idxs = sample_indices(samples, sample_every)

    y = np.array(rho0.entries, dtype=complex)
    dt = opts.initial_step(cfg)
    adaptive = AdaptiveState(y, dt, f(0.0, y)) if opts.method == Method.RK45_ADAPTIVE else None

    states = []
    obs = []
    min_eig = math.inf
    max_defect = 0.0
    t = 0.0
    for i in idxs:
        t_next = grid[i] * period
        if t_next > t:
            if adaptive is not None:
                adaptive = advance_rk45(f, t, adaptive._replace(y=y), t_next, opts, tracker)
                y = adaptive.y
            else:
                y = advance_rk4(f, t, y, t_next, dt, tracker)
            t = t_next
        rho = DensityMatrix(y, cfg.layout)
        min_eig = min(min_eig, rho.min_eigenvalue)
        max_defect = max(max_defect, rho.hermiticity_defect)
        if keep_states:
            states.append(rho)
        else:
            obs.append(sample_observables(rho))

    diags = Diagnostics(tracker.max_drift, min_eig, max_defect, tracker.steps, tracker.rejected)
    log.debug(f"evolve ({opts.method}): t_final {t_final}, {diags.steps} steps, "
              f"{diags.rejected} rejected, drift {diags.max_trace_drift:.3g}")
    times = grid[idxs]
    return EvolutionResult(times=times,
                           states=tuple(states) if keep_states else None,
                           final_state=rho,
                           diagnostics=diags,
                           observables=None if keep_states else ObservableTrace.from_samples(times, obs))

###########################
# exact propagator oracle #
###########################

def liouvillian(H_t: np.ndarray, collapse: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator matrix acting on the row-major vectorization vec(ρ) = ρ.reshape(-1),
    for which vec(A·ρ·B) = (A ⊗ Bᵀ)·vec(ρ).
    """
    dim = H_t.shape[0]
    eye = np.eye(dim)
    sup = -1j * (np.kron(H_t, eye) - np.kron(eye, H_t.T))
    for l in collapse:
        l_dag_l = l.conj().T @ l
        sup += np.kron(l, l.conj()) - 0.5 * (np.kron(l_dag_l, eye) + np.kron(eye, l_dag_l.T))
    return sup

def config_liouvillian(cfg: SystemConfig, t: float) -> np.ndarray:
    """Full generator for the config, frozen at time `t` (1/ω).
    """
    return liouvillian(hamiltonian_array(cfg, t), [c.entries for c in collapse_operators(cfg)])

def propagator_exact(cfg: SystemConfig, t0: float, dt: float) -> np.ndarray:
    """exp(dt·𝓛(t0 + dt/2)), as a dim²×dim² matrix (test oracle only, the cost is
    O(dim⁶)).
    """
    return expm(dt * config_liouvillian(cfg, t0 + dt / 2.0))

def apply_superop(sup: np.ndarray, rho: np.ndarray) -> np.ndarray:
    dim = rho.shape[0]
    return (sup @ rho.reshape(-1)).reshape(dim, dim)

def is_static(cfg: SystemConfig) -> bool:
    """True if H does not depend on time.
    """
    return all(not p.enabled or p.omega_d == 0.0 or p.delta_f == 0.0 for p in cfg.modulation)

def evolve_exact(cfg: SystemConfig, rho0: DensityMatrix, t_final: float,
                 slices: int = 1000) -> DensityMatrix:
    """Piecewise-constant composition of `propagator_exact` over `slices` equal steps to
    `t_final` (in periods); a single exact propagator is used for static configs.
    """
    t_end = t_final * 2.0 * math.pi / cfg.omega
    y = np.array(rho0.entries, dtype=complex)
    if is_static(cfg):
        y = apply_superop(propagator_exact(cfg, 0.0, t_end), y)
    else:
        h = t_end / slices
        for i in range(slices):
            y = apply_superop(propagator_exact(cfg, i * h, h), y)
    return DensityMatrix(y, rho0.subsystem_dims)
