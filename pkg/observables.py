# -*- coding: utf-8 -*-

"""Measured quantities: two-qubit concurrence (Wootters), per-qubit excitation
probability, cavity photon number, and purity; plus the `ObservableTrace` time series and
its CSV format.
"""

from dataclasses import dataclass
from collections.abc import Sequence
from typing import Protocol
import csv

import numpy as np

from core import DimensionError, StateError, DataError, LogicError, log
from operators import (Q1, Q2, CAV, E, QUBIT_DIM, PSD_TOL, OperatorMatrix, DensityMatrix,
                       Pauli, pauli, kron, partial_trace)

#########################
# concurrence (Wootters) #
#########################

CONC_HERM_TOL = 1e-8
# eigenvalues of rho below this are treated as (round-off) zeros before taking sqrt(rho)
EIG_CUTOFF    = 1e-12
# largest |negative| spin-flip spectrum value tolerated before clamping
CLAMP_TOL     = 1e-9

SIGMA_YY = kron(pauli(Pauli.Y), pauli(Pauli.Y)).entries

def concurrence(rho2q: OperatorMatrix) -> float:
    """Wootters concurrence C = max(0, λ1 - λ2 - λ3 - λ4), with λi the decreasing square
    roots of the eigenvalues of ρ·ρ̃, ρ̃ = (σy⊗σy)·ρ*·(σy⊗σy), and complex conjugation taken
    in the fixed (g, e) product basis.

    The λi are the singular values of M = sqrt(ρ)·(σy⊗σy)·sqrt(ρ)*, since
    sqrt(ρ)·ρ̃·sqrt(ρ) = M·M†.
    """
    if rho2q.subsystem_dims != (QUBIT_DIM, QUBIT_DIM):
        raise DimensionError(f"concurrence requires a 2x2 (qubit) state, got dims {rho2q.subsystem_dims}")
    rho = rho2q.entries
    defect = float(np.max(np.abs(rho - rho.conj().T)))
    if defect > CONC_HERM_TOL:
        raise StateError(f"non-Hermitian two-qubit state (defect {defect:.3g})")

    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if evals[0] < -PSD_TOL:
        raise StateError(f"two-qubit state not PSD (min eigenvalue {evals[0]:.3g})")
    evals = np.where(evals < EIG_CUTOFF, 0.0, evals)
    sqrt_rho = (evecs * np.sqrt(evals)) @ evecs.conj().T

    spin_flip = sqrt_rho @ SIGMA_YY @ sqrt_rho.conj()
    lambdas = np.linalg.svd(spin_flip, compute_uv=False)  # descending
    # cross-check against the eigenvalue form
    r_evals = np.linalg.eigvalsh(spin_flip @ spin_flip.conj().T)
    if r_evals[0] < -CLAMP_TOL:
        raise LogicError(f"negative spin-flip eigenvalue {r_evals[0]:.3g} beyond clamp tolerance")
    return max(0.0, float(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))

###########################
# single-state observables #
###########################

def _diag_tensor(rho: OperatorMatrix) -> np.ndarray:
    """Populations reshaped to the subsystem layout.
    """
    return np.real(np.diagonal(rho.entries)).reshape(rho.subsystem_dims)

def excitation_probability(rho: OperatorMatrix, qubit: int) -> float:
    """trace(ρ·Π_e,ℓ), with Π_e,ℓ the excited-state projector embedded in slot `qubit`.
    """
    if qubit not in (Q1, Q2) or len(rho.subsystem_dims) <= qubit:
        raise DimensionError(f"bad qubit index {qubit}")
    if rho.subsystem_dims[qubit] != QUBIT_DIM:
        raise DimensionError(f"slot {qubit} is not a qubit (dims {rho.subsystem_dims})")
    return float(np.take(_diag_tensor(rho), E, axis=qubit).sum())

def photon_number(rho: OperatorMatrix) -> float:
    """trace(ρ·a†a) for the cavity slot.
    """
    dims = rho.subsystem_dims
    if len(dims) != 3:
        raise DimensionError(f"photon number requires the full layout, got dims {dims}")
    pops = _diag_tensor(rho).sum(axis=(Q1, Q2))
    return float(np.dot(np.arange(dims[CAV]), pops))

def purity(rho: OperatorMatrix) -> float:
    """trace(ρ²), evaluated as Σ|ρ_ij|² (valid for Hermitian ρ).
    """
    return float(np.vdot(rho.entries, rho.entries).real)

def two_qubit_state(rho: DensityMatrix) -> DensityMatrix:
    """Cavity traced out.
    """
    return partial_trace(rho, {Q1, Q2})

OBS_FIELDS = ['concurrence', 'p_q1', 'p_q2', 'n_photons', 'purity']

def sample_observables(rho: DensityMatrix) -> tuple[float, float, float, float, float]:
    """All observables for a single full-space state, in `OBS_FIELDS` order.
    """
    return (concurrence(two_qubit_state(rho)),
            excitation_probability(rho, Q1),
            excitation_probability(rho, Q2),
            photon_number(rho),
            purity(rho))

##################
# ObservableTrace #
##################

CSV_HEADER = ['time'] + OBS_FIELDS
CSV_FMT    = '.12g'

LATE_FRACTION = 0.2

@dataclass(frozen=True)
class ObservableTrace:
    """Time grid (ωt/2π) plus sampled observables.
    """
    times:       np.ndarray
    concurrence: np.ndarray
    p_q1:        np.ndarray
    p_q2:        np.ndarray
    n_photons:   np.ndarray
    purity:      np.ndarray

    def __post_init__(self):
        for name in ['times'] + OBS_FIELDS:
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        lens = {len(getattr(self, name)) for name in ['times'] + OBS_FIELDS}
        if len(lens) != 1:
            raise DataError(f"observable series lengths differ: {lens}")

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_samples(cls, times: Sequence[float], samples: Sequence[tuple]) -> 'ObservableTrace':
        """Build from per-time tuples in `OBS_FIELDS` order.
        """
        cols = np.array(samples, dtype=float).reshape(len(times), len(OBS_FIELDS)).T
        return cls(np.asarray(times, dtype=float), *cols)

    def at(self, time: float) -> dict[str, float]:
        """Observables at the grid point nearest to `time` (ωt/2π).
        """
        i = int(np.argmin(np.abs(self.times - time)))
        return {name: float(getattr(self, name)[i]) for name in ['times'] + OBS_FIELDS}

    def window(self, start: float, end: float = None) -> 'ObservableTrace':
        """Sub-trace for start <= time <= end.
        """
        end = self.times[-1] if end is None else end
        mask = (self.times >= start) & (self.times <= end)
        return ObservableTrace(*(getattr(self, name)[mask] for name in ['times'] + OBS_FIELDS))

    def late_stats(self, name: str = 'concurrence',
                   fraction: float = LATE_FRACTION) -> tuple[float, float]:
        """Mean and standard deviation of an observable over the final `fraction` of the
        time span (stationarity check).
        """
        if name not in OBS_FIELDS:
            raise DataError(f"unknown observable '{name}'")
        if not 0.0 < fraction <= 1.0:
            raise DataError(f"late fraction must be in (0, 1] (got {fraction})")
        if len(self) == 0:
            raise DataError("empty trace")
        t0, t1 = self.times[0], self.times[-1]
        late = getattr(self.window(t1 - fraction * (t1 - t0)), name)
        return float(np.mean(late)), float(np.std(late))

    def rows(self) -> list[list[str]]:
        cols = [getattr(self, name) for name in ['times'] + OBS_FIELDS]
        return [[format(x, CSV_FMT) for x in row] for row in zip(*cols)]

    def write_csv(self, path: str) -> str:
        """Header `time,concurrence,p_q1,p_q2,n_photons,purity`, newline-terminated rows.
        """
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(CSV_HEADER)
            writer.writerows(self.rows())
        log.debug(f"wrote {len(self)} rows to {path}")
        return path

def read_trace_csv(path: str) -> ObservableTrace:
    """Inverse of `ObservableTrace.write_csv` (to the precision written).
    """
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CSV_HEADER:
            raise DataError(f"unexpected trace header {header}")
        rows = [[float(x) for x in row] for row in reader]
    cols = np.array(rows, dtype=float).reshape(len(rows), len(CSV_HEADER)).T
    return ObservableTrace(*cols)

class StateSeries(Protocol):
    times:  np.ndarray
    states: Sequence[DensityMatrix] | None

def trace_observables(result: StateSeries) -> ObservableTrace:
    """Per-sample evaluation of all observables on a result with retained states.
    """
    if result.states is None:
        raise DataError("evolution result does not retain states")
    return ObservableTrace.from_samples(result.times,
                                        [sample_observables(rho) for rho in result.states])
