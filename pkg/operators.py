# -*- coding: utf-8 -*-

"""Dense operator algebra for the two-qubit + cavity Hilbert space.  Basis ordering is
fixed throughout the codebase as qubit1 ⊗ qubit2 ⊗ cavity (slots `Q1`, `Q2`, `CAV`), with
each qubit in the (g, e) ordering, so that σ^z = diag(-1, +1) and σ⁺|g⟩ = |e⟩.  Cavity
levels are the Fock states 0..N.

Everything here is a pure function of immutable inputs (the `entries` array of an
`OperatorMatrix` is made read-only on construction).
"""

from dataclasses import dataclass
from collections.abc import Iterable, Sequence
from enum import StrEnum
from functools import reduce
import math

import numpy as np

from core import DimensionError, StateError

#####################
# basis conventions #
#####################

# subsystem slots
Q1  = 0
Q2  = 1
CAV = 2

# qubit levels
G = 0
E = 1

QUBIT_DIM = 2

# DensityMatrix tolerances
HERM_TOL  = 1e-10
TRACE_TOL = 1e-8
PSD_TOL   = 1e-7

def system_layout(n_fock: int) -> tuple[int, int, int]:
    """Subsystem dims for the full space, with cavity truncated at `n_fock` photons.
    """
    if n_fock < 1:
        raise DimensionError(f"n_fock must be >= 1 (got {n_fock})")
    return (QUBIT_DIM, QUBIT_DIM, n_fock + 1)

##################
# OperatorMatrix #
##################

@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex square matrix, along with the dims of the subsystems it acts on (in
    slot order).  The product of `subsystem_dims` must equal `dim`.
    """
    entries:        np.ndarray
    subsystem_dims: tuple[int, ...] = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f"entries must be a square matrix (got shape {entries.shape})")
        dims = self.subsystem_dims
        if dims is None:
            dims = (entries.shape[0],)
        dims = tuple(int(d) for d in dims)
        if not dims or min(dims) < 1:
            raise DimensionError(f"invalid subsystem dims {dims}")
        if math.prod(dims) != entries.shape[0]:
            raise DimensionError(f"subsystem dims {dims} do not match dim {entries.shape[0]}")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'subsystem_dims', dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> 'OperatorMatrix':
        return type(self)(self.entries.conj().T, self.subsystem_dims)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def allclose(self, other: 'OperatorMatrix', atol: float = 1e-12) -> bool:
        """Elementwise comparison (dims must match, otherwise `False`).
        """
        if self.subsystem_dims != other.subsystem_dims:
            return False
        return bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))

    def _check_dims(self, other: 'OperatorMatrix') -> None:
        if self.dim != other.dim:
            raise DimensionError(f"operand dims do not match ({self.dim} vs. {other.dim})")

    def __matmul__(self, other: 'OperatorMatrix') -> 'OperatorMatrix':
        self._check_dims(other)
        return OperatorMatrix(self.entries @ other.entries, self.subsystem_dims)

    def __add__(self, other: 'OperatorMatrix') -> 'OperatorMatrix':
        self._check_dims(other)
        return OperatorMatrix(self.entries + other.entries, self.subsystem_dims)

    def __sub__(self, other: 'OperatorMatrix') -> 'OperatorMatrix':
        self._check_dims(other)
        return OperatorMatrix(self.entries - other.entries, self.subsystem_dims)

    def __mul__(self, scalar: complex) -> 'OperatorMatrix':
        return OperatorMatrix(self.entries * scalar, self.subsystem_dims)

    __rmul__ = __mul__

    def __neg__(self) -> 'OperatorMatrix':
        return OperatorMatrix(-self.entries, self.subsystem_dims)

class DensityMatrix(OperatorMatrix):
    """Same layout as `OperatorMatrix`; Hermitian, unit trace, and PSD up to tolerance.
    Invariants are not enforced on construction (intermediate integrator states are not
    checked), call `check()` to validate.
    """
    @property
    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def check(self, herm_tol: float = HERM_TOL, trace_tol: float = TRACE_TOL,
              psd_tol: float = PSD_TOL) -> 'DensityMatrix':
        """Validate state invariants, raise `StateError` on violation; returns `self` for
        call chaining.
        """
        if (defect := self.hermiticity_defect) > herm_tol:
            raise StateError(f"density matrix not Hermitian (defect {defect:.3g})")
        if abs((tr := self.trace().real) - 1.0) > trace_tol:
            raise StateError(f"density matrix trace {tr!r} not within {trace_tol} of 1")
        if (min_ev := self.min_eigenvalue) < -psd_tol:
            raise StateError(f"density matrix not PSD (min eigenvalue {min_ev:.3g})")
        return self

########################
# operator constructors #
########################

def identity(dim: int) -> OperatorMatrix:
    return OperatorMatrix(np.eye(dim, dtype=complex), (dim,))

def annihilation(n_levels: int) -> OperatorMatrix:
    """Truncated bosonic lowering operator on `n_levels` Fock states.
    """
    if n_levels < 2:
        raise DimensionError(f"n_levels must be >= 2 (got {n_levels})")
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, n_levels)), k=1), (n_levels,))

def creation(n_levels: int) -> OperatorMatrix:
    return annihilation(n_levels).dag()

def number_op(n_levels: int) -> OperatorMatrix:
    a = annihilation(n_levels)
    return a.dag() @ a

class Pauli(StrEnum):
    X        = 'x'
    Y        = 'y'
    Z        = 'z'
    PLUS     = 'plus'
    MINUS    = 'minus'
    IDENTITY = 'identity'

# (g, e) ordering: σ⁺ = |e⟩⟨g| sits at row E, column G
PAULI_MATRICES = {
    Pauli.X       : [[0, 1], [1, 0]],
    Pauli.Y       : [[0, 1j], [-1j, 0]],  # σ⁺ = (σ^x + iσ^y)/2 in this ordering
    Pauli.Z       : [[-1, 0], [0, 1]],
    Pauli.PLUS    : [[0, 0], [1, 0]],
    Pauli.MINUS   : [[0, 1], [0, 0]],
    Pauli.IDENTITY: [[1, 0], [0, 1]]
}

def pauli(which: Pauli | str) -> OperatorMatrix:
    """2x2 qubit operator in the (g, e) basis.
    """
    return OperatorMatrix(np.array(PAULI_MATRICES[Pauli(which)], dtype=complex), (QUBIT_DIM,))

def kron(A: OperatorMatrix, B: OperatorMatrix) -> OperatorMatrix:
    """Kronecker product, with subsystem dims concatenated.
    """
    return OperatorMatrix(np.kron(A.entries, B.entries), A.subsystem_dims + B.subsystem_dims)

def tensor(*ops: OperatorMatrix) -> OperatorMatrix:
    """Kronecker product of all specified operators, in slot order.
    """
    if not ops:
        raise DimensionError("tensor requires at least one operand")
    return reduce(kron, ops)

def embed(op: OperatorMatrix, slot: int, layout: Sequence[int]) -> OperatorMatrix:
    """Identity on every slot of `layout` except `slot`, where `op` acts.
    """
    layout = tuple(layout)
    if not 0 <= slot < len(layout):
        raise DimensionError(f"slot {slot} out of range for layout {layout}")
    if op.dim != layout[slot]:
        raise DimensionError(f"op dim {op.dim} does not match layout[{slot}] = {layout[slot]}")
    factors = [identity(d) for d in layout]
    factors[slot] = OperatorMatrix(op.entries, (op.dim,))
    return tensor(*factors)

#################
# partial trace #
#################

def partial_trace(rho: OperatorMatrix, keep: Iterable[int]) -> OperatorMatrix:
    """Reduced operator on the `keep` slots (returned in slot order).  The return type
    follows the input (i.e. a `DensityMatrix` in, `DensityMatrix` out).
    """
    dims = rho.subsystem_dims
    keep = set(keep)
    if not keep:
        raise DimensionError("at least one slot must be kept")
    if bad := [s for s in keep if not 0 <= s < len(dims)]:
        raise DimensionError(f"invalid slot(s) {bad} for subsystem dims {dims}")

    tens = rho.entries.reshape(dims + dims)
    nsub = len(dims)
    # trace from the highest slot down, so lower slot axes keep their positions
    for slot in sorted(set(range(len(dims))) - keep, reverse=True):
        tens = np.trace(tens, axis1=slot, axis2=slot + nsub)
        nsub -= 1
    kept_dims = tuple(dims[s] for s in sorted(keep))
    red_dim = math.prod(kept_dims)
    return type(rho)(tens.reshape(red_dim, red_dim), kept_dims)

##########
# states #
##########

def basis_ket(layout: Sequence[int], levels: Sequence[int]) -> np.ndarray:
    """Product basis vector with the specified level in each slot.
    """
    if len(levels) != len(layout):
        raise DimensionError(f"levels {levels} do not match layout {layout}")
    ket = np.zeros(math.prod(layout), dtype=complex)
    ket[np.ravel_multi_index(tuple(levels), tuple(layout))] = 1.0
    return ket

def ket2dm(ket: np.ndarray, layout: Sequence[int]) -> DensityMatrix:
    """Projector onto the (normalized) state vector.
    """
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return DensityMatrix(np.outer(ket, ket.conj()), tuple(layout))

def product_state(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of per-slot state vectors.
    """
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))
