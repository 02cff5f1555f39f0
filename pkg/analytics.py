# -*- coding: utf-8 -*-

"""Second-order perturbation theory for the moving-qubit pair, starting from the cavity
vacuum: photon-exchange amplitude X, single-qubit emission probability P_e, and the
concurrence estimate C = 2·max(|X| - P_e, 0).

Three levels of evaluation are provided, each usable to cross-check the others:

- numeric (`numeric_X`, `numeric_Pe`): direct quadrature of the time-ordered integrals
  for arbitrary modulation profiles (authoritative)
- Bessel-series closed forms (`bessel_X`, `bessel_Pe`, `resonant_concurrence`): the
  textbook expansions for the λ/4-separated entanglement pair, as usually quoted
- harmonic analysis (`fourier_coefficient`, `secular_X`, `secular_Pe`, `series_Pe`):
  exact Jacobi-Anger expansion of the actual profiles, giving the secular (T²) growth
  coefficients for any commensurate drive

All times here are in units of 1/ω.
"""

from dataclasses import dataclass
from collections.abc import Callable, Iterable
from typing import NamedTuple
import csv
import math

import numpy as np
from scipy.integrate import quad

from core import log, DataError, ConfigError, UnsupportedProfileError, QuadratureError
from model import (ModulationProfile, SystemConfig, modulation_value, mirror_to_mirror, Pair,
                   QUBITS)
from operators import Q1, Q2

#########
# Bessel #
#########

BESSEL_MAX_X = 10.0
BESSEL_MAX_TERMS = 100

def bessel_j(n: int, x: float) -> float:
    """J_n(x) by direct power series Σ_m (-1)^m·(x/2)^(2m+n) / (m!·(m+n)!), summed (with
    `math.fsum`) until terms fall below double precision.  Negative orders use
    J_-n = (-1)^n·J_n.
    """
    if abs(x) > BESSEL_MAX_X:
        raise DataError(f"bessel_j argument {x} outside supported domain |x| <= {BESSEL_MAX_X}")
    if n < 0:
        return (-1) ** n * bessel_j(-n, x)
    half = x / 2.0
    term = half ** n / math.factorial(n)
    terms = [term]
    for m in range(1, BESSEL_MAX_TERMS):
        term *= -half * half / (m * (m + n))
        terms.append(term)
        if abs(term) < 1e-17 * max(abs(terms[0]), 1e-300) and m > 2:
            break
    return math.fsum(terms)

J0_PI_4 = bessel_j(0, math.pi / 4)
J1_PI_2 = bessel_j(1, math.pi / 2)
J2_PI_2 = bessel_j(2, math.pi / 2)
J2_PI_4 = bessel_j(2, math.pi / 4)

####################
# PerturbativeInput #
####################

@dataclass(frozen=True)
class PerturbativeInput:
    """Parameters for the perturbative analytics.  `g` and `omega_q` may each be specified
    as a single value (applied to both qubits) or per qubit.
    """
    g:        Pair
    omega_q:  Pair
    profiles: tuple[ModulationProfile, ModulationProfile]
    T:        float
    omega:    float = 1.0

    def __post_init__(self):
        for name in ('g', 'omega_q'):
            val = getattr(self, name)
            if isinstance(val, (int, float)):
                val = (float(val), float(val))
            object.__setattr__(self, name, tuple(val))
        object.__setattr__(self, 'profiles', tuple(self.profiles))
        if len(self.g) != 2 or len(self.omega_q) != 2 or len(self.profiles) != 2:
            raise ConfigError("perturbative input requires one coupling, frequency, and profile "
                              "per qubit")
        if self.T < 0.0:
            raise ConfigError(f"interaction time must be >= 0 (got {self.T})")
        if not self.valid:
            log.warning(f"perturbative validity violated: gT = {self.gT:.3g} >= 1")

    @classmethod
    def from_config(cls, cfg: SystemConfig, T: float) -> 'PerturbativeInput':
        return cls(g=cfg.g, omega_q=cfg.omega_q, profiles=cfg.modulation, T=T, omega=cfg.omega)

    @property
    def delta(self) -> Pair:
        """Δ_ℓ = ω^q_ℓ - ω
        """
        return tuple(w - self.omega for w in self.omega_q)

    @property
    def equal_frequencies(self) -> bool:
        return self.omega_q[Q1] == self.omega_q[Q2]

    def emission_freq(self, qubit: int, initial_excited: bool = False) -> float:
        """Phase rate of the single-qubit emission integrand: -Δ_ℓ from the excited state,
        ω^q_ℓ + ω (counterrotating) from the ground state.
        """
        if initial_excited:
            return -self.delta[qubit]
        return self.omega_q[qubit] + self.omega

    @property
    def omega_d(self) -> Pair:
        return tuple(p.omega_d if p.enabled else 0.0 for p in self.profiles)

    @property
    def gT(self) -> float:
        return max(abs(g) for g in self.g) * self.T

    @property
    def valid(self) -> bool:
        return self.gT < 1.0

    def with_time(self, T: float) -> 'PerturbativeInput':
        return PerturbativeInput(self.g, self.omega_q, self.profiles, T, self.omega)

@dataclass(frozen=True)
class PerturbativeResult:
    X:     complex
    P_e:   float
    valid: bool

    @property
    def C(self) -> float:
        """2·max(|X| - P_e, 0), recomputed on access.
        """
        return 2.0 * max(abs(self.X) - self.P_e, 0.0)

##############
# quadrature #
##############

GL_NODES       = 16
MAX_REFINE     = 8
X_REL_TOL      = 1e-6
PE_REL_TOL     = 1e-8
ABS_FLOOR      = 1e-13

GL_X, GL_W = np.polynomial.legendre.leggauss(GL_NODES)

ComplexFn = Callable[[np.ndarray], np.ndarray]

def _fastest_phase_rate(inp: PerturbativeInput) -> float:
    """Upper bound on the phase rate of any integrand (used to size quadrature panels).
    """
    drive = max(p.omega_d * (1.0 + p.delta_f) if p.enabled else 0.0 for p in inp.profiles)
    return max(abs(w) for w in inp.omega_q) + abs(inp.omega) + drive

def ordered_integral(outer: ComplexFn, inner: ComplexFn, T: float, n_panels: int) -> complex:
    """∫_0^T dt2 outer(t2) ∫_0^t2 dt1 inner(t1), by composite Gauss-Legendre on
    `n_panels` equal panels.  The inner integral is cumulative over whole panels, plus a
    mapped Gauss-Legendre rule on the partial panel up to each outer node.
    """
    h = T / n_panels
    starts = np.arange(n_panels) * h
    t2 = starts[:, None] + h / 2.0 * (GL_X + 1.0)
    panel_sums = h / 2.0 * (inner(t2) @ GL_W)
    cum = np.concatenate(([0.0], np.cumsum(panel_sums)[:-1]))
    span = t2 - starts[:, None]
    t1 = starts[:, None, None] + span[:, :, None] / 2.0 * (GL_X + 1.0)
    partial = span / 2.0 * (inner(t1) @ GL_W)
    return complex(h / 2.0 * np.sum((outer(t2) * (cum[:, None] + partial)) @ GL_W))

def refined(integrate: Callable[[int], complex], n_start: int, scale: float,
            rel_tol: float, what: str) -> complex:
    """Doubles the panel count until successive results agree to `rel_tol` (relative to
    the result, with an absolute floor relative to `scale`).
    """
    n = max(4, n_start)
    prev = integrate(n)
    est = math.inf
    for _ in range(MAX_REFINE):
        n *= 2
        cur = integrate(n)
        est = abs(cur - prev)
        log.debug(f"{what}: {n} panels, est. error {est:.3g}")
        if est <= rel_tol * abs(cur) + ABS_FLOOR * scale:
            return cur
        prev = cur
    raise QuadratureError(f"{what} did not converge (est. error {est:.3g})", est)

def _rotating(p: ModulationProfile, freq: float) -> ComplexFn:
    return lambda t: modulation_value(p, t) * np.exp(1j * freq * t)

def numeric_X(inp: PerturbativeInput, rel_tol: float = X_REL_TOL) -> complex:
    """X = g1·g2·∫_0^T dt2 ∫_0^t2 dt1 [m2(t2)·m1(t1)·e^(iΔ2·t2)·e^(i(ω^q1+ω)·t1)
                                    + m1(t2)·m2(t1)·e^(iΔ1·t2)·e^(i(ω^q2+ω)·t1)]

    (the qubit emitting at t1 through the counterrotating term, the other absorbing at t2)
    """
    if inp.T == 0.0 or inp.g[Q1] * inp.g[Q2] == 0.0:
        return 0j
    p1, p2 = inp.profiles
    slow = inp.delta
    fast = [inp.emission_freq(q) for q in QUBITS]
    n_start = math.ceil(inp.T * _fastest_phase_rate(inp) / math.pi)

    def integrate(n: int) -> complex:
        return (ordered_integral(_rotating(p2, slow[Q2]), _rotating(p1, fast[Q1]), inp.T, n) +
                ordered_integral(_rotating(p1, slow[Q1]), _rotating(p2, fast[Q2]), inp.T, n))

    raw = refined(integrate, n_start, inp.T ** 2, rel_tol, "numeric_X")
    return inp.g[Q1] * inp.g[Q2] * raw

def emission_amplitude(p: ModulationProfile, freq: float, T: float,
                       rel_tol: float = PE_REL_TOL) -> complex:
    """∫_0^T m(t)·e^(i·freq·t) dt by adaptive (Gauss-Kronrod) quadrature on the real and
    imaginary parts.
    """
    if T == 0.0:
        return 0j
    rate = abs(freq) + (p.omega_d * (1.0 + p.delta_f) if p.enabled else 0.0)
    limit = max(200, 50 * math.ceil(T * rate / (2.0 * math.pi)))
    epsabs = ABS_FLOOR * T
    parts = []
    for fn in (np.cos, np.sin):
        val, err = quad(lambda t: float(modulation_value(p, t)) * fn(freq * t), 0.0, T,
                        epsabs=epsabs, epsrel=rel_tol, limit=limit)
        parts.append((val, err))
    (re, re_err), (im, im_err) = parts
    amp = complex(re, im)
    est = math.hypot(re_err, im_err)
    if est > 100.0 * max(rel_tol * abs(amp), epsabs):
        raise QuadratureError(f"emission amplitude did not converge (est. error {est:.3g})", est)
    return amp

def numeric_Pe(inp: PerturbativeInput, qubit: int = Q2, initial_excited: bool = False) -> float:
    """Emission probability for the specified qubit.  Ground case (counterrotating):
    g²·|∫_0^T m(t)·e^(i(ω^q+ω)t) dt|².  Excited case: g²·|∫_0^T m(t)·e^(-iΔt) dt|² (which
    reduces to g²·|∫ m dt|² at Δ = 0).
    """
    if qubit not in QUBITS:
        raise DataError(f"bad qubit index {qubit}")
    freq = inp.emission_freq(qubit, initial_excited)
    amp = emission_amplitude(inp.profiles[qubit], freq, inp.T)
    return inp.g[qubit] ** 2 * abs(amp) ** 2

def perturbative_concurrence(inp: PerturbativeInput) -> PerturbativeResult:
    """Numeric X and P_e (the larger of the two single-qubit ground-case emission
    probabilities) combined into the concurrence estimate.
    """
    X = numeric_X(inp)
    P_e = max(numeric_Pe(inp, q) for q in QUBITS)
    return PerturbativeResult(X, P_e, inp.valid)

######################
# harmonic analysis #
######################

RESONANCE_TOL = 1e-9

def fourier_coefficient(p: ModulationProfile, n: int) -> complex:
    """Coefficient c_n of e^(i·n·omega_d·t) in m(t).  From Jacobi-Anger,

        cos(f0 + z·cos θ) = Σ_n J_n(z)·cos(f0 + n·π/2)·e^(i·n·θ),  θ = omega_d·t + phase

    A static profile (disabled, or omega_d = 0) only has c_0.
    """
    if not p.enabled or p.omega_d == 0.0:
        return complex(modulation_value(p, 0.0)) if n == 0 else 0j
    return bessel_j(n, p.delta_f) * math.cos(p.f0 + n * math.pi / 2) * np.exp(1j * n * p.phase)

def _resonant_sum(p: ModulationProfile, freq: float, max_order: int) -> complex:
    """Σ c_n over harmonics with freq + n·omega_d = 0 (i.e. non-oscillating terms).
    """
    omega_d = p.omega_d if p.enabled else 0.0
    if omega_d == 0.0:
        return fourier_coefficient(p, 0) if abs(freq) < RESONANCE_TOL else 0j
    total = 0j
    for n in range(-max_order, max_order + 1):
        if abs(freq + n * omega_d) < RESONANCE_TOL:
            total += fourier_coefficient(p, n)
    return total

SECULAR_MAX_ORDER = 12

def secular_X(inp: PerturbativeInput) -> complex:
    """Secular (T²-growing) part of X.  Only harmonic pairs for which both the outer
    (e^(iΔ·t2)) and inner (e^(i(ω^q+ω)·t1)) phases are cancelled contribute, each with
    ∫∫_(t1<t2) = T²/2.
    """
    p1, p2 = inp.profiles
    slow = inp.delta
    fast = [inp.emission_freq(q) for q in QUBITS]
    res = lambda p, freq: _resonant_sum(p, freq, SECULAR_MAX_ORDER)
    amp = res(p2, slow[Q2]) * res(p1, fast[Q1]) + res(p1, slow[Q1]) * res(p2, fast[Q2])
    return inp.g[Q1] * inp.g[Q2] * amp * inp.T ** 2 / 2.0

def secular_Pe(inp: PerturbativeInput, qubit: int = Q2, initial_excited: bool = False) -> float:
    """Secular (T²-growing) part of P_e.
    """
    freq = inp.emission_freq(qubit, initial_excited)
    amp = _resonant_sum(inp.profiles[qubit], freq, SECULAR_MAX_ORDER)
    return inp.g[qubit] ** 2 * abs(amp) ** 2 * inp.T ** 2

def phase_integral(freq: float, T: float) -> complex:
    """∫_0^T e^(i·freq·t) dt
    """
    if abs(freq) * T < RESONANCE_TOL:
        return complex(T)
    return complex(np.expm1(1j * freq * T) / (1j * freq))

def series_Pe(inp: PerturbativeInput, qubit: int = Q2, initial_excited: bool = False,
              max_order: int = 8) -> float:
    """P_e from the Jacobi-Anger series of the profile, truncated at |n| <= max_order, and
    integrated term by term.
    """
    p = inp.profiles[qubit]
    freq = inp.emission_freq(qubit, initial_excited)
    omega_d = p.omega_d if p.enabled else 0.0
    orders = range(-max_order, max_order + 1) if omega_d else [0]
    amp = sum(fourier_coefficient(p, n) * phase_integral(freq + n * omega_d, inp.T) for n in orders)
    return inp.g[qubit] ** 2 * abs(amp) ** 2

##########################
# printed Bessel forms #
##########################

SCENARIO_TOL = 1e-9

def _check_entanglement_pair(inp: PerturbativeInput) -> float:
    """Returns the (common) drive frequency if the profiles are the λ/4-separated
    entanglement pair, otherwise raises `UnsupportedProfileError`.
    """
    p1, p2 = inp.profiles
    pair_ok = (inp.equal_frequencies and p1.enabled and p2.enabled
               and abs(p1.f0 - math.pi / 4) < SCENARIO_TOL
               and abs(p2.f0 - 3 * math.pi / 4) < SCENARIO_TOL
               and abs(p1.delta_f - math.pi / 4) < SCENARIO_TOL
               and abs(p2.delta_f - math.pi / 4) < SCENARIO_TOL
               and p1.phase == p2.phase == 0.0
               and abs(p1.omega_d - p2.omega_d) < SCENARIO_TOL)
    if not pair_ok:
        raise UnsupportedProfileError("Bessel forms only cover the λ/4-separated entanglement pair "
                                      "with a common drive and equal qubit frequencies")
    return p1.omega_d

def ordered_phase_integral(outer: float, inner: float, T: float) -> complex:
    """∫_0^T dt2 e^(i·outer·t2) ∫_0^t2 dt1 e^(i·inner·t1), in closed form.
    """
    if abs(inner) * T < RESONANCE_TOL:
        # ∫_0^T t·e^(i·outer·t) dt
        if abs(outer) * T < RESONANCE_TOL:
            return complex(T * T / 2.0)
        e = np.exp(1j * outer * T)
        return complex(T * e / (1j * outer) - (e - 1.0) / (1j * outer) ** 2)
    return (phase_integral(outer + inner, T) - phase_integral(outer, T)) / (1j * inner)

def bessel_X(inp: PerturbativeInput) -> complex:
    """Closed form g²·∫∫_(t1<t2) e^(iΔ·t2)·e^(i(2ω^q-Δ)·t1)·B(t1), with the equal-time
    product expansion B(t) = J0(π/2) - 2·J2(π/2)·cos(2ω_d·t) + 2·J4(π/2)·cos(4ω_d·t),
    integrated term by term.
    """
    omega_d = _check_entanglement_pair(inp)
    if inp.T == 0.0:
        return 0j
    z = math.pi / 2
    # B(t) = Σ_k b_k·e^(i·k·ω_d·t)
    bracket = {0: bessel_j(0, z), 2: -bessel_j(2, z), -2: -bessel_j(2, z),
               4: bessel_j(4, z), -4: bessel_j(4, z)}
    slow = inp.delta[Q1]
    fast = inp.emission_freq(Q1)
    total = sum(b * ordered_phase_integral(slow, fast + k * omega_d, inp.T)
                for k, b in bracket.items())
    return inp.g[Q1] * inp.g[Q2] * total

def bessel_Pe(inp: PerturbativeInput) -> float:
    """Closed form (g²/2)·|∫_0^T e^(i(2ω^q-Δ)t)·B(t) dt|², with B(t) = J0(π/4)
    + 2·J1(π/4)·cos(ω_d·t) - 2·J2(π/4)·cos(2ω_d·t) - 2·J3(π/4)·cos(3ω_d·t)
    + 2·J4(π/4)·cos(4ω_d·t).
    """
    omega_d = _check_entanglement_pair(inp)
    if inp.T == 0.0:
        return 0.0
    z = math.pi / 4
    signs = {0: 1.0, 1: 1.0, 2: -1.0, 3: -1.0, 4: 1.0}
    fast = inp.emission_freq(Q2)
    amp = phase_integral(fast, inp.T) * bessel_j(0, z)
    for k in range(1, 5):
        b = signs[k] * bessel_j(k, z)
        amp += b * (phase_integral(fast + k * omega_d, inp.T) + phase_integral(fast - k * omega_d, inp.T))
    return inp.g[Q2] ** 2 / 2.0 * abs(amp) ** 2

def resonant_concurrence(g: float, T: float) -> float:
    """g²T²·[J2(π/2) - J2(π/4)²], for Δ = 0 and ω_d = ω = ω^q.
    """
    if g * T >= 1.0:
        log.warning(f"perturbative validity violated: gT = {g * T:.3g} >= 1")
    return g * g * T * T * (J2_PI_2 - J2_PI_4 ** 2)

def subradiance_Pe(g: float, omega_d: float, T: float) -> float:
    """Leading-order excited-qubit emission for the mirror-to-mirror trajectory at Δ = 0,
    4g²·J1(π/2)²·sin²(ω_d·T)/ω_d²; the static limit (qubit at the mirror) is g²T².
    """
    if omega_d == 0.0:
        return g * g * T * T
    return 4.0 * g * g * J1_PI_2 ** 2 * math.sin(omega_d * T) ** 2 / omega_d ** 2

def excited_Pe_series(g: float, omega_d: float, T: float, max_order: int = 5) -> float:
    """Same as `subradiance_Pe`, but with the odd harmonics (J3, J5, ...) up to
    `max_order` included.
    """
    inp = PerturbativeInput(g=g, omega_q=1.0, profiles=(mirror_to_mirror(omega_d),) * 2, T=T)
    return series_Pe(inp, Q2, initial_excited=True, max_order=max_order)

###################
# analytics sweep #
###################

ORIGIN_NUMERIC = 'numeric'
ORIGIN_SECULAR = 'secular'
ORIGIN_BESSEL  = 'bessel'

class AnalyticsRow(NamedTuple):
    time:   float  # ωT/2π
    C:      float
    p_q1:   float
    p_q2:   float
    abs_X:  float
    origin: str

ANALYTICS_HEADER = ['time', 'concurrence', 'p_q1', 'p_q2', 'abs_x', 'origin']
CSV_FMT = '.12g'

def analytics_rows(inp: PerturbativeInput, periods: Iterable[float]) -> list[AnalyticsRow]:
    """Numeric, secular, and (for the entanglement pair only) Bessel-form evaluations at
    each of the specified interaction times (in periods ωT/2π).
    """
    try:
        _check_entanglement_pair(inp)
        with_bessel = True
    except UnsupportedProfileError:
        with_bessel = False

    rows = []
    for period in periods:
        sub = inp.with_time(period * 2.0 * math.pi / inp.omega)
        X = numeric_X(sub)
        pe = [numeric_Pe(sub, q) for q in QUBITS]
        rows.append(AnalyticsRow(period, PerturbativeResult(X, max(pe), sub.valid).C, *pe,
                                 abs(X), ORIGIN_NUMERIC))
        X = secular_X(sub)
        pe = [secular_Pe(sub, q) for q in QUBITS]
        rows.append(AnalyticsRow(period, PerturbativeResult(X, max(pe), sub.valid).C, *pe,
                                 abs(X), ORIGIN_SECULAR))
        if with_bessel:
            X = bessel_X(sub)
            pe = bessel_Pe(sub)
            rows.append(AnalyticsRow(period, PerturbativeResult(X, pe, sub.valid).C, pe, pe,
                                     abs(X), ORIGIN_BESSEL))
    return rows

def write_analytics_csv(path: str, rows: Iterable[AnalyticsRow]) -> str:
    """Header `time,concurrence,p_q1,p_q2,abs_x,origin`; the first four columns are as in the
    simulation trace CSV, with p_q1 and p_q2 the single-qubit emission probabilities.
    """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(ANALYTICS_HEADER)
        for row in rows:
            writer.writerow([format(x, CSV_FMT) for x in row[:-1]] + [row.origin])
    log.info(f"wrote analytics to {path}")
    return path
