# -*- coding: utf-8 -*-

"""Scenario specs, named presets, and the runner/CLI that turns them into CSV time
series, concurrence maps, convergence reports, and perturbative analytics tables.

A scenario is a base `SystemConfig`, an initial state, a duration (in cavity periods
ωt/2π), and optionally a sweep: a grid over named config fields (cartesian product, in
the order specified), each grid point optionally repeated for a list of "variants" (sets
of field overrides, e.g. a decoupled reference qubit).  Config files are flat
`key = value` text, see `config/schema.cfg`.
"""

from dataclasses import dataclass, replace
from collections.abc import Sequence, Iterable
from concurrent.futures import ProcessPoolExecutor
from enum import StrEnum
from itertools import product
from typing import NamedTuple
import csv
import math
import os
import sys
import time

import numpy as np
from ckautils import typecast, parse_argv

from core import (log, OutputDir, ConfigError, DataError, LogicError, IntegrationError,
                  QuadratureError)
from operators import G, E, CAV, DensityMatrix, basis_ket, ket2dm, product_state
from model import (SystemConfig, ModulationProfile, CONFIG_KEYS, config_to_dict, config_from_dict,
                   config_with, parse_bool, dephasing_rate, entanglement_pair, mirror_to_mirror,
                   quarter_point)
from dynamics import IntegratorOptions, evolve
from observables import ObservableTrace, CSV_FMT
from analytics import PerturbativeInput, analytics_rows, write_analytics_csv
from database import db_init, db_close, db_reset, now_str, MANIFEST_NAME
from schema import (RunStatus, RunInfo, SweepPoint, create_schema, nullable, finish_run,
                    failed_points)

##################
# initial states #
##################

class InitialState(StrEnum):
    GG0 = 'gg0'
    GE0 = 'ge0'
    EG0 = 'eg0'
    EE0 = 'ee0'
    PP0 = 'pp0'  # |+ + 0⟩, |+⟩ = (|e⟩ + |g⟩)/√2

QUBIT_LEVELS = {
    InitialState.GG0: (G, G),
    InitialState.GE0: (G, E),
    InitialState.EG0: (E, G),
    InitialState.EE0: (E, E)
}

def initial_state(which: InitialState | str, layout: Sequence[int]) -> DensityMatrix:
    """Product state with the cavity in vacuum.
    """
    which = InitialState(which)
    if which == InitialState.PP0:
        plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
        vacuum = np.zeros(layout[CAV])
        vacuum[0] = 1.0
        ket = product_state(plus, plus, vacuum)
    else:
        ket = basis_ket(layout, (*QUBIT_LEVELS[which], 0))
    return ket2dm(ket, layout)

################
# ScenarioSpec #
################

# sweep/variant key for the initial state (all other keys are config keys)
INITIAL_STATE_KEY = 'initial_state'

SweepValue = float | int | bool | InitialState
Overrides  = tuple[tuple[str, SweepValue], ...]

DFLT_T_FINAL = 40.0
DFLT_SAMPLES = 401

def coerce_value(key: str, raw: object) -> SweepValue:
    """Cast a (possibly string) value to the type of the named sweep key.
    """
    try:
        if key == INITIAL_STATE_KEY:
            return InitialState(str(raw).strip())
        if key not in CONFIG_KEYS:
            raise ConfigError(f"'{key}' does not name a config field")
        if key.endswith('.enabled'):
            return parse_bool(raw)
        if key == 'system.n_fock':
            return int(raw)
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value '{raw}' for '{key}'") from e

@dataclass(frozen=True)
class ScenarioSpec:
    """`sweep` is a sequence of (key, values) grid axes; `variants` is a sequence of
    override sets, each applied to every grid point in addition to the unmodified point.
    """
    name:          str
    config:        SystemConfig
    initial_state: InitialState = InitialState.GG0
    t_final:       float        = DFLT_T_FINAL
    samples:       int          = DFLT_SAMPLES
    sweep:         tuple[tuple[str, tuple[SweepValue, ...]], ...] = ()
    variants:      tuple[Overrides, ...] = ()
    output_dir:    str | None   = None

    def __post_init__(self):
        object.__setattr__(self, 'initial_state', coerce_value(INITIAL_STATE_KEY, self.initial_state))
        if not self.t_final > 0.0:
            raise ConfigError(f"t_final must be positive (got {self.t_final})")
        if self.samples < 2:
            raise ConfigError(f"samples must be >= 2 (got {self.samples})")
        sweep = tuple((key, tuple(coerce_value(key, v) for v in values)) for key, values in self.sweep)
        if dups := {key for key, _ in sweep if [k for k, _ in sweep].count(key) > 1}:
            raise ConfigError(f"duplicate sweep field(s): {', '.join(sorted(dups))}")
        if empty := [key for key, values in sweep if not values]:
            raise ConfigError(f"empty sweep field(s): {', '.join(empty)}")
        variants = tuple(tuple((key, coerce_value(key, v)) for key, v in var) for var in self.variants)
        object.__setattr__(self, 'sweep', sweep)
        object.__setattr__(self, 'variants', variants)

    @property
    def out_dir(self) -> str:
        """Output directory (created if needed).
        """
        return OutputDir(self.name, self.output_dir)

    def points(self) -> list[dict[str, SweepValue]]:
        """Override sets for all sweep points, in run order.
        """
        keys = [key for key, _ in self.sweep]
        grid = product(*(values for _, values in self.sweep))
        return [dict(zip(keys, combo)) | dict(var) for combo in grid for var in ((),) + self.variants]

    def point_setup(self, overrides: dict[str, SweepValue]) -> tuple[SystemConfig, InitialState]:
        """Config and initial state for a sweep point.
        """
        overrides = dict(overrides)
        which = overrides.pop(INITIAL_STATE_KEY, self.initial_state)
        return config_with(self.config, overrides), InitialState(which)

    def with_overrides(self, **kwargs) -> 'ScenarioSpec':
        """Copy with top-level overrides; `fock` sets the truncation of the base config.
        """
        if (fock := kwargs.pop('fock', None)) is not None:
            kwargs['config'] = replace(kwargs.get('config', self.config), n_fock=int(fock))
        if (output := kwargs.pop('output', None)) is not None:
            kwargs['output_dir'] = output
        return replace(self, **kwargs)

#################
# serialization #
#################

def fmt_value(val: object) -> str:
    if isinstance(val, StrEnum):
        return str(val)
    if isinstance(val, float):
        return repr(val)
    return str(val)

def serialize_spec(spec: ScenarioSpec) -> str:
    """Flat `key = value` text (floats via `repr`, so parsing is lossless).
    """
    lines = [f"# scenario: {spec.name}",
             f"scenario.name = {spec.name}",
             f"scenario.initial_state = {spec.initial_state}",
             f"scenario.t_final = {fmt_value(float(spec.t_final))}",
             f"scenario.samples = {spec.samples}"]
    if spec.output_dir:
        lines.append(f"scenario.output = {spec.output_dir}")
    lines += [f"{key} = {fmt_value(val)}" for key, val in config_to_dict(spec.config).items()]
    for key, values in spec.sweep:
        lines.append(f"sweep.{key} = {', '.join(fmt_value(v) for v in values)}")
    for i, var in enumerate(spec.variants, 1):
        lines += [f"variant.{i}.{key} = {fmt_value(val)}" for key, val in var]
    return '\n'.join(lines) + '\n'

SCENARIO_FIELDS = {
    'scenario.name'         : 'name',
    'scenario.initial_state': 'initial_state',
    'scenario.t_final'      : 't_final',
    'scenario.samples'      : 'samples',
    'scenario.output'       : 'output_dir'
}

def parse_spec(text: str) -> ScenarioSpec:
    """Inverse of `serialize_spec`; `#` starts a comment, blank lines are ignored.
    """
    scenario = {}
    config = {}
    sweep = []
    variants: dict[int, list[tuple[str, SweepValue]]] = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value' (got '{line}')")
        key, raw = (s.strip() for s in line.split('=', 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        seen.add(key)

        if key in SCENARIO_FIELDS:
            scenario[SCENARIO_FIELDS[key]] = raw
        elif key.startswith('sweep.'):
            sweep_key = key.removeprefix('sweep.')
            sweep.append((sweep_key, tuple(coerce_value(sweep_key, typecast(v.strip()))
                                           for v in raw.split(',') if v.strip())))
        elif key.startswith('variant.'):
            _, num, var_key = key.split('.', 2)
            if not num.isdecimal():
                raise ConfigError(f"line {lineno}: bad variant number in '{key}'")
            variants.setdefault(int(num), []).append((var_key, coerce_value(var_key, typecast(raw))))
        elif key in CONFIG_KEYS:
            config[key] = typecast(raw)
        else:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")

    if 'name' not in scenario:
        raise ConfigError("scenario name not specified")
    try:
        return ScenarioSpec(name=scenario['name'],
                            config=config_from_dict(config),
                            initial_state=scenario.get('initial_state', InitialState.GG0),
                            t_final=float(scenario.get('t_final', DFLT_T_FINAL)),
                            samples=int(scenario.get('samples', DFLT_SAMPLES)),
                            sweep=tuple(sweep),
                            variants=tuple(tuple(variants[n]) for n in sorted(variants)),
                            output_dir=scenario.get('output_dir') or None)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad scenario value: {e}") from e

def load_spec(path: str) -> ScenarioSpec:
    with open(path) as f:
        return parse_spec(f.read())

###########
# presets #
###########

T2_T1_RATIO = 0.67
DRIVE_GRID  = (0.0, 0.5, 1.0, 1.5, 2.0)

def _system(g: tuple[float, float], gamma: float, kappa: float,
            modulation: tuple[ModulationProfile, ModulationProfile],
            omega_q: tuple[float, float] = (1.0, 1.0)) -> SystemConfig:
    gamma_phi = dephasing_rate(gamma, T2_T1_RATIO)
    return SystemConfig(omega=1.0, omega_q=omega_q, g=g, modulation=modulation, kappa=kappa,
                        gamma=(gamma, gamma), gamma_phi=(gamma_phi, gamma_phi))

def _fig2(name: str, kappa: float) -> ScenarioSpec:
    """Entanglement generation from vacuum, swept over both drive frequencies.
    """
    return ScenarioSpec(name, _system((0.02, 0.02), 0.002, kappa, entanglement_pair(1.0, 1.0)),
                        InitialState.GG0,
                        sweep=(('modulation.1.omega_d', DRIVE_GRID),
                               ('modulation.2.omega_d', DRIVE_GRID)))

def _fig3(name: str, kappa: float) -> ScenarioSpec:
    """Single-atom decay of a moving excited qubit (first qubit decoupled).
    """
    modulation = (mirror_to_mirror(0.0), mirror_to_mirror(0.0))
    return ScenarioSpec(name, _system((0.0, 0.02), 0.002, kappa, modulation), InitialState.GE0,
                        sweep=(('modulation.2.omega_d', DRIVE_GRID),))

def _fig4(name: str, omega_d2: float) -> ScenarioSpec:
    """Influence of the first qubit's motion on the decay of the second (plus the
    decoupled-first-qubit reference).
    """
    modulation = (mirror_to_mirror(0.0), mirror_to_mirror(omega_d2))
    return ScenarioSpec(name, _system((0.02, 0.02), 0.002, 0.2, modulation), InitialState.GE0,
                        sweep=(('modulation.1.omega_d', DRIVE_GRID),),
                        variants=((('system.g.1', 0.0),),))

def _fig5(name: str, amplitude: float) -> ScenarioSpec:
    """Zeno-like freezing with the first qubit at the quarter point (detuned by 0.1ω).
    """
    modulation = (quarter_point(amplitude, 2.0), mirror_to_mirror(2.0))
    return ScenarioSpec(name, _system((0.01, 0.01), 0.001, 0.1, modulation, omega_q=(1.1, 1.0)),
                        InitialState.GE0)

# off-resonant cavity, ω = 0.4·ω^q (all values converted to units of ω)
S1_SCALE = 1.0 / 0.4

def _s1(name: str, kappa: float) -> ScenarioSpec:
    g = 0.02 * S1_SCALE
    cfg = _system((g, g), 0.002 * S1_SCALE, kappa * S1_SCALE, entanglement_pair(1.0, 1.0),
                  omega_q=(S1_SCALE, S1_SCALE))
    return ScenarioSpec(name, cfg, InitialState.GG0,
                        sweep=(('modulation.1.omega_d', DRIVE_GRID),
                               ('modulation.2.omega_d', DRIVE_GRID)))

def _s3(name: str) -> ScenarioSpec:
    """Two-atom decay, both qubits at 2ω, versus the decoupled/static reference.
    """
    modulation = (mirror_to_mirror(2.0), mirror_to_mirror(2.0))
    return ScenarioSpec(name, _system((0.01, 0.01), 0.001, 0.001, modulation), InitialState.EE0,
                        sweep=(('system.kappa', (0.001, 0.1)),
                               (INITIAL_STATE_KEY, (InitialState.EE0, InitialState.PP0))),
                        variants=((('system.g.1', 0.0), ('modulation.2.omega_d', 0.0)),))

PRESETS = {
    'fig2a': lambda: _fig2('fig2a', 0.002),
    'fig2b': lambda: _fig2('fig2b', 0.2),
    'fig3a': lambda: _fig3('fig3a', 0.002),
    'fig3b': lambda: _fig3('fig3b', 0.2),
    'fig4a': lambda: _fig4('fig4a', 0.0),
    'fig4b': lambda: _fig4('fig4b', 1.0),
    'fig5a': lambda: _fig5('fig5a', 1 / 4),
    'fig5b': lambda: _fig5('fig5b', 1 / 16),
    's1a'  : lambda: _s1('s1a', 0.002),
    's1b'  : lambda: _s1('s1b', 0.2),
    's2a'  : lambda: _fig4('s2a', 0.0),
    's2b'  : lambda: _fig4('s2b', 1.0),
    's3'   : lambda: _s3('s3')
}

def preset(name: str) -> ScenarioSpec:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}'")
    return PRESETS[name]()

#######
# run #
#######

# manifest status thresholds
MAX_TRACE_DRIFT = 1e-6
MAX_FOCK_DELTA  = 1e-3
MIN_EIGENVALUE  = -1e-7
MAX_HERM_DEFECT = 1e-9

FOCK_EXTRA = 5
FOCK_FIELDS = ['concurrence', 'p_q1', 'p_q2']

class FockCheck(StrEnum):
    ALL   = 'all'
    FINAL = 'final'
    NONE  = 'none'

def parse_fock_check(val: object) -> FockCheck:
    """Command line value (which may have been typecast to `None` or a bool).
    """
    if val is None or val is False:
        return FockCheck.NONE
    try:
        return FockCheck(str(val).strip().lower())
    except ValueError as e:
        raise ConfigError(f"bad fock_check value '{val}' (must be all, final, or none)") from e

class PointTask(NamedTuple):
    seq:           int
    coords:        dict[str, SweepValue]
    config:        SystemConfig
    initial_state: InitialState
    t_final:       float
    samples:       int
    csv_path:      str
    opts:          IntegratorOptions
    fock_check:    bool

class PointResult(NamedTuple):
    seq:         int
    coords:      dict[str, SweepValue]
    csv_path:    str | None
    trace:       ObservableTrace | None
    trace_drift: float
    min_eigval:  float
    herm_defect: float
    fock_delta:  float | None
    steps:       int
    wall_time:   float
    status:      RunStatus
    message:     str | None

def final_observables(cfg: SystemConfig, which: InitialState, t_final: float,
                      opts: IntegratorOptions, samples: int = 2) -> dict[str, float]:
    """Observables at `t_final` (only the end state is of interest here).
    """
    result = evolve(cfg, initial_state(which, cfg.layout), t_final, opts, samples=samples,
                    keep_states=False)
    return result.observables.at(t_final)

def fock_delta(cfg: SystemConfig, which: InitialState, t_final: float, opts: IntegratorOptions,
               base: dict[str, float]) -> float:
    """Max observable shift (concurrence and populations) at `t_final` when the cavity
    truncation is raised by `FOCK_EXTRA`.
    """
    hi = final_observables(replace(cfg, n_fock=cfg.n_fock + FOCK_EXTRA), which, t_final, opts)
    return max(abs(hi[name] - base[name]) for name in FOCK_FIELDS)

def point_status(drift: float, min_eigval: float, herm_defect: float,
                 fock: float | None) -> tuple[RunStatus, str | None]:
    problems = []
    if drift > MAX_TRACE_DRIFT:
        problems.append(f"trace drift {drift:.3g}")
    if min_eigval < MIN_EIGENVALUE:
        problems.append(f"min eigenvalue {min_eigval:.3g}")
    if herm_defect > MAX_HERM_DEFECT:
        problems.append(f"hermiticity defect {herm_defect:.3g}")
    if fock is not None and fock > MAX_FOCK_DELTA:
        problems.append(f"Fock delta {fock:.3g}")
    if problems:
        return RunStatus.FAILED, "; ".join(problems)
    return RunStatus.OK, None

def run_point(task: PointTask) -> PointResult:
    """Evolve a single sweep point and write its trace CSV.  Integration (or other data)
    failures are returned as a FAILED result, not raised.
    """
    start = time.perf_counter()
    log.info(f"point {task.seq} {task.coords}: start")
    try:
        rho0 = initial_state(task.initial_state, task.config.layout)
        result = evolve(task.config, rho0, task.t_final, task.opts, samples=task.samples,
                        keep_states=False)
        trace = result.observables
        trace.write_csv(task.csv_path)
        diags = result.diagnostics
        fock = None
        if task.fock_check:
            base = {name: float(getattr(trace, name)[-1]) for name in FOCK_FIELDS}
            fock = fock_delta(task.config, task.initial_state, task.t_final, task.opts, base)
        status, msg = point_status(diags.max_trace_drift, diags.min_eigenvalue,
                                   diags.max_herm_defect, fock)
    except (IntegrationError, DataError, QuadratureError, LogicError) as e:
        log.error(f"point {task.seq} {task.coords}: {type(e).__name__}: {e}")
        return PointResult(task.seq, task.coords, None, None, math.nan, math.nan, math.nan, None,
                           0, time.perf_counter() - start, RunStatus.FAILED, f"{type(e).__name__}: {e}")

    wall = time.perf_counter() - start
    if status == RunStatus.FAILED:
        log.warning(f"point {task.seq} {task.coords}: FAILED ({msg})")
    c_mean, c_std = trace.late_stats()
    log.info(f"point {task.seq}: done in {wall:.1f}s ({diags.steps} steps), late concurrence "
             f"{c_mean:.3g} ± {c_std:.2g}")
    return PointResult(task.seq, task.coords, task.csv_path, trace, diags.max_trace_drift,
                       diags.min_eigenvalue, diags.max_herm_defect, fock, diags.steps, wall,
                       status, msg)

class RunOutput(NamedTuple):
    out_dir:       str
    spec_path:     str
    manifest_path: str
    points:        list[PointResult]

    @property
    def csv_paths(self) -> list[str]:
        return [p.csv_path for p in self.points if p.csv_path]

    @property
    def num_failed(self) -> int:
        return sum(1 for p in self.points if p.status == RunStatus.FAILED)

    @property
    def paths(self) -> list[str]:
        return [self.spec_path, *self.csv_paths, self.manifest_path]

def default_workers(num_points: int) -> int:
    return max(1, min(num_points, os.cpu_count() or 1))

def run(spec: ScenarioSpec, workers: int = None, opts: IntegratorOptions = None,
        fock_check: FockCheck | str = FockCheck.FINAL) -> RunOutput:
    """Run all sweep points (on a process pool if `workers` > 1), writing one CSV per
    point, the serialized spec, and the run manifest into the spec's output directory.
    """
    opts = opts or IntegratorOptions()
    fock_check = FockCheck(fock_check)
    out_dir = spec.out_dir
    points = spec.points()
    workers = workers or default_workers(len(points))
    last = len(points) - 1

    tasks = []
    for seq, coords in enumerate(points):
        cfg, which = spec.point_setup(coords)
        check = fock_check == FockCheck.ALL or (fock_check == FockCheck.FINAL and seq == last)
        csv_path = os.path.join(out_dir, f"{spec.name}_{seq:03d}.csv")
        tasks.append(PointTask(seq, coords, cfg, which, spec.t_final, spec.samples, csv_path,
                               opts, check))

    spec_path = os.path.join(out_dir, f"{spec.name}.cfg")
    with open(spec_path, 'w') as f:
        f.write(serialize_spec(spec))

    log.info(f"run '{spec.name}': {len(tasks)} point(s), {workers} worker(s)")
    started_at = now_str()
    started = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run_point, tasks))
    else:
        results = [run_point(task) for task in tasks]
    wall = time.perf_counter() - started

    manifest_path = write_manifest(spec, out_dir, results, started_at, wall)
    output = RunOutput(out_dir, spec_path, manifest_path, results)
    log.info(f"run '{spec.name}': {output.num_failed} of {len(results)} point(s) FAILED")
    return output

def write_manifest(spec: ScenarioSpec, out_dir: str, results: Iterable[PointResult], started_at: str,
                   wall_time: float) -> str:
    """(Re)create the run manifest database in the output directory.
    """
    db = db_init(MANIFEST_NAME, out_dir, force=True)
    path = db.database
    try:
        db.drop_tables([SweepPoint, RunInfo], safe=True)
        create_schema()
        with db.atomic():
            run_info = RunInfo.create(scenario=spec.name,
                                      config_text=serialize_spec(spec),
                                      output_dir=out_dir,
                                      started_at=started_at)
            for res in results:
                SweepPoint.create(run=run_info,
                                  seq=res.seq,
                                  coords={k: fmt_value(v) for k, v in res.coords.items()},
                                  csv_path=res.csv_path,
                                  trace_drift=nullable(res.trace_drift),
                                  min_eigval=nullable(res.min_eigval),
                                  herm_defect=nullable(res.herm_defect),
                                  fock_delta=nullable(res.fock_delta),
                                  steps=res.steps,
                                  wall_time=res.wall_time,
                                  status=res.status,
                                  message=res.message)
            finish_run(run_info, wall_time)
            if run_info.failed:
                seqs = [p.seq for p in failed_points(run_info)]
                log.warning(f"run '{spec.name}': FAILED point(s) {seqs}")
    finally:
        db_close()
        db_reset()
    log.info(f"wrote manifest {path}")
    return path

##################
# concurrence map #
##################

MAP_HEADER = ['omega_d1', 'omega_d2', 'C_at_probe', 'C_max']
MAX_DRIVE = 2.5

def sweep_concurrence_map(base: ScenarioSpec, grid1: Sequence[float],
                          grid2: Sequence[float] = None, t_probe: float = None,
                          workers: int = None, opts: IntegratorOptions = None,
                          fock_check: FockCheck | str = FockCheck.FINAL) -> tuple[str, RunOutput]:
    """Concurrence at `t_probe` (default: end of run) and max over the trace, for every
    (ω_d1, ω_d2) cell, as long-format CSV.
    """
    grid2 = grid1 if grid2 is None else grid2
    cells = [*grid1, *grid2]
    if min(cells) < 0.0 or max(cells) > MAX_DRIVE:
        raise ConfigError(f"drive frequencies must lie within [0, {MAX_DRIVE}]")
    t_probe = base.t_final if t_probe is None else t_probe
    if not 0.0 <= t_probe <= base.t_final:
        raise ConfigError(f"probe time {t_probe} outside [0, {base.t_final}]")

    spec = replace(base, name=f"{base.name}_map", variants=(),
                   sweep=(('modulation.1.omega_d', tuple(grid1)),
                          ('modulation.2.omega_d', tuple(grid2))))
    output = run(spec, workers, opts, fock_check)
    map_path = os.path.join(output.out_dir, f"{spec.name}.csv")
    with open(map_path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(MAP_HEADER)
        for res in output.points:
            w1, w2 = res.coords['modulation.1.omega_d'], res.coords['modulation.2.omega_d']
            if res.trace is None:
                c_probe = c_max = math.nan
            else:
                c_probe = res.trace.at(t_probe)['concurrence']
                c_max = float(np.max(res.trace.concurrence))
            writer.writerow([format(x, CSV_FMT) for x in (w1, w2, c_probe, c_max)])
    log.info(f"wrote concurrence map {map_path}")
    return map_path, output

######################
# convergence report #
######################

REPORT_HEADER = ['check', 'n_fock', 'rel_tol', 'concurrence', 'p_q1', 'p_q2', 'n_photons',
                 'max_delta']

def convergence_report(spec: ScenarioSpec, opts: IntegratorOptions = None) -> str:
    """Final-time observables of the last sweep point at truncation N, N+5, and halved
    integration tolerance, with the max shift (concurrence and populations) relative to
    the first row.
    """
    opts = opts or IntegratorOptions()
    cfg, which = spec.point_setup(spec.points()[-1])
    checks = [('base', cfg, opts),
              ('fock', replace(cfg, n_fock=cfg.n_fock + FOCK_EXTRA), opts),
              ('tolerance', cfg, opts.tightened(0.5))]

    rows = []
    base = None
    for label, check_cfg, check_opts in checks:
        obs = final_observables(check_cfg, which, spec.t_final, check_opts)
        base = base or obs
        delta = max(abs(obs[name] - base[name]) for name in FOCK_FIELDS)
        rows.append([label, str(check_cfg.n_fock), format(check_opts.rel_tol, CSV_FMT)] +
                    [format(obs[name], CSV_FMT) for name in ('concurrence', 'p_q1', 'p_q2', 'n_photons')] +
                    [format(delta, CSV_FMT)])

    path = os.path.join(spec.out_dir, f"{spec.name}_convergence.csv")
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_HEADER)
        writer.writerows(rows)
    log.info(f"wrote convergence report {path}")
    return path

#############
# analytics #
#############

def analytics_report(spec: ScenarioSpec) -> str:
    """Perturbative X, P_e, and C over the spec's time grid, for the base config.
    """
    inp = PerturbativeInput.from_config(spec.config, 0.0)
    periods = np.linspace(0.0, spec.t_final, spec.samples)
    path = os.path.join(spec.out_dir, f"{spec.name}_analytics.csv")
    return write_analytics_csv(path, analytics_rows(inp, periods))

########
# main #
########

COMMANDS = ['run', 'sweep-map', 'converge', 'analytics']

def normalize_argv(argv: Sequence[str]) -> list[str]:
    """Convert `--key value` and `--key=value` forms (with dashes in keys mapped to
    underscores) to the `key=value` form understood by `parse_argv`.
    """
    out = []
    args = iter(argv)
    for arg in args:
        if not arg.startswith('--'):
            out.append(arg)
            continue
        key = arg[2:]
        if '=' in key:
            key, val = key.split('=', 1)
        else:
            val = next(args, None)
            if val is None:
                raise ConfigError(f"no value specified for '{arg}'")
        out.append(f"{key.replace('-', '_')}={val}")
    return out

def parse_grid(val: object) -> list[float]:
    if isinstance(val, (int, float)):
        return [float(val)]
    try:
        return [float(x) for x in str(val).split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f"bad grid '{val}'") from e

def spec_from_args(kwargs: dict) -> ScenarioSpec:
    """Base spec from `config` or `preset`, plus `output`, `fock`, `t_final`, and
    `samples` overrides (consumed from `kwargs`).
    """
    if 'config' in kwargs:
        spec = load_spec(str(kwargs.pop('config')))
    elif 'preset' in kwargs:
        spec = preset(str(kwargs.pop('preset')))
    else:
        raise ConfigError("either 'config' or 'preset' must be specified")
    overrides = {}
    for key, cast in [('output', str), ('fock', int), ('t_final', float), ('samples', int)]:
        if key in kwargs:
            overrides[key] = cast(kwargs.pop(key))
    return spec.with_overrides(**overrides)

def main() -> int:
    """Built-in driver to run scenarios

    Usage: python -m scenarios <command> [--key value | key=value ...]

    Commands:
      - run        (config=PATH | preset=NAME) [output=DIR] [fock=N] [t_final=X]
                   [samples=K] [workers=W] [fock_check=all|final|none]
      - sweep-map  same as `run`, plus grid=W1,W2,... [grid2=...] [t_probe=X]
      - converge   (config=PATH | preset=NAME) [output=DIR] [fock=N] [t_final=X]
      - analytics  (config=PATH | preset=NAME) [output=DIR] [t_final=X] [samples=K]

    Presets: fig2a, fig2b, fig3a, fig3b, fig4a, fig4b, fig5a, fig5b, s1a, s1b, s2a, s2b, s3

    All written paths are printed to stdout; exit status is 0 only if no sweep point
    FAILED.
    """
    usage = lambda x: x + "\n\n" + main.__doc__
    if len(sys.argv) < 2:
        print(usage("Command not specified"), file=sys.stderr)
        return -1
    command = sys.argv[1]
    if command not in COMMANDS:
        print(usage(f"Unknown command '{command}'"), file=sys.stderr)
        return -1

    try:
        args, kwargs = parse_argv(normalize_argv(sys.argv[2:]))
        if args:
            raise ConfigError("unknown args: " + ' '.join(str(a) for a in args))
        spec = spec_from_args(kwargs)
        workers = kwargs.pop('workers', None)
        fock_check = parse_fock_check(kwargs.pop('fock_check', FockCheck.FINAL))
        if command == 'run':
            output = run(spec, workers, fock_check=fock_check)
            paths, failed = output.paths, output.num_failed
        elif command == 'sweep-map':
            grid1 = parse_grid(kwargs.pop('grid', ','.join(str(w) for w in DRIVE_GRID)))
            grid2 = parse_grid(kwargs.pop('grid2')) if 'grid2' in kwargs else None
            t_probe = kwargs.pop('t_probe', None)
            map_path, output = sweep_concurrence_map(spec, grid1, grid2, t_probe, workers,
                                                     fock_check=fock_check)
            paths, failed = [*output.paths, map_path], output.num_failed
        elif command == 'converge':
            paths, failed = [convergence_report(spec)], 0
        else:
            paths, failed = [analytics_report(spec)], 0
        if kwargs:
            log.warning(f"ignored args: {kwargs}")
    except ConfigError as e:
        print(usage(f"Config error: {e}"), file=sys.stderr)
        return -1

    for path in paths:
        print(path)
    return 1 if failed else 0

if __name__ == '__main__':
    sys.exit(main())
