# -*- coding: utf-8 -*-

"""Test scenario specs (including the config file format and presets), the runner and
its manifest, and the command line driver.
"""

import csv
import logging
import math
import os
import sys

import pytest

from conftest import small_config
from core import ConfigError, ConfigFile
from operators import Q1, Q2
from model import SystemConfig
from observables import sample_observables, read_trace_csv, CSV_HEADER
from dynamics import IntegratorOptions
from database import db_init, db_close, MANIFEST_NAME
from schema import RunInfo, SweepPoint, RunStatus, failed_points
from scenarios import (InitialState, initial_state, coerce_value, ScenarioSpec, serialize_spec,
                       parse_spec, load_spec, PRESETS, preset, FockCheck, parse_fock_check,
                       point_status, run, sweep_concurrence_map, convergence_report,
                       analytics_report, normalize_argv, parse_grid, spec_from_args, main,
                       INITIAL_STATE_KEY, MAP_HEADER, REPORT_HEADER)
import run_all

def tiny_spec(output_dir: str, **kwargs) -> ScenarioSpec:
    """Two sweep points, short and small enough to run in a test.
    """
    info = {'name'         : 'tiny',
            'config'       : small_config(n_fock=1),
            'initial_state': InitialState.GE0,
            't_final'      : 0.5,
            'samples'      : 6,
            'sweep'        : (('modulation.2.omega_d', (0.0, 1.0)),),
            'output_dir'   : output_dir}
    return ScenarioSpec(**(info | kwargs))

def read_rows(path: str) -> list[list[str]]:
    with open(path, newline='') as f:
        return list(csv.reader(f))

##################
# initial states #
##################

@pytest.mark.parametrize("which, p_q1, p_q2", [('gg0', 0.0, 0.0), ('ge0', 0.0, 1.0),
                                               ('eg0', 1.0, 0.0), ('ee0', 1.0, 1.0),
                                               ('pp0', 0.5, 0.5)])
def test_initial_states(which: str, p_q1: float, p_q2: float) -> None:
    layout = SystemConfig(n_fock=3).layout
    rho = initial_state(which, layout)
    rho.check()
    conc, pe1, pe2, n_photons, purity = sample_observables(rho)
    assert (pe1, pe2) == pytest.approx((p_q1, p_q2))
    assert conc == pytest.approx(0.0, abs=1e-10)
    assert n_photons == pytest.approx(0.0, abs=1e-15)
    assert purity == pytest.approx(1.0)

def test_initial_state_bad() -> None:
    with pytest.raises(ValueError):
        initial_state('gg1', SystemConfig().layout)

################
# ScenarioSpec #
################

def test_coerce_value() -> None:
    assert coerce_value('system.n_fock', '12') == 12
    assert coerce_value('system.g.1', 0) == 0.0
    assert isinstance(coerce_value('system.g.1', 0), float)
    assert coerce_value('modulation.1.enabled', 'False') is False
    assert coerce_value(INITIAL_STATE_KEY, ' pp0') == InitialState.PP0

    with pytest.raises(ConfigError):
        coerce_value('system.bogus', 1.0)
    with pytest.raises(ConfigError):
        coerce_value('system.kappa', 'x')
    with pytest.raises(ConfigError):
        coerce_value(INITIAL_STATE_KEY, 'xx0')

def test_spec_validation() -> None:
    cfg = small_config()
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, t_final=0.0)
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, samples=1)
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, initial_state='xyz')
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, sweep=(('system.kappa', (0.1,)), ('system.kappa', (0.2,))))
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, sweep=(('system.kappa', ()),))
    with pytest.raises(ConfigError):
        ScenarioSpec('x', cfg, sweep=(('kappa', (0.1,)),))

def test_spec_points() -> None:
    spec = preset('fig4a')
    points = spec.points()
    assert len(points) == 10
    assert points[0] == {'modulation.1.omega_d': 0.0}
    assert points[1] == {'modulation.1.omega_d': 0.0, 'system.g.1': 0.0}
    assert points[-1] == {'modulation.1.omega_d': 2.0, 'system.g.1': 0.0}

    cfg, which = spec.point_setup(points[3])
    assert cfg.modulation[Q1].omega_d == 0.5
    assert cfg.g == (0.0, 0.02)
    assert which == InitialState.GE0
    assert spec.point_setup({}) == (spec.config, InitialState.GE0)
    with pytest.raises(ConfigError):
        spec.point_setup({'kappa': 0.1})

    # no sweep: the single base point
    assert preset('fig5a').points() == [{}]

def test_spec_points_initial_state() -> None:
    spec = preset('s3')
    points = spec.points()
    assert len(points) == 8
    # grid axes in the order listed, the last varying fastest
    assert [p[INITIAL_STATE_KEY] for p in points[:4]] == ['ee0', 'ee0', 'pp0', 'pp0']
    cfg, which = spec.point_setup(points[3])
    assert which == InitialState.PP0
    assert cfg.g == (0.0, 0.01)
    assert cfg.modulation[Q2].omega_d == 0.0
    assert cfg.kappa == 0.001
    cfg, _ = spec.point_setup(points[4])
    assert cfg.kappa == 0.1

def test_spec_overrides(output_dir) -> None:
    spec = preset('fig2a').with_overrides(fock=4, output=output_dir, t_final=5.0)
    assert spec.config.n_fock == 4
    assert spec.t_final == 5.0
    assert spec.out_dir == os.path.join(output_dir, 'fig2a')
    assert os.path.isdir(spec.out_dir)
    with pytest.raises(TypeError):
        spec.with_overrides(bogus=1)

#################
# serialization #
#################

@pytest.mark.parametrize("name", list(PRESETS))
def test_preset_serialization(name: str) -> None:
    spec = preset(name)
    text = serialize_spec(spec)
    assert text.endswith('\n')
    assert f"scenario.name = {name}" in text
    assert parse_spec(text) == spec

def test_parse_spec_minimal() -> None:
    text = """
    # comment line
    scenario.name = mini      # trailing comment
    system.g.2 = 0.05
    modulation.1.enabled = False
    sweep.system.kappa = 0.1, 0.2,0.3
    variant.2.system.g.1 = 0.01
    variant.1.initial_state = ee0
    """
    spec = parse_spec(text)
    assert spec.name == 'mini'
    assert spec.initial_state == InitialState.GG0
    assert spec.t_final == 40.0
    assert spec.config.g == (0.0, 0.05)
    assert not spec.config.modulation[Q1].enabled
    assert spec.sweep == (('system.kappa', (0.1, 0.2, 0.3)),)
    # variants in numeric order
    assert spec.variants == ((('initial_state', InitialState.EE0),), (('system.g.1', 0.01),))
    assert spec.output_dir is None

def test_output_dir_round_trip(tmp_path) -> None:
    out = str(tmp_path / "some_dir")
    spec = tiny_spec(out)
    text = serialize_spec(spec)
    assert f"scenario.output = {out}" in text
    parsed = parse_spec(text)
    assert parsed.output_dir == out
    assert parsed == spec
    assert parse_spec(serialize_spec(preset('fig3a').with_overrides(output=out))).output_dir == out

@pytest.mark.parametrize("text", ["system.g.1 = 0.1\n",
                                  "scenario.name = x\nsystem.bogus = 1\n",
                                  "scenario.name = x\nsystem.kappa = 0.1\nsystem.kappa = 0.2\n",
                                  "scenario.name = x\nsystem.kappa\n",
                                  "scenario.name = x\nvariant.a.system.g.1 = 0\n",
                                  "scenario.name = x\nsweep.system.kappa = a, b\n",
                                  "scenario.name = x\nscenario.samples = many\n"])
def test_parse_spec_errors(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_spec(text)

def test_schema_file() -> None:
    """The documented example file parses.
    """
    spec = load_spec(ConfigFile('schema.cfg'))
    assert spec.name == 'example'
    assert len(spec.points()) == 25
    assert spec.config.gamma_phi[Q1] == pytest.approx(0.002 / 0.67)
    assert spec.config.modulation[Q2].f0 == pytest.approx(3 * math.pi / 4)
    assert spec.variants == ()

###########
# presets #
###########

def test_presets() -> None:
    assert preset('fig2b').config.kappa == 0.2
    assert preset('fig3a').config.g == (0.0, 0.02)
    assert preset('fig3a').initial_state == InitialState.GE0
    assert preset('fig4b').config.modulation[Q2].omega_d == 1.0

    fig5a, fig5b = preset('fig5a').config, preset('fig5b').config
    assert fig5a.omega_q == (1.1, 1.0)
    assert fig5a.modulation[Q1].delta_f == pytest.approx(math.pi / 4)
    assert fig5b.modulation[Q1].delta_f == pytest.approx(math.pi / 16)
    assert fig5a.modulation[Q1].omega_d == fig5a.modulation[Q2].omega_d == 2.0

    s1a = preset('s1a').config
    assert s1a.omega_q == pytest.approx((2.5, 2.5))
    assert s1a.g == pytest.approx((0.05, 0.05))
    for name in PRESETS:
        cfg = preset(name).config
        assert cfg.gamma_phi[Q1] == pytest.approx(cfg.gamma[Q1] / 0.67)

    with pytest.raises(ConfigError):
        preset('fig9')

#######
# run #
#######

def test_point_status() -> None:
    assert point_status(1e-12, -1e-12, 1e-14, 1e-6) == (RunStatus.OK, None)
    assert point_status(1e-12, -1e-12, 1e-14, None) == (RunStatus.OK, None)
    status, msg = point_status(1e-5, -1e-6, 1e-14, 0.01)
    assert status == RunStatus.FAILED
    assert "trace drift" in msg
    assert "min eigenvalue" in msg
    assert "Fock delta" in msg
    assert point_status(0.0, 0.0, 1e-8, None)[0] == RunStatus.FAILED

def test_parse_fock_check() -> None:
    assert parse_fock_check('ALL') == FockCheck.ALL
    assert parse_fock_check(FockCheck.FINAL) == FockCheck.FINAL
    assert parse_fock_check(None) == FockCheck.NONE
    with pytest.raises(ConfigError):
        parse_fock_check('some')

def test_run(output_dir, caplog) -> None:
    spec = tiny_spec(output_dir)
    with caplog.at_level(logging.INFO, logger='accelrad'):
        output = run(spec, workers=1)
    assert output.num_failed == 0
    assert "late concurrence" in caplog.text
    assert "FAILED point(s)" not in caplog.text
    assert output.out_dir == os.path.join(output_dir, 'tiny')
    assert [os.path.basename(p) for p in output.paths] == ['tiny.cfg', 'tiny_000.csv',
                                                          'tiny_001.csv', 'manifest.sim_db']
    assert all(os.path.exists(p) for p in output.paths)
    assert load_spec(output.spec_path) == spec

    rows = read_rows(output.csv_paths[0])
    assert rows[0] == CSV_HEADER
    assert len(rows) == 7
    trace = read_trace_csv(output.csv_paths[1])
    assert trace.times[-1] == 0.5
    assert trace.p_q2[0] == 1.0
    assert 0.0 < trace.p_q2[-1] < 1.0

    # only the final point gets the truncation check (by default)
    assert output.points[0].fock_delta is None
    assert output.points[1].fock_delta < 1e-3

    db_init(MANIFEST_NAME, output.out_dir, force=True)
    run_info = RunInfo.get()
    assert run_info.scenario == 'tiny'
    assert run_info.num_points == 2
    assert run_info.status == RunStatus.OK
    assert not run_info.failed
    assert run_info.config_text == serialize_spec(spec)
    assert run_info.finished_at >= run_info.started_at
    points = list(SweepPoint.select().order_by(SweepPoint.seq))
    assert [p.coords for p in points] == [{'modulation.2.omega_d': '0.0'},
                                          {'modulation.2.omega_d': '1.0'}]
    assert points[0].fock_delta is None
    assert points[1].fock_delta is not None
    assert points[1].trace_drift < 1e-6
    assert points[1].steps > 0
    assert list(failed_points(run_info)) == []
    db_close()

def test_run_failures(output_dir, caplog) -> None:
    """Integration failures are recorded per point, not raised.
    """
    spec = tiny_spec(output_dir)
    opts = IntegratorOptions(rel_tol=1e-100, abs_tol=1e-100)
    with caplog.at_level(logging.WARNING, logger='accelrad'):
        output = run(spec, workers=1, opts=opts, fock_check='none')
    assert output.num_failed == 2
    assert output.csv_paths == []
    assert all(p.message.startswith("IntegrationError") for p in output.points)
    assert "FAILED point(s) [0, 1]" in caplog.text

    db_init(MANIFEST_NAME, output.out_dir, force=True)
    run_info = RunInfo.get()
    assert run_info.status == RunStatus.FAILED
    assert run_info.failed
    assert run_info.num_failed == 2
    failed = list(failed_points(run_info))
    assert len(failed) == 2
    assert failed[0].csv_path is None
    assert failed[0].trace_drift is None
    db_close()

def test_run_pool(output_dir) -> None:
    spec = tiny_spec(output_dir, name='pool', samples=3)
    serial = run(spec, workers=1, fock_check='none')
    pooled = run(spec, workers=2, fock_check='none')
    for a, b in zip(serial.points, pooled.points):
        assert a.seq == b.seq
        assert b.trace.p_q2 == pytest.approx(a.trace.p_q2, rel=1e-12)

###################
# derived reports #
###################

def test_concurrence_map(output_dir) -> None:
    spec = tiny_spec(output_dir, name='tmap', sweep=())
    map_path, output = sweep_concurrence_map(spec, [0.0, 1.0], [1.0], t_probe=0.25, workers=1,
                                             fock_check='none')
    assert os.path.basename(map_path) == 'tmap_map.csv'
    assert len(output.points) == 2
    rows = read_rows(map_path)
    assert rows[0] == MAP_HEADER
    assert [(float(r[0]), float(r[1])) for r in rows[1:]] == [(0.0, 1.0), (1.0, 1.0)]
    for row in rows[1:]:
        c_probe, c_max = float(row[2]), float(row[3])
        assert 0.0 <= c_probe <= c_max <= 1.0

    with pytest.raises(ConfigError):
        sweep_concurrence_map(spec, [0.0, 3.0])
    with pytest.raises(ConfigError):
        sweep_concurrence_map(spec, [1.0], t_probe=1.0)

def test_convergence_report(output_dir) -> None:
    spec = tiny_spec(output_dir, name='conv')
    rows = read_rows(convergence_report(spec))
    assert rows[0] == REPORT_HEADER
    assert [r[0] for r in rows[1:]] == ['base', 'fock', 'tolerance']
    assert [r[1] for r in rows[1:]] == ['1', '6', '1']
    assert float(rows[1][-1]) == 0.0
    assert all(float(r[-1]) < 1e-3 for r in rows[2:])
    assert float(rows[3][2]) == pytest.approx(0.5 * float(rows[1][2]))

def test_analytics_report(output_dir) -> None:
    spec = tiny_spec(output_dir, name='ana', t_final=2.0, samples=3)
    rows = read_rows(analytics_report(spec))
    assert rows[0] == ['time', 'concurrence', 'p_q1', 'p_q2', 'abs_x', 'origin']
    assert rows[0][:4] == CSV_HEADER[:4]
    assert len(rows) == 1 + 3 * 3
    assert {r[-1] for r in rows[1:]} == {'numeric', 'secular', 'bessel'}

    # unequal qubit frequencies: no Bessel rows, per-qubit emission
    spec = preset('fig5a').with_overrides(output=output_dir, t_final=2.0, samples=3)
    assert spec.config.omega_q[Q1] != spec.config.omega_q[Q2]
    path = analytics_report(spec)
    assert os.path.basename(path) == 'fig5a_analytics.csv'
    rows = read_rows(path)
    assert len(rows) == 1 + 3 * 2
    assert [r[-1] for r in rows[1:3]] == ['numeric', 'secular']
    assert float(rows[-2][2]) != float(rows[-2][3])

################
# command line #
################

def test_normalize_argv() -> None:
    argv = ['--preset', 'fig2a', '--t-final=5', 'workers=2', '--fock_check', 'none']
    assert normalize_argv(argv) == ['preset=fig2a', 't_final=5', 'workers=2', 'fock_check=none']
    with pytest.raises(ConfigError):
        normalize_argv(['--preset'])

def test_parse_grid() -> None:
    assert parse_grid('0, 0.5,1') == [0.0, 0.5, 1.0]
    assert parse_grid(2) == [2.0]
    with pytest.raises(ConfigError):
        parse_grid('0,x')

def test_spec_from_args(output_dir) -> None:
    kwargs = {'preset': 'fig3b', 'fock': 3, 't_final': 2, 'output': output_dir, 'workers': 2}
    spec = spec_from_args(kwargs)
    assert spec.name == 'fig3b'
    assert spec.config.n_fock == 3
    assert spec.t_final == 2.0
    assert kwargs == {'workers': 2}
    with pytest.raises(ConfigError):
        spec_from_args({'fock': 3})

def test_main(output_dir, monkeypatch, capsys) -> None:
    cfg_path = os.path.join(output_dir, 'cli.cfg')
    with open(cfg_path, 'w') as f:
        f.write(serialize_spec(tiny_spec(output_dir, name='cli')))

    argv = ['scenarios', 'run', '--config', cfg_path, '--workers', '1', '--fock-check', 'none']
    monkeypatch.setattr(sys, 'argv', argv)
    assert main() == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == 4
    assert printed[0].endswith('cli.cfg')
    assert printed[-1].endswith('manifest.sim_db')

    argv = ['scenarios', 'analytics', '--preset', 'fig5b', '--t-final', '1', '--samples', '2',
            '--output', output_dir]
    monkeypatch.setattr(sys, 'argv', argv)
    assert main() == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == 1
    assert printed[0].endswith('fig5b_analytics.csv')

    monkeypatch.setattr(sys, 'argv', ['scenarios'])
    assert main() == -1
    monkeypatch.setattr(sys, 'argv', ['scenarios', 'simulate'])
    assert main() == -1
    monkeypatch.setattr(sys, 'argv', ['scenarios', 'run', 'preset=nope'])
    assert main() == -1

def test_run_all(output_dir, monkeypatch, capsys) -> None:
    argv = ['run_all', 'fig5a,fig5b', 'fock=1', 't_final=0.1', 'samples=3', 'workers=1',
            'fock_check=none', f'output={output_dir}']
    monkeypatch.setattr(sys, 'argv', argv)
    assert run_all.main() == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(':')[0] for line in lines] == ['fig5a', 'fig5b']
    assert all("0 FAILED" in line for line in lines)
    assert os.path.exists(os.path.join(output_dir, 'fig5b', 'manifest.sim_db'))

    monkeypatch.setattr(sys, 'argv', ['run_all'])
    assert run_all.main() == -1
    monkeypatch.setattr(sys, 'argv', ['run_all', 'fig2a,fig9'])
    assert run_all.main() == -1
    monkeypatch.setattr(sys, 'argv', ['run_all', 'fig2a', 'bogus=1'])
    assert run_all.main() == -1
