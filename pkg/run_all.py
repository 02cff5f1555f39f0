#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Script to run the entire preset suite (or a subset), used for the state-validity
acceptance pass and for profiling
"""
from os import environ
import sys
import time

from ckautils import parse_argv

from core import log, ConfigError
from scenarios import PRESETS, FockCheck, parse_fock_check, preset, run

########
# main #
########

PROFILE = int(environ.get('ACCELRAD_PROFILE') or 0)
PROF_INTERVAL = 0.0005
if PROFILE:
    from pyinstrument import Profiler
    profiler = Profiler(interval=PROF_INTERVAL)

ALL_PRESETS = list(PRESETS)

def main() -> int:
    """Built-in driver to run presets

    Usage: python -m run_all <preset_list> [output=<dir>] [fock=<n>] [t_final=<x>]
           [samples=<k>] [workers=<w>] [fock_check=all|final|none]

    where ``preset_list`` is a comma-separated list of preset names, or ``'all'``

    Prints a one-line summary per preset; exit status is 0 only if no sweep point FAILED.
    """
    usage = lambda x: x + "\n\n" + main.__doc__
    if len(sys.argv) < 2:
        print(usage("Preset(s) not specified"), file=sys.stderr)
        return -1

    preset_list = sys.argv[1]
    if preset_list == 'all':
        names = ALL_PRESETS
    else:
        names = preset_list.split(',')
        for name in names:
            if name not in PRESETS:
                print(usage(f"Unknown preset '{name}'"), file=sys.stderr)
                return -1

    args, kwargs = parse_argv(sys.argv[2:])
    if args:
        print(usage("Unknown args: " + ' '.join(str(a) for a in args)), file=sys.stderr)
        return -1
    workers = kwargs.pop('workers', None)
    try:
        fock_check = parse_fock_check(kwargs.pop('fock_check', FockCheck.FINAL))
        specs = [preset(name).with_overrides(**kwargs) for name in names]
    except (ConfigError, TypeError) as e:
        print(usage(f"Bad args: {e}"), file=sys.stderr)
        return -1

    if PROFILE:
        profiler.start()
    total_failed = 0
    for spec in specs:
        start = time.perf_counter()
        output = run(spec, workers, fock_check=fock_check)
        wall = time.perf_counter() - start
        worst = max((p.trace_drift for p in output.points if p.trace is not None), default=0.0)
        print(f"{spec.name}:{len(output.points)} point(s), {output.num_failed} FAILED, "
              f"max drift {worst:.3g}, {wall:.1f}s -> {output.manifest_path}")
        total_failed += output.num_failed
    if PROFILE:
        profiler.stop()
        profiler.print()
    log.info(f"run_all: {len(names)} preset(s), {total_failed} FAILED point(s)")
    return 1 if total_failed else 0

if __name__ == '__main__':
    sys.exit(main())
