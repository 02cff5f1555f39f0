# -*- coding: utf-8 -*-

"""Low-level utilities (dependent only on `schema` and below), not used in the actual
simulation processing.  Direct ORM usage is okay in here.
"""

from itertools import chain
import csv
import os
import sys

from database import db_init, db_close, db_reset, MANIFEST_NAME
from schema import RunInfo, SweepPoint, failed_points

EXCLUDE_FIELDS = {
    'created_at',
    'updated_at'
}

def dump_run_info() -> None:
    """Dump run summary records, with created/updated timestamps (and the full config
    text) filtered out.
    """
    cls = RunInfo
    excl = EXCLUDE_FIELDS | {'config_text'}
    fields = [f for f in cls._meta.sorted_field_names if f not in excl]
    writer = csv.DictWriter(sys.stdout, fieldnames=fields, extrasaction='ignore',
                            dialect='excel', lineterminator=os.linesep)
    writer.writeheader()
    writer.writerows(rec.__data__ for rec in cls.select().order_by(cls.id))

def dump_config() -> None:
    """Print the serialized scenario spec stored with the run.
    """
    for rec in RunInfo.select().order_by(RunInfo.id):
        sys.stdout.write(rec.config_text)

def dump_points(failed_only: bool = False) -> None:
    """Dump sweep point records (diagnostics and status), with created/updated timestamps
    filtered out (to facilitate easier comparison).
    """
    cls = SweepPoint
    fields = [f for f in cls._meta.sorted_field_names if f not in EXCLUDE_FIELDS]
    if failed_only:
        recs = chain.from_iterable(failed_points(run) for run in RunInfo.select().order_by(RunInfo.id))
    else:
        recs = cls.select().order_by(cls.seq)
    writer = csv.DictWriter(sys.stdout, fieldnames=fields, extrasaction='ignore',
                            dialect='excel', lineterminator=os.linesep)
    writer.writeheader()
    writer.writerows(rec.__data__ for rec in recs)

########
# main #
########

MOD_FUNCS = [
    'dump_run_info',
    'dump_config',
    'dump_points'
]

from ckautils import parse_argv

def main() -> int:
    """Built-in driver to invoke module functions

    Usage: python -m util <run_dir> <func> [<args> ...]

    where ``run_dir`` is a scenario output directory (containing the run manifest)

    Functions:
      - dump_run_info
      - dump_config
      - dump_points [failed_only=<bool>]
    """
    if len(sys.argv) < 2:
        print(main.__doc__)
        print(f"Run directory not specified", file=sys.stderr)
        return -1
    if len(sys.argv) < 3:
        print(main.__doc__)
        print(f"Module function not specified", file=sys.stderr)
        return -1
    elif sys.argv[2] not in MOD_FUNCS:
        print(f"Unknown module function '{sys.argv[2]}'", file=sys.stderr)
        return -1

    run_dir = os.path.abspath(sys.argv[1])
    mod_func = globals()[sys.argv[2]]
    args, kwargs = parse_argv(sys.argv[3:])

    db_init(MANIFEST_NAME, run_dir, force=True)
    mod_func(*args, **kwargs)  # will throw exceptions on error
    db_close()
    db_reset()
    return 0

if __name__ == '__main__':
    sys.exit(main())
