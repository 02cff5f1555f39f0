# -*- coding: utf-8 -*-

"""Run manifest entities: one `RunInfo` record per scenario run, and one `SweepPoint`
record per sweep point (coordinates, output file, state-validity diagnostics, status).
"""

from enum import StrEnum
from collections.abc import Iterable
import math

from peewee import TextField, IntegerField, FloatField, ForeignKeyField
from playhouse.sqlite_ext import JSONField

from core import log
from database import BaseModel, db, now_str

class RunStatus(StrEnum):
    OK     = 'OK'
    FAILED = 'FAILED'

###########
# RunInfo #
###########

class RunInfo(BaseModel):
    """Summary of a scenario run (`config_text` is the serialized scenario spec).
    """
    scenario    = TextField()
    config_text = TextField()
    output_dir  = TextField()
    started_at  = TextField()
    finished_at = TextField(null=True)
    wall_time   = FloatField(null=True)
    num_points  = IntegerField(default=0)
    num_failed  = IntegerField(default=0)
    status      = TextField(default=RunStatus.OK)

    @property
    def failed(self) -> bool:
        return self.status == RunStatus.FAILED

##############
# SweepPoint #
##############

class SweepPoint(BaseModel):
    """Diagnostic fields are null if the point failed before they were computed (or, for
    `fock_delta`, if no truncation check was run for the point).
    """
    run         = ForeignKeyField(RunInfo, backref='sweep_points', on_delete='CASCADE')
    seq         = IntegerField()
    coords      = JSONField()
    csv_path    = TextField(null=True)
    trace_drift = FloatField(null=True)
    min_eigval  = FloatField(null=True)
    herm_defect = FloatField(null=True)
    fock_delta  = FloatField(null=True)
    steps       = IntegerField(null=True)
    wall_time   = FloatField(null=True)
    status      = TextField()
    message     = TextField(null=True)

    class Meta:
        indexes = (
            (('run', 'seq'), True),
        )

SCHEMA_MODELS = [RunInfo, SweepPoint]

def create_schema() -> None:
    db.create_tables(SCHEMA_MODELS, safe=True)
    log.debug("created manifest tables")

def nullable(val: float | None) -> float | None:
    """NaN (e.g. unavailable diagnostic) is stored as null.
    """
    if val is None or (isinstance(val, float) and math.isnan(val)):
        return None
    return val

def failed_points(run: RunInfo) -> Iterable[SweepPoint]:
    return (SweepPoint.select()
            .where(SweepPoint.run == run, SweepPoint.status == RunStatus.FAILED)
            .order_by(SweepPoint.seq))

def finish_run(run: RunInfo, wall_time: float) -> RunInfo:
    """Tally sweep point status into the run record.
    """
    query = SweepPoint.select().where(SweepPoint.run == run)
    run.num_points = query.count()
    run.num_failed = query.where(SweepPoint.status == RunStatus.FAILED).count()
    run.status = RunStatus.FAILED if run.num_failed else RunStatus.OK
    run.finished_at = now_str()
    run.wall_time = wall_time
    run.save()
    return run
