# -*- coding: utf-8 -*-

"""Run manifest database (one SQLite file per scenario run, living in the run's output
directory).
"""

from datetime import datetime
import os.path

from peewee import SqliteDatabase, Model, DateTimeField
from playhouse.sqlite_ext import SqliteExtDatabase

from core import OUTPUT_DIR, log, LogicError

#####################
# utility functions #
#####################

TIME_FMT = '%Y-%m-%d %H:%M:%S'

def now_str() -> str:
    """Readable format that works for string comparisons.
    """
    return datetime.now().strftime(TIME_FMT)

############
# database #
############

DB_FILETYPE = '.sim_db'
MANIFEST_NAME = 'manifest'

pragmas = {'journal_mode'            : 'wal',
           'cache_size'              : -1 * 16000,  # 16MB
           'foreign_keys'            : 1,
           'ignore_check_constraints': 0,
           'synchronous'             : 0}

db_params = {'autoconnect'      : False,
             'thread_safe'      : True,
             'check_same_thread': True}

# start in "deferred" mode
db = SqliteExtDatabase(None, pragmas=pragmas, **db_params)

def db_filepath(name: str, db_dir: str = None) -> str:
    """Manifest path for the specified name, in `db_dir` (default: the base output
    directory).
    """
    return os.path.join(db_dir or OUTPUT_DIR, f"{name}{DB_FILETYPE}")

def db_init(name: str, db_dir: str = None, force: bool = False) -> SqliteDatabase:
    """Initialize database for the specified name (in `db_dir`, if specified), and connect
    to it; return the ORM `Database` object (to discourage importing `db` directly).  Use
    the `force` flag if okay to overwrite (or reopen) an existing database file.
    """
    if not name:
        raise LogicError("Database name not specified")

    db_file = db_filepath(name, db_dir)
    if not force:
        if db_name() or db_is_initialized():
            raise LogicError(f"database already bound ('{db_name()}')")
        if os.path.exists(db_file):
            raise LogicError(f"database file '{db_file}' already exists")
    else:
        db_close()
    db.init(db_file)
    setattr(db, 'db_name', name)  # little hack to remember name
    db.connect(reuse_if_open=True)
    log.debug(f"db_init({name}, db_dir={db_dir}, force={force})")
    return db

def db_name() -> str | None:
    """Second half of little hack (see above).
    """
    return getattr(db, 'db_name', None)

def db_reset(force: bool = False) -> bool:
    """Reset database to a "deferred" state (i.e. not associated with a file, and not
    able to accept connections).
    """
    if not force:
        if not (db_name() and db_is_initialized() and db_is_closed()):
            raise LogicError("database must be bound and closed in order to reset")
    else:
        db_close()
    if hasattr(db, 'db_name'):
        delattr(db, 'db_name')
    db.init(None)
    log.debug(f"db_reset(force={force})")
    return True

def db_is_initialized() -> bool:
    """Whether the database has been initialized (i.e. database file specified, and able
    to accept connections).
    """
    return not db.deferred  # this is the flag peewee uses internally

def db_close() -> SqliteDatabase:
    """Ensure that the current database is closed (e.g. for checkpointing the WAL); return
    the ORM `Database` object for convenience.  Note that this call is idempotent.
    """
    if not db.is_closed():
        db.close()
        log.debug("db_close()")
    return db

def db_is_closed() -> bool:
    """Whether the database is closed (i.e. not able to perform SQL operations).
    """
    return db.is_closed()

#############
# BaseModel #
#############

class BaseModel(Model):
    """Base model for `schema` module entities, with system columns.
    """
    # system columns
    created_at = DateTimeField(default=now_str)
    updated_at = DateTimeField()

    class Meta:
        database = db
        legacy_table_names = False
        only_save_dirty = True

    def save(self, *args, **kwargs):
        """Support for system columns.
        """
        if not self._dirty:
            return False  # this is what peewee does if no dirty fields
        if not self.updated_at:
            self.updated_at = self.created_at
        elif 'updated_at' not in self._dirty:
            self.updated_at = now_str()
        return super().save(*args, **kwargs)
