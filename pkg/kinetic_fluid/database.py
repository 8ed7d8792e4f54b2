"""Database connection utilities (SQLAlchemy engine/session setup).

The run store is optional. `make_engine` takes an explicit URL or falls back
to `kinetic_fluid.config.DATABASE_URL`; in-memory SQLite works for tests.
"""

import logging
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from kinetic_fluid import config
from kinetic_fluid.models.base import Base
from kinetic_fluid.models import Simulation, SimulationRun, DiagnosticsRow, PicardResultRow  # noqa: F401

logger = logging.getLogger(__name__)


def make_engine(url: Optional[str] = None) -> Engine:
    """Engine for ``url`` (or ``DATABASE_URL``); raises ``ValueError`` if neither is set."""
    url = url or config.DATABASE_URL
    if not url:
        raise ValueError("DATABASE_URL is not set. Set it in environment or .env, or pass --db")
    if url == "sqlite://" or (url.startswith("sqlite") and ":memory:" in url):
        engine = create_engine(url, future=True, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    else:
        engine = create_engine(url, future=True)
    logger.info("run store: %s", engine.url.render_as_string(hide_password=True))
    return engine


def init_db(engine: Engine) -> None:
    """Create all tables. Safe to call multiple times."""
    Base.metadata.create_all(bind=engine)


def make_session(url: Optional[str] = None, create: bool = True) -> Session:
    """Open a session on ``url``, creating the schema first unless ``create`` is False."""
    engine = make_engine(url)
    if create:
        init_db(engine)
    factory = sessionmaker(bind=engine, autoflush=False, autocommit=False, future=True)
    return factory()
