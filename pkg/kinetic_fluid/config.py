"""Environment configuration for `kinetic_fluid`.

Loads a `.env` file if present and exposes module-level settings. Simulation
parameters live in the key=value run configuration (see `kinetic_fluid.io.config_io`);
only deployment concerns are read from the environment.
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Optional run store. Explicit `DATABASE_URL` wins; otherwise build from POSTGRES_* vars.
DATABASE_URL = os.getenv("DATABASE_URL")
if not DATABASE_URL:
    _user = os.getenv("POSTGRES_USER")
    _password = os.getenv("POSTGRES_PASSWORD")
    _port = os.getenv("POSTGRES_PORT")
    _db = os.getenv("POSTGRES_DB")
    _host = os.getenv("POSTGRES_HOST", "localhost")
    if _user and _password and _port and _db:
        DATABASE_URL = f"postgresql://{_user}:{_password}@{_host}:{_port}/{_db}"

LOG_LEVEL = os.getenv("KINETIC_FLUID_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Recorded with each run; numerics are single-threaded and never depend on it.
THREADS = int(os.getenv("KINETIC_FLUID_THREADS", "1"))
