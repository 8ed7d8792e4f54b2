"""Script to initialize the run store schema (create all tables).

Usage:
    python scripts/init_db.py [DATABASE_URL]

Without an argument the URL comes from DATABASE_URL or the POSTGRES_* variables
(see `kinetic_fluid.config`). Safe to run multiple times - won't drop existing data.
"""

import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from kinetic_fluid.database import init_db, make_engine
from kinetic_fluid.models.base import Base


def main():
    url = sys.argv[1] if len(sys.argv) > 1 else None
    print("Initializing run store schema...")

    try:
        engine = make_engine(url)
        init_db(engine)
        print("✓ Run store initialized successfully!")
        print("\nTables created:")
        for name in Base.metadata.tables:
            print(f"  - {name}")
    except Exception as e:
        print(f"✗ Error initializing run store: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
