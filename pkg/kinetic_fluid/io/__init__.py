"""Input/output: configuration files, initial data, CSV and snapshots."""
