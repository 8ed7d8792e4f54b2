"""Package tests for `kinetic_fluid`."""
