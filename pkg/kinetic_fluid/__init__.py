"""kinetic_fluid package: kinetic Cucker-Smale flocking coupled to compressible Navier-Stokes."""

__version__ = "0.1.0"
