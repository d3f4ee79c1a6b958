"""beamgrid: desk-scale simulation and evaluation toolkit for geometry-aided
mmWave beam-pair alignment in V2X street scenes."""

__version__ = "0.1.0"
