"""Container workflows for scientific software.

Builds layered images from recipes, synthesizes launch commands for
several container runtimes, plans MPI library injection for HPC hosts,
and runs benchmark campaigns with regression gating.
"""

__version__ = "0.1.0"
