"""
Run configuration, orchestration and report artifacts.
"""

from .run_config import RunConfig
from .runner import Check, RunReport, run, write_outputs
from .figures import render_figures
from .tables import write_tables

__all__ = ["Check", "RunConfig", "RunReport", "render_figures", "run", "write_outputs", "write_tables"]
