"""Static figure rendering for the ionmonitor simulator's CSV/JSON outputs."""
from .io import SchemaError, read_ratio_table, read_run_csv, read_scan_cells
from .plots import FigureSpec, plot_noise_scan, plot_probe_scan, plot_tracking

__all__ = [
    "FigureSpec",
    "SchemaError",
    "plot_noise_scan",
    "plot_probe_scan",
    "plot_tracking",
    "read_ratio_table",
    "read_run_csv",
    "read_scan_cells",
]
