"""crestwave-plots: offline figures from crestwave run outputs.

Reads only the documented file interfaces (timeseries CSV, checkpoint JSON,
pinch summary JSON); no in-process coupling to the simulator.
"""

from .render import FigureSpec, render, load_timeseries, load_checkpoint

__all__ = ["FigureSpec", "render", "load_timeseries", "load_checkpoint"]

__version__ = "0.1.0"
