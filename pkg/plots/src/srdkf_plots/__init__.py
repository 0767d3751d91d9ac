from srdkf_plots.render import FIGURES, MissingColumnError, PlotJob, render

__all__ = ["FIGURES", "MissingColumnError", "PlotJob", "render"]
