import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from skfeedback.core.analysis import GapCurve


class GapPlotter:
    """A class for rendering capacity-gap curves to a static image."""

    def __init__(self):
        self._curves = []

    def add_curve(self, curve: GapCurve, label: str | None = None) -> None:
        """Add a gap curve; the label defaults to its dSNR."""
        if label is None:
            dsnr_db = curve.dsnr_db
            label = "noiseless feedback" if dsnr_db == float("inf") else f"dSNR = {dsnr_db:g} dB"
        self._curves.append((curve, label))

    def add_curves(self, curves: list[GapCurve]) -> None:
        for curve in curves:
            self.add_curve(curve)

    def figure(
        self,
        title: str = "Capacity gap",
        xlabel: str = "Rounds N",
        ylabel: str = "Capacity gap [dB]",
    ):
        """Draw all added curves on a new figure; noiseless curves are dashed and n_opt is marked."""
        if not self._curves:
            raise ValueError("No curves to plot.")
        fig, ax = plt.subplots()
        for curve, label in self._curves:
            xs = [p.n_rounds for p in curve.points]
            ys = [p.gap_db for p in curve.points]
            linestyle = "--" if math.isinf(curve.dsnr) else "-"
            (line,) = ax.plot(xs, ys, linestyle=linestyle, label=label)
            if curve.n_opt is not None:
                ax.plot([curve.n_opt], [curve.gap_at(curve.n_opt)], "o", color=line.get_color())
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True)
        ax.legend()
        return fig

    def plot(
        self,
        path: Path,
        title: str = "Capacity gap",
        xlabel: str = "Rounds N",
        ylabel: str = "Capacity gap [dB]",
    ) -> Path:
        """Plot all added curves and save the figure.

        Args:
            path (Path): Output image file.
            title (str): Title of the plot.
            xlabel (str): Label for the x-axis.
            ylabel (str): Label for the y-axis.

        Returns:
            Path: The written file.
        """
        fig = self.figure(title, xlabel, ylabel)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
        return path
