"""
SVG figures for sweep reports.
"""

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from usr_rl.core.models import NoisySweepReport, RobustCurveReport  # noqa: E402

SVG_HASH_SALT = "usr-rl"


def _save_svg(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed salt and no date keep repeated renders byte-identical
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_curve(report: RobustCurveReport, path: Union[str, Path]) -> Path:
    """Quantile return against the swept value, with the band shaded.

    The nominal training value is marked with a dashed vertical line.
    """
    values = [p.param_value for p in report.curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(
        values,
        [p.band_low for p in report.curve],
        [p.band_high for p in report.curve],
        alpha=0.25,
        label="quantile band",
    )
    ax.plot(values, [p.quantile_return for p in report.curve], marker="o", label=f"q={report.quantile:.2f}")
    ax.axvline(report.nominal, linestyle="--", color="gray", label="nominal")
    ax.set_xlabel(report.param)
    ax.set_ylabel("return")
    ax.set_title(f"{report.env.name}: robust AUC {report.auc:.3f}")
    ax.legend()
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_noisy(reports: Sequence[NoisySweepReport], labels: Sequence[str], path: Union[str, Path]) -> Path:
    """One bar per report at its quantile value."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(list(labels), [r.value for r in reports])
    ax.set_ylabel("quantile return")
    fig.tight_layout()
    return _save_svg(fig, path)
