"""
Line charts of sweep results: mean cost against λ, one line per policy and ε.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .compare import ResultRow, load_results  # noqa: E402

logger = logging.getLogger(__name__)


def plot_results(
    path: Union[str, Path],
    out: Optional[Union[str, Path]] = None,
    title: Optional[str] = None,
) -> Path:
    """
    Render a results file to PNG.

    Args:
        path: CSV or JSON sweep results
        out: Image path; defaults to ``path`` with a .png suffix
        title: Figure title; defaults to the file stem

    Returns:
        Path of the written image
    """
    path = Path(path)
    out = Path(out) if out is not None else path.with_suffix(".png")
    rows = load_results(path)
    if any(row.lam is None for row in rows):
        raise ValueError(f"{path} has rows without a common λ; nothing to plot against")

    series: Dict[Tuple[str, Optional[float]], List[ResultRow]] = {}
    for row in rows:
        series.setdefault((row.policy, row.eps), []).append(row)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (policy, eps), points in sorted(series.items(), key=lambda item: (item[0][0], item[0][1] or 0.0)):
        points.sort(key=lambda r: r.lam)
        x = [r.lam for r in points]
        y = [r.mean_cost for r in points]
        err = [[r.mean_cost - r.ci_low for r in points], [r.ci_high - r.mean_cost for r in points]]
        label = policy if eps is None else f"{policy}, ε={eps:g}"
        ax.errorbar(x, y, yerr=err, marker="o", markersize=3, capsize=2, label=label)
    ax.set_xlabel("packet generation probability λ")
    ax.set_ylabel("average cost of AoI")
    ax.set_title(title or path.stem)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    logger.info(f"wrote plot {out}")
    return out
