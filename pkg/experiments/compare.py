"""
Ordering reports over sweep result files: is the proposed policy no worse
than each benchmark at every grid point, and where are the 95% intervals
separated.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field
from tabulate import tabulate

from .config import GridMismatch

logger = logging.getLogger(__name__)

GridKey = Tuple[Optional[float], Optional[float]]
NUMERIC = ("lambda", "epsilon", "mean_cost", "ci_low", "ci_high")


class ResultRow(BaseModel):
    lam: Optional[float] = None
    eps: Optional[float] = None
    policy: str
    mean_cost: float
    ci_low: float
    ci_high: float

    @property
    def key(self) -> GridKey:
        return (self.lam, self.eps)


class OrderingVerdict(BaseModel):
    lam: Optional[float]
    eps: Optional[float]
    benchmark: str
    proposed_cost: float
    benchmark_cost: float
    relative_gain: float
    not_worse: bool
    separated: bool


class CellDifference(BaseModel):
    lam: Optional[float]
    eps: Optional[float]
    policy: str
    cost_a: float
    cost_b: float
    difference: float
    separated: bool


class OrderingReport(BaseModel):
    proposed: str
    verdicts: List[OrderingVerdict] = Field(default_factory=list)
    differences: List[CellDifference] = Field(default_factory=list)
    mean_relative_gain: float = 0.0
    reference_gain: Optional[float] = None

    @property
    def separated_fraction(self) -> float:
        if not self.verdicts:
            return 0.0
        return sum(v.separated for v in self.verdicts) / len(self.verdicts)

    @property
    def all_not_worse(self) -> bool:
        return all(v.not_worse for v in self.verdicts)

    def to_text(self) -> str:
        """Plain-text report with one table per section."""
        parts = []
        if self.verdicts:
            parts.append(tabulate(
                [
                    [v.lam, v.eps, v.benchmark, v.proposed_cost, v.benchmark_cost,
                     f"{100 * v.relative_gain:.2f}%", v.not_worse, v.separated]
                    for v in self.verdicts
                ],
                headers=["lambda", "epsilon", "benchmark", self.proposed, "benchmark cost", "gain", "not worse", "separated"],
                floatfmt=".6g",
            ))
            parts.append(
                f"{self.proposed} not worse everywhere: {self.all_not_worse}; "
                f"CI-separated at {100 * self.separated_fraction:.1f}% of comparisons; "
                f"mean gain over best benchmark {100 * self.mean_relative_gain:.2f}%"
            )
        if self.differences:
            parts.append(tabulate(
                [[c.lam, c.eps, c.policy, c.cost_a, c.cost_b, c.difference, c.separated] for c in self.differences],
                headers=["lambda", "epsilon", "policy", "cost A", "cost B", "A - B", "separated"],
                floatfmt=".6g",
            ))
        if self.reference_gain is not None:
            parts.append(
                f"mean gain over best benchmark: A {100 * self.mean_relative_gain:.2f}%, "
                f"B {100 * self.reference_gain:.2f}%"
            )
        return "\n\n".join(parts) + "\n"


def _number(value, column: str, path: Path) -> Optional[float]:
    if value is None or value == "":
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise GridMismatch(f"{path}: column {column} holds non-numeric value {value!r}") from None


def load_results(path: Union[str, Path]) -> List[ResultRow]:
    """Read sweep rows from a CSV or JSON results file."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        if path.suffix == ".json":
            raw = json.load(f)["rows"]
        else:
            raw = list(csv.DictReader(f))
    rows = []
    for record in raw:
        missing = [c for c in ("policy",) + NUMERIC if c not in record]
        if missing:
            raise GridMismatch(f"{path} lacks sweep columns {missing}")
        values = {c: _number(record[c], c, path) for c in NUMERIC}
        rows.append(ResultRow(
            lam=values["lambda"],
            eps=values["epsilon"],
            policy=record["policy"],
            mean_cost=values["mean_cost"],
            ci_low=values["ci_low"],
            ci_high=values["ci_high"],
        ))
    return rows


def _gain(proposed: float, benchmark: float) -> float:
    return (benchmark - proposed) / benchmark if benchmark > 0 else 0.0


def _orderings(rows: List[ResultRow], proposed: str) -> Tuple[List[OrderingVerdict], float]:
    by_key: Dict[GridKey, Dict[str, ResultRow]] = {}
    for row in rows:
        by_key.setdefault(row.key, {})[row.policy] = row

    verdicts = []
    best_gains = []
    for key, cells in by_key.items():
        if proposed not in cells:
            raise GridMismatch(f"no {proposed} result at λ={key[0]}, ε={key[1]}")
        mine = cells[proposed]
        benchmarks = [cell for policy, cell in cells.items() if policy != proposed]
        for other in benchmarks:
            verdicts.append(OrderingVerdict(
                lam=key[0],
                eps=key[1],
                benchmark=other.policy,
                proposed_cost=mine.mean_cost,
                benchmark_cost=other.mean_cost,
                relative_gain=_gain(mine.mean_cost, other.mean_cost),
                not_worse=mine.mean_cost <= other.mean_cost,
                separated=mine.ci_high < other.ci_low,
            ))
        if benchmarks:
            best = min(cell.mean_cost for cell in benchmarks)
            best_gains.append(_gain(mine.mean_cost, best))
    mean_gain = sum(best_gains) / len(best_gains) if best_gains else 0.0
    return verdicts, mean_gain


def _differences(rows_a: List[ResultRow], rows_b: List[ResultRow]) -> List[CellDifference]:
    index_a = {(r.lam, r.eps, r.policy): r for r in rows_a}
    index_b = {(r.lam, r.eps, r.policy): r for r in rows_b}
    if set(index_a) != set(index_b):
        only_a = sorted(set(index_a) - set(index_b), key=str)
        only_b = sorted(set(index_b) - set(index_a), key=str)
        raise GridMismatch(f"grids differ: only in A {only_a}, only in B {only_b}")
    differences = []
    for key, a in index_a.items():
        b = index_b[key]
        differences.append(CellDifference(
            lam=a.lam,
            eps=a.eps,
            policy=a.policy,
            cost_a=a.mean_cost,
            cost_b=b.mean_cost,
            difference=a.mean_cost - b.mean_cost,
            separated=a.ci_high < b.ci_low or b.ci_high < a.ci_low,
        ))
    return differences


def compare_policies(
    a: Union[str, Path],
    b: Optional[Union[str, Path]] = None,
    proposed: str = "whittle",
) -> OrderingReport:
    """
    Ordering report for results file ``a``; with ``b`` also the cell-by-cell
    differences between the two files and ``b``'s mean gain for reference.

    Raises:
        GridMismatch: if the files cover different grids or a grid point lacks the proposed policy
    """
    rows_a = load_results(a)
    verdicts, gain = _orderings(rows_a, proposed)
    report = OrderingReport(proposed=proposed, verdicts=verdicts, mean_relative_gain=gain)
    if b is not None:
        rows_b = load_results(b)
        _, reference = _orderings(rows_b, proposed)
        report = report.model_copy(update={"differences": _differences(rows_a, rows_b), "reference_gain": reference})
    logger.info(
        f"compared {a}{'' if b is None else f' with {b}'}: "
        f"{proposed} not worse everywhere = {report.all_not_worse}"
    )
    return report


def write_report(report: OrderingReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(report.to_text(), encoding="utf-8")
    logger.info(f"wrote ordering report {path}")
    return path
