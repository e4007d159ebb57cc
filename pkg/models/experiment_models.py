"""
Experiment Data Models

Rows and reports of convergence studies. The CSV interface is
``unknowns,error,eoc`` with an empty eoc on the first row.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd


CSV_COLUMNS = ['unknowns', 'error', 'eoc']


@dataclass
class ReportRow:
    """One refinement level of a convergence study."""
    level: int
    unknowns: int
    error: float
    eoc: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    """Per-level rows plus metadata (config echo, wall time, stage timings)."""
    name: str
    rows: List[ReportRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def unknowns(self) -> List[int]:
        return [row.unknowns for row in self.rows]

    @property
    def errors(self) -> List[float]:
        return [row.error for row in self.rows]

    @property
    def eocs(self) -> List[Optional[float]]:
        return [row.eoc for row in self.rows]

    @property
    def final_eoc(self) -> Optional[float]:
        return self.rows[-1].eoc if self.rows else None

    def to_frame(self) -> pd.DataFrame:
        """Convergence table; eoc is NaN on the first row so it prints empty in CSV."""
        return pd.DataFrame(
            {
                'unknowns': pd.array(self.unknowns, dtype='int64'),
                'error': pd.array(self.errors, dtype='float64'),
                'eoc': pd.array([float('nan') if e is None else e for e in self.eocs], dtype='float64'),
            },
            columns=CSV_COLUMNS,
        )
