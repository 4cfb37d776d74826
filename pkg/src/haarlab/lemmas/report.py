"""Report and block-matrix containers shared by the verifiers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

__all__ = ["HypothesisError", "LemmaReport", "BlockMatrix2", "merge_reports"]


class HypothesisError(ValueError):
    """The instance does not satisfy the hypothesis of the inequality under test."""


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


@dataclass
class LemmaReport:
    """Outcome of checking one inequality or identity on many instances.

    ``max_slack`` is the smallest signed margin seen (rhs - lhs for a claim
    ``lhs <= rhs``), so a negative value marks the worst violation and a
    positive value the tightest pass.
    """

    lemma_id: str
    instances: int = 0
    skipped: int = 0
    violations: int = 0
    max_slack: float = math.inf
    worst_case: Optional[Dict[str, Any]] = None
    details: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, slack: float, ok: bool, **info) -> None:
        self.instances += 1
        if slack < self.max_slack:
            self.max_slack = float(slack)
            self.worst_case = dict(info, slack=float(slack))
        if not ok:
            self.violations += 1
            self.details.append(dict(info, slack=float(slack)))

    def skip(self, n: int = 1) -> None:
        self.skipped += n

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "lemma_id": self.lemma_id,
                "instances": self.instances,
                "skipped": self.skipped,
                "violations": self.violations,
                "max_slack": self.max_slack,
                "worst_case": self.worst_case,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, default=str)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.lemma_id}: instances={self.instances} skipped={self.skipped} "
            f"violations={self.violations} max_slack={self.max_slack:.3e}"
        )


def merge_reports(lemma_id: str, reports) -> LemmaReport:
    """Sum counts; keep the worst slack and all violation records."""
    out = LemmaReport(lemma_id)
    for r in reports:
        out.instances += r.instances
        out.skipped += r.skipped
        out.violations += r.violations
        out.details.extend(r.details)
        if r.max_slack < out.max_slack:
            out.max_slack = r.max_slack
            out.worst_case = r.worst_case
    return out


@dataclass(frozen=True)
class BlockMatrix2:
    """``[[top_left, top_right], [bottom_left, bottom_right]]`` with a ``k x k`` corner."""

    top_left: np.ndarray
    top_right: np.ndarray
    bottom_left: np.ndarray
    bottom_right: np.ndarray

    def __post_init__(self):
        k = self.top_left.shape[0]
        r = self.bottom_right.shape[0]
        if (
            self.top_left.shape != (k, k)
            or self.top_right.shape != (k, r)
            or self.bottom_left.shape != (r, k)
            or self.bottom_right.shape != (r, r)
        ):
            raise ValueError("inconsistent block shapes")

    @property
    def k(self) -> int:
        return self.top_left.shape[0]

    @property
    def n(self) -> int:
        return self.k + self.bottom_right.shape[0]

    @classmethod
    def split(cls, A, k: int) -> "BlockMatrix2":
        A = np.asarray(A, dtype=np.complex128)
        n = A.shape[0]
        if A.shape != (n, n) or not 1 <= k < n:
            raise ValueError(f"cannot split shape {A.shape} at k={k}")
        return cls(A[:k, :k].copy(), A[:k, k:].copy(), A[k:, :k].copy(), A[k:, k:].copy())

    def assemble(self) -> np.ndarray:
        return np.block([[self.top_left, self.top_right], [self.bottom_left, self.bottom_right]])
