"""Pass/fail reporting for residual and conservation checks."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["ResidualReport"]


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one verification (PDE, boundary, invariant or ODE check).

    ``metrics`` holds named scalar results (norms, drifts, slopes);
    ``verdict`` is True exactly when every metric listed in
    ``checked_metrics`` is <= ``tolerance``. Extra diagnostic tables go in
    ``tables`` (lists of rows) and free-form context in ``meta``.
    """

    label: str
    tolerance: float
    metrics: dict
    checked_metrics: tuple
    verdict: bool
    tables: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @staticmethod
    def from_metrics(label, tolerance, metrics, checked_metrics, tables=None, meta=None):
        verdict = all(abs(metrics[k]) <= tolerance for k in checked_metrics)
        return ResidualReport(
            label=label,
            tolerance=tolerance,
            metrics=dict(metrics),
            checked_metrics=tuple(checked_metrics),
            verdict=bool(verdict),
            tables=tables or {},
            meta=meta or {},
        )

    def to_dict(self):
        return {
            "label": self.label,
            "tolerance": self.tolerance,
            "metrics": self.metrics,
            "checked_metrics": list(self.checked_metrics),
            "verdict": "pass" if self.verdict else "fail",
            "tables": self.tables,
            "meta": self.meta,
        }

    def render_text(self) -> str:
        """Aligned human-readable table."""
        lines = [f"{self.label}  (tolerance {self.tolerance:g})"]
        width = max(len(k) for k in self.metrics) if self.metrics else 0
        for k in sorted(self.metrics):
            mark = ""
            if k in self.checked_metrics:
                mark = "  [ok]" if abs(self.metrics[k]) <= self.tolerance else "  [FAIL]"
            lines.append(f"  {k:<{width}}  {self.metrics[k]: .6e}{mark}")
        lines.append(f"  verdict: {'pass' if self.verdict else 'FAIL'}")
        return "\n".join(lines)
