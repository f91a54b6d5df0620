"""Shared result container for every evaluation in the toolkit."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def percent_change(new: float, old: float) -> float:
    """Relative change in percent; 0 -> 0 stays 0, growth from 0 is undefined."""
    if old == 0:
        return 0.0 if new == 0 else float("inf")
    return (new - old) / abs(old) * 100.0


@dataclass
class EvalReport:
    """Headline metrics plus per-category breakdowns for one evaluation run.

    headline values are either percentages (accuracy-style metrics) or
    fractions (precision/recall style); both live in [0, 100].
    """

    task: str
    n: int
    headline: dict[str, float]
    breakdowns: dict[str, dict] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    delta: dict[str, float] | None = None

    def __post_init__(self) -> None:
        for name, value in self.headline.items():
            if not (0.0 <= value <= 100.0):
                raise ValueError(f"metric {name}={value} outside [0, 100]")

    def compared_to(self, baseline: "EvalReport") -> "EvalReport":
        """Return a copy carrying percent change versus a baseline run."""
        delta = {
            name: percent_change(value, baseline.headline[name])
            for name, value in self.headline.items()
            if name in baseline.headline
        }
        return EvalReport(
            task=self.task,
            n=self.n,
            headline=dict(self.headline),
            breakdowns=dict(self.breakdowns),
            extras=dict(self.extras),
            delta=delta,
        )

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "n": self.n,
            "headline": dict(self.headline),
            "breakdowns": dict(self.breakdowns),
            "extras": dict(self.extras),
        }
        if self.delta is not None:
            out["delta"] = dict(self.delta)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def to_table(self) -> str:
        """Terminal-friendly rendering; numbers at fixed precision."""
        lines = [f"task: {self.task}  (n={self.n})"]
        for name in sorted(self.headline):
            row = f"  {name:<24} {self.headline[name]:8.2f}"
            if self.delta and name in self.delta:
                row += f"  ({self.delta[name]:+.1f}% vs baseline)"
            lines.append(row)
        for group in sorted(self.breakdowns):
            lines.append(f"  -- {group} --")
            for key in sorted(self.breakdowns[group]):
                value = self.breakdowns[group][key]
                if isinstance(value, dict):
                    cells = "  ".join(f"{k}={v:.4f}" for k, v in sorted(value.items()))
                    lines.append(f"  {key:<24} {cells}")
                else:
                    lines.append(f"  {key:<24} {value:8.4f}")
        for key in sorted(self.extras):
            lines.append(f"  {key}: {self.extras[key]}")
        return "\n".join(lines)
