"""Structured experiment records and their text/CSV serialization.

A report collects named checks (computed value, reference value, tolerance,
provenance of the reference) plus optional curve data.  The verdict is pass
exactly when every check's error is within its tolerance.  CSV files are
written with 17 significant digits, '.' decimal separator and no locale
dependence, so equal runs produce byte-identical files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Check", "ExperimentReport", "format_float", "write_csv"]


def format_float(v) -> str:
    return format(float(v), ".17g")


def write_csv(path: Path | str, header: list[str], columns: list[np.ndarray]) -> None:
    path = Path(path)
    rows = len(columns[0]) if columns else 0
    lines = [",".join(header)]
    for i in range(rows):
        lines.append(",".join(format_float(col[i]) for col in columns))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class Check:
    name: str
    computed: float
    reference: float
    tolerance: float
    kind: str = "rel"  # rel | abs | bound (computed itself must be <= tolerance)
    provenance: str = "closed-form"

    @property
    def error(self) -> float:
        if self.kind == "bound":
            return float(self.computed)
        err = abs(self.computed - self.reference)
        if self.kind == "rel":
            scale = abs(self.reference)
            return err / scale if scale > 0 else err
        return err

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


@dataclass
class ExperimentReport:
    name: str
    config: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add_check(self, name: str, computed: float, reference: float,
                  tolerance: float, kind: str = "rel",
                  provenance: str = "closed-form") -> Check:
        chk = Check(name, float(computed), float(reference), float(tolerance),
                    kind, provenance)
        self.checks.append(chk)
        return chk

    def add_note(self, text: str) -> None:
        self.notes.append(text)

    def add_curve(self, name: str, header: list[str], columns: list) -> None:
        self.curves[name] = (header, [np.asarray(c, dtype=float) for c in columns])

    def finish(self) -> "ExperimentReport":
        self.runtime_s = time.perf_counter() - self._t0
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def computed(self) -> dict:
        return {c.name: c.computed for c in self.checks}

    @property
    def reference(self) -> dict:
        return {c.name: c.reference for c in self.checks}

    def to_text(self) -> str:
        lines = [f"experiment: {self.name}",
                 f"verdict: {'pass' if self.passed else 'FAIL'}",
                 f"runtime_s: {self.runtime_s:.3f}"]
        if self.config:
            lines.append("[config]")
            for k, v in self.config.items():
                lines.append(f"  {k} = {v}")
        if self.seeds:
            lines.append(f"seeds: {', '.join(str(s) for s in self.seeds)}")
        lines.append("[checks]")
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(
                f"  {status}  {c.name}: computed={format_float(c.computed)} "
                f"reference={format_float(c.reference)} "
                f"error={format_float(c.error)} ({c.kind}) "
                f"tol={format_float(c.tolerance)} [{c.provenance}]")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"

    def write(self, outdir: Path | str, stem: str | None = None) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.name.replace(" ", "_")
        written = []
        txt = outdir / f"{stem}.txt"
        txt.write_text(self.to_text())
        written.append(txt)
        table = outdir / f"{stem}__checks.csv"
        write_csv(table,
                  ["computed", "reference", "error", "tolerance"],
                  [np.array([c.computed for c in self.checks]),
                   np.array([c.reference for c in self.checks]),
                   np.array([c.error for c in self.checks]),
                   np.array([c.tolerance for c in self.checks])])
        written.append(table)
        for cname, (header, cols) in self.curves.items():
            p = outdir / f"{stem}__{cname}.csv"
            write_csv(p, header, cols)
            written.append(p)
        return written
