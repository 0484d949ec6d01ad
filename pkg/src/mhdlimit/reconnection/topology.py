"""Reconnection certificates from hyperbolic-null counts."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..spectral import SpectralField
from .lines import FieldLine, TracerError, trace_field_line
from .nulls import NullScan, scan_nulls


@dataclass
class TopologyReport:
    label0: str
    label1: str
    scan0: NullScan
    scan1: NullScan
    lines0: list[FieldLine] = field(default_factory=list)
    lines1: list[FieldLine] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int]:
        return self.scan0.hyperbolic_count, self.scan1.hyperbolic_count

    @property
    def certified(self) -> bool:
        """Differing hyperbolic-null counts rule out a homeomorphism carrying one line field to the other."""
        c0, c1 = self.counts
        return c0 != c1

    def text(self) -> str:
        c0, c1 = self.counts
        out = [
            f"snapshot_0: {self.label0}",
            f"snapshot_1: {self.label1}",
            f"nulls_0: {len(self.scan0.nulls)} (hyperbolic {c0})",
            f"nulls_1: {len(self.scan1.nulls)} (hyperbolic {c1})",
        ]
        if self.certified:
            out.append(f"certificate: RECONNECTION (hyperbolic null count {c0} -> {c1})")
        else:
            out.append("certificate: none (hyperbolic null counts agree)")
        return "\n".join(out) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.text())
        return path


def topology_report(b0: SpectralField, b1: SpectralField, seeds: np.ndarray | None = None,
                    s_max: float = 10.0, labels: tuple[str, str] = ("t0", "t1"), **scan_kw) -> TopologyReport:
    if b0.grid != b1.grid:
        raise ValueError("snapshots live on different grids")
    rep = TopologyReport(labels[0], labels[1], scan_nulls(b0, **scan_kw), scan_nulls(b1, **scan_kw))
    if seeds is not None:
        for b, out in ((b0, rep.lines0), (b1, rep.lines1)):
            for s in seeds:
                try:
                    out.append(trace_field_line(b, s, s_max, tol=1e-7))
                except TracerError:
                    continue
    return rep
