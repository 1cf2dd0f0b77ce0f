"""Sampled shape-functional traces and their CSV / JSON / SVG exports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .domain import RasterDomain

__all__ = ["Sample", "Jump", "FlowTrace", "CSV_COLUMNS", "domain_svg"]

CSV_COLUMNS = ("tau", "measure", "lambda", "torsion", "perimeter", "gamma_to_target")


@dataclass
class Sample:
    tau: float
    measure: float
    lam: float = math.nan
    torsion: float = math.nan
    perimeter: float = math.nan
    gamma_to_target: float | None = None
    error: str | None = None

    def row(self) -> list:
        g = "" if self.gamma_to_target is None else repr(float(self.gamma_to_target))
        return [repr(float(v)) for v in (self.tau, self.measure, self.lam, self.torsion, self.perimeter)] + [g]


@dataclass
class Jump:
    tau_before: float
    tau_after: float
    delta_T: float


@dataclass
class FlowTrace:
    samples: list = field(default_factory=list)
    jumps: list = field(default_factory=list)
    report: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    domains: list = field(default_factory=list, repr=False)  # optional per-sample masks, not serialized

    def __post_init__(self):
        taus = [s.tau for s in self.samples]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("sample parameters must be strictly increasing")

    def __len__(self):
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        attr = "lam" if name == "lambda" else name
        return np.array(
            [math.nan if getattr(s, attr) is None else getattr(s, attr) for s in self.samples], dtype=float
        )

    @property
    def taus(self) -> np.ndarray:
        return self.column("tau")

    def monotonicity(self) -> dict:
        """Largest relative violation of T nondecreasing and lambda nonincreasing."""
        out = {}
        t = self.column("torsion")
        lam = self.column("lambda")
        if len(t) > 1 and np.isfinite(t).any():
            out["torsion_drop"] = float(np.nanmax(np.maximum(0.0, (t[:-1] - t[1:]) / np.abs(t[:-1]))))
        if len(lam) > 1 and np.isfinite(lam).any():
            out["lambda_rise"] = float(np.nanmax(np.maximum(0.0, (lam[1:] - lam[:-1]) / np.abs(lam[:-1]))))
        return out

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in self.samples:
            w.writerow(s.row())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, (np.floating, np.integer)):
                return clean(v.item())
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        samples = []
        for s in self.samples:
            d = asdict(s)
            d["lambda"] = d.pop("lam")
            samples.append(d)
        return clean(
            {
                "columns": list(CSV_COLUMNS),
                "samples": samples,
                "jumps": [asdict(j) for j in self.jumps],
                "report": self.report,
                "warnings": self.warnings,
            }
        )

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def domain_svg(domain: RasterDomain, scale: float = 4.0) -> str:
    """Masked cells as filled squares (row runs), severed faces as red segments."""
    ny, nx = domain.mask.shape
    H = ny * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * scale:g}" height="{H:g}" '
        f'viewBox="0 0 {nx * scale:g} {H:g}">',
        f'<rect width="{nx * scale:g}" height="{H:g}" fill="white" stroke="black"/>',
    ]
    for j in range(ny):
        row = np.concatenate(([0], domain.mask[j].astype(np.int8), [0]))
        d = np.diff(row)
        for s, e in zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)):
            y = H - (j + 1) * scale
            parts.append(f'<rect x="{s * scale:g}" y="{y:g}" width="{(e - s) * scale:g}" height="{scale:g}" fill="#bbb"/>')
    sx, sy = domain.severed()
    for j, i in zip(*np.nonzero(sx & domain.mask[:, :-1] & domain.mask[:, 1:])):
        x = (i + 1) * scale
        parts.append(f'<line x1="{x:g}" y1="{H - j * scale:g}" x2="{x:g}" y2="{H - (j + 1) * scale:g}" stroke="red"/>')
    for j, i in zip(*np.nonzero(sy & domain.mask[:-1, :] & domain.mask[1:, :])):
        y = H - (j + 1) * scale
        parts.append(f'<line x1="{i * scale:g}" y1="{y:g}" x2="{(i + 1) * scale:g}" y2="{y:g}" stroke="red"/>')
    parts.append("</svg>")
    return "\n".join(parts)
