"""Problem files, JSON/CSV writers and a dependency-free SVG of ``x(h)``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError
from .measures import Measure
from .solver import SolverConfig
from .support import SupportAnalyzer, SupportReport

VALIDATION_DEFAULTS = {"ks_tol": 0.05, "margin": 0.05, "atom_margin": 1e-6, "atom_tol": 0.01,
                       "slope_tol": 0.02, "ratio_tol": 0.05}


@dataclass
class ProblemSpec:
    A: Measure
    B: Measure
    gamma: float
    solver: SolverConfig = field(default_factory=SolverConfig)
    simulation: dict = field(default_factory=dict)
    validation: dict = field(default_factory=lambda: dict(VALIDATION_DEFAULTS))
    outputs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise DomainError("field 'gamma': must be a positive number")
        if not math.isfinite(self.A.second_moment()):
            raise DomainError("field 'A': second moment must be finite")

    def to_dict(self) -> dict:
        cfg = {k: getattr(self.solver, k) for k in self.solver.__dataclass_fields__}
        cfg = {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}
        return {"A": self.A.to_dict(), "B": self.B.to_dict(), "gamma": self.gamma, "solver": cfg,
                "simulation": dict(self.simulation), "validation": dict(self.validation),
                "outputs": list(self.outputs)}

    @classmethod
    def from_dict(cls, data: Any) -> "ProblemSpec":
        if not isinstance(data, dict):
            raise DomainError("top level: expected a JSON object")
        for key in ("A", "B", "gamma"):
            if key not in data:
                raise DomainError(f"missing required field '{key}'")
        unknown = set(data) - {"A", "B", "gamma", "solver", "simulation", "validation", "outputs"}
        if unknown:
            raise DomainError(f"unknown field(s): {', '.join(sorted(unknown))}")
        measures = {}
        for key in ("A", "B"):
            try:
                measures[key] = Measure.from_dict(data[key])
            except (DomainError, ValueError, TypeError) as exc:
                raise DomainError(f"field '{key}': {exc}") from exc
        overrides = data.get("solver", {}) or {}
        try:
            solver = SolverConfig().replace(**overrides)
        except TypeError as exc:
            raise DomainError(f"field 'solver': {exc}") from exc
        except DomainError as exc:
            raise DomainError(f"field 'solver': {exc}") from exc
        sim = dict(data.get("simulation", {}) or {})
        bad = set(sim) - {"n", "seed", "entry_law", "replicates"}
        if bad:
            raise DomainError(f"field 'simulation': unknown key(s) {', '.join(sorted(bad))}")
        val = dict(VALIDATION_DEFAULTS)
        extra = data.get("validation", {}) or {}
        bad = set(extra) - set(VALIDATION_DEFAULTS)
        if bad:
            raise DomainError(f"field 'validation': unknown key(s) {', '.join(sorted(bad))}")
        val.update(extra)
        gamma = data["gamma"]
        if isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
            raise DomainError("field 'gamma': must be a positive number")
        return cls(measures["A"], measures["B"], float(gamma), solver, sim, val, list(data.get("outputs", [])))


def load_problem(path) -> ProblemSpec:
    """Parse a problem file; JSON syntax errors carry line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return ProblemSpec.from_dict(data)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def report_from_json(data: dict) -> dict:
    """Normalize a SupportReport JSON for comparisons (lists of floats)."""
    return {
        "support": [[float(a), float(b)] for a, b in data["support"]],
        "atoms": [{"x": float(a["x"]), "mass": float(a["mass"])} for a in data["atoms"]],
        "edges": [dict(e) for e in data["edges"]],
        "flags": list(data["flags"]),
    }


# SVG -------------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def curve_svg(analyzer: SupportAnalyzer, report: SupportReport, eigenvalues=None,
              width: int = 640, height: int = 480, samples: int = 1500) -> str:
    """Plot of ``x(h)`` with increasing stretches thickened.

    The support is drawn as thick bars on the vertical axis; limits at the
    boundary of the admissible set are marked by hollow dots; optional
    eigenvalues appear as ticks on the right edge.
    """
    b_lo, b_hi = analyzer.B.support().hull()
    pad = max(2.0, 0.5 * (b_hi - b_lo))
    h_lo, h_hi = b_lo - pad, b_hi + pad
    finite = [v for iv in report.support for v in iv if math.isfinite(v)]
    x_lo = min([h_lo] + finite) - 0.5
    x_hi = max([h_hi] + finite) + 0.5
    m = 40.0

    def px(h):
        return m + (h - h_lo) / (h_hi - h_lo) * (width - 2 * m)

    def py(x):
        return height - m - (x - x_lo) / (x_hi - x_lo) * (height - 2 * m)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if h_lo < 0 < h_hi:
        parts.append(f'<line x1="{_fmt(px(0))}" y1="{m}" x2="{_fmt(px(0))}" y2="{height - m}" stroke="#999"/>')
    if x_lo < 0 < x_hi:
        parts.append(f'<line x1="{m}" y1="{_fmt(py(0))}" x2="{width - m}" y2="{_fmt(py(0))}" stroke="#999"/>')
    H = report.h_domain.clip(h_lo, h_hi) if report.h_domain is not None else []
    for a, b in H:
        k = max(16, int(samples * (b - a) / (h_hi - h_lo)))
        t = (np.arange(k) + 0.5) / k
        hs = a + (b - a) * 0.5 * (1.0 - np.cos(math.pi * t))
        pts = [(h, analyzer.x_of(h), analyzer.x1_of(h)) for h in hs]
        run: list[str] = []
        thick: list[list[str]] = [[]]
        for h, x, x1 in pts:
            if not (x_lo <= x <= x_hi):
                if run:
                    parts.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{" ".join(run)}"/>')
                run = []
                thick.append([])
                continue
            p = f"{_fmt(px(h))},{_fmt(py(x))}"
            run.append(p)
            if x1 > 0:
                thick[-1].append(p)
            else:
                thick.append([])
        if run:
            parts.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{" ".join(run)}"/>')
        for seg in thick:
            if len(seg) > 1:
                parts.append(f'<polyline fill="none" stroke="red" stroke-width="3" points="{" ".join(seg)}"/>')
    for a, b in report.support:
        a, b = max(a, x_lo), min(b, x_hi)
        if a > b:
            continue
        if a == b:
            parts.append(f'<circle cx="{m}" cy="{_fmt(py(a))}" r="3" fill="blue"/>')
        else:
            parts.append(f'<line x1="{m}" y1="{_fmt(py(a))}" x2="{m}" y2="{_fmt(py(b))}" stroke="blue" stroke-width="5"/>')
    for lim in report.boundary_limits:
        h0, x0 = lim["h0"], lim["x"]
        if h_lo <= h0 <= h_hi and x_lo <= x0 <= x_hi:
            parts.append(f'<circle cx="{_fmt(px(h0))}" cy="{_fmt(py(x0))}" r="4" fill="white" stroke="black"/>')
    if eigenvalues is not None:
        for lam in np.asarray(eigenvalues):
            if x_lo <= lam <= x_hi:
                y = _fmt(py(lam))
                parts.append(f'<line x1="{width - m}" y1="{y}" x2="{width - m + 8}" y2="{y}" stroke="green"/>')
    parts.append(f'<text x="{width / 2}" y="{height - 8}" font-size="12" text-anchor="middle">h</text>')
    parts.append(f'<text x="12" y="{height / 2}" font-size="12">x</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
