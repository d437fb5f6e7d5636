"""Parameter-grid scans over state families with per-point criterion classification."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .criteria import ALPHA_FREE, DEFAULT_TOL, REGISTRY, CriterionReport, evaluate
from .maps import AntisymmetricUnitary, canonical_V, spin_flip_V
from .states import (
    BellDiagonalParams,
    DivParams,
    So3Params,
    bell_diagonal,
    bell_mixture,
    divincenzo,
    so3_invariant_4x4,
)


@dataclass(frozen=True)
class Family:
    params: tuple
    build: Callable
    valid: Callable
    dims: tuple
    u_default: str = "canonical"


FAMILIES = {
    "bell_diagonal": Family(("t1", "t2", "t3"), lambda v: bell_diagonal(v), lambda v: BellDiagonalParams(*v).is_valid(), (2, 2)),
    "bell_mixture": Family(("p", "q", "r"), lambda v: bell_mixture(*v), lambda v: So3Params(*v).is_valid(), (2, 2)),
    "divincenzo": Family(("b", "c"), lambda v: divincenzo(v), lambda v: DivParams(*v).is_valid(), (2, 2)),
    "so3_4x4": Family(("p", "q", "r"), lambda v: so3_invariant_4x4(v), lambda v: So3Params(*v).is_valid(), (4, 4), "spin"),
}
FAMILY_ALIASES = {"so3": "so3_4x4", "bell": "bell_diagonal", "div": "divincenzo"}


def family(name: str) -> Family:
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
    return FAMILIES[name]


@dataclass(frozen=True)
class CriterionSpec:
    name: str
    alpha: object = None
    side: str = "A"

    @property
    def label(self) -> str:
        base = self.name if self.alpha is None else f"{self.name}@{self.alpha}"
        return base if self.side == "A" else f"{base}_{self.side}"

    @classmethod
    def parse(cls, item) -> "CriterionSpec":
        """Accept {"name", "alpha", "side"} dicts or "name[:alpha[:side]]" strings."""
        if isinstance(item, CriterionSpec):
            return item
        if isinstance(item, dict):
            name, alpha, side = item["name"], item.get("alpha"), item.get("side", "A")
        else:
            parts = str(item).split(":")
            name = parts[0]
            alpha = parts[1] if len(parts) > 1 and parts[1] != "" else None
            side = parts[2] if len(parts) > 2 else "A"
        if name not in REGISTRY:
            raise ValueError(f"unknown criterion {name!r}; known: {sorted(REGISTRY)}")
        if isinstance(alpha, str):
            alpha = math.inf if alpha in ("inf", "∞") else (int(alpha) if alpha.lstrip("-").isdigit() else float(alpha))
        if name in ALPHA_FREE:
            alpha = None
        return cls(name, alpha, side.upper())

    def to_dict(self) -> dict:
        a = self.alpha
        if isinstance(a, float) and math.isinf(a):
            a = "inf"
        return {"name": self.name, "alpha": a, "side": self.side}


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


@dataclass
class ScanSpec:
    family: str
    axes: list
    criteria: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    u: str = "default"  # "default", "canonical", "spin", or a path to a matrix JSON
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.family = FAMILY_ALIASES.get(self.family, self.family)
        fam = family(self.family)
        self.axes = [a if isinstance(a, Axis) else Axis(a["name"], float(a["min"]), float(a["max"]), int(a["steps"])) for a in self.axes]
        self.criteria = [CriterionSpec.parse(c) for c in self.criteria]
        self.fixed = {k: float(v) for k, v in self.fixed.items()}
        names = [a.name for a in self.axes] + list(self.fixed)
        if sorted(names) != sorted(fam.params):
            raise ValueError(f"axes {[a.name for a in self.axes]} and fixed {list(self.fixed)} must cover {fam.params} exactly once")
        if any(a.steps < 2 for a in self.axes):
            raise ValueError("every axis needs at least 2 steps")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "fixed": self.fixed,
            "axes": [{"name": a.name, "min": a.min, "max": a.max, "steps": a.steps} for a in self.axes],
            "criteria": [c.to_dict() for c in self.criteria],
            "u": self.u,
            "tol": self.tol,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ScanSpec":
        return cls(d["family"], d["axes"], d.get("criteria", []), d.get("fixed", {}), d.get("u", "default"), d.get("tol", DEFAULT_TOL))

    @classmethod
    def from_json(cls, text: str) -> "ScanSpec":
        return cls.from_dict(json.loads(text))


@dataclass
class Row:
    params: dict
    valid: bool
    reports: list  # CriterionReport per criterion, or None for invalid points


@dataclass
class RegionScan:
    spec: ScanSpec
    rows: list

    def labels(self) -> list:
        return [c.label for c in self.spec.criteria]

    def column(self, label: str) -> int:
        labels = self.labels()
        if label not in labels:
            raise KeyError(f"no criterion {label!r} in this scan; have {labels}")
        return labels.index(label)

    def satisfied(self, label: str) -> np.ndarray:
        """Boolean array over rows; invalid rows read as False (use ``valid_mask``)."""
        j = self.column(label)
        return np.array([r.valid and r.reports[j].satisfied for r in self.rows])

    def margins(self, label: str) -> np.ndarray:
        j = self.column(label)
        return np.array([r.reports[j].margin if r.valid else np.nan for r in self.rows])

    def valid_mask(self) -> np.ndarray:
        return np.array([r.valid for r in self.rows])

    def grid_shape(self) -> tuple:
        return tuple(a.steps for a in self.spec.axes)


def resolve_u(choice: str, fam_name: str, dim: int) -> Optional[AntisymmetricUnitary]:
    """The antisymmetric unitary used by time-reversal criteria in a scan."""
    if choice == "default":
        choice = family(fam_name).u_default
    if choice == "canonical":
        return canonical_V(dim)
    if choice == "spin":
        return spin_flip_V(dim)
    return load_unitary(choice)


def load_unitary(path) -> AntisymmetricUnitary:
    d = json.loads(Path(path).read_text())
    m = np.asarray(d["re"]) + 1j * np.asarray(d.get("im", np.zeros_like(d["re"])))
    return AntisymmetricUnitary(m)


def _point_values(spec: ScanSpec, coords) -> tuple:
    fam = family(spec.family)
    vals = dict(spec.fixed)
    vals.update({a.name: float(c) for a, c in zip(spec.axes, coords)})
    return tuple(vals[p] for p in fam.params), vals


def classify_point(family_name: str, params: Sequence[float], criteria, u=None, tol: float = DEFAULT_TOL) -> Row:
    fam = family(family_name)
    crits = [CriterionSpec.parse(c) for c in criteria]
    named = dict(zip(fam.params, (float(x) for x in params)))
    if not fam.valid(tuple(params)):
        return Row(named, False, [None] * len(crits))
    rho = fam.build(tuple(params))
    if u is None:
        u = resolve_u("default", family_name, fam.dims[0])
    reports = [evaluate(c.name, rho, c.alpha, c.side, u, tol) for c in crits]
    return Row(named, True, reports)


def _grid(spec: ScanSpec) -> list:
    axes = [a.values() for a in spec.axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    return list(zip(*(m.ravel() for m in mesh)))


def run_scan(spec: ScanSpec, threads: int = 1) -> RegionScan:
    fam = family(spec.family)
    # every family here has equal local dimensions
    u = resolve_u(spec.u, spec.family, fam.dims[0])

    def one(coords):
        params, _ = _point_values(spec, coords)
        return classify_point(spec.family, params, spec.criteria, u, spec.tol)

    pts = _grid(spec)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, pts, chunksize=64))
    else:
        rows = [one(p) for p in pts]
    return RegionScan(spec, rows)


# --- region arithmetic ----------------------------------------------------------

def count_outside(scan: RegionScan, inner, outer) -> int:
    """Number of valid points in ``inner`` but not in ``outer`` (labels or boolean arrays)."""
    a = scan.satisfied(inner) if isinstance(inner, str) else np.asarray(inner)
    b = scan.satisfied(outer) if isinstance(outer, str) else np.asarray(outer)
    return int(np.sum(scan.valid_mask() & a & ~b))


# --- output ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(scan: RegionScan, out=None) -> str:
    labels = scan.labels()
    header = [a.name for a in scan.spec.axes]
    for lab in labels:
        header += [f"margin_{lab}", f"sat_{lab}"]
    lines = [",".join(header)]
    for row in scan.rows:
        cells = [_fmt(row.params[a.name]) for a in scan.spec.axes]
        for rep in row.reports:
            cells += ["", ""] if rep is None else [_fmt(rep.margin), "1" if rep.satisfied else "0"]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if out is not None:
        Path(out).write_text(text)
    return text


def emit_svg(scan: RegionScan, label: str, out=None, cell: Optional[int] = None) -> str:
    """Heatmap of one criterion over a two-axis scan; second axis points up."""
    if len(scan.spec.axes) != 2:
        raise ValueError("SVG output needs exactly two axes")
    nx, ny = scan.grid_shape()
    cell = cell or max(1, 400 // max(nx, ny))
    colors = {"sat": "#8c8c8c", "vio": "#e8e8e8", "inv": "#ffffff"}
    j = scan.column(label)
    margin, legend_h = 40, 60
    w, h = nx * cell + 2 * margin, ny * cell + 2 * margin + legend_h
    out_lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    for k, row in enumerate(scan.rows):
        ix, iy = divmod(k, ny)
        kind = "inv" if not row.valid else ("sat" if row.reports[j].satisfied else "vio")
        if kind == "inv":
            continue
        x = margin + ix * cell
        y = margin + (ny - 1 - iy) * cell
        out_lines.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{colors[kind]}"/>')
    ax0, ax1 = scan.spec.axes
    out_lines.append(f'<rect x="{margin}" y="{margin}" width="{nx * cell}" height="{ny * cell}" fill="none" stroke="#000000"/>')
    out_lines.append(f'<text x="{margin + nx * cell / 2}" y="{margin + ny * cell + 16}" font-size="12" text-anchor="middle">{ax0.name} [{ax0.min:g}, {ax0.max:g}]</text>')
    out_lines.append(f'<text x="{margin - 8}" y="{margin + ny * cell / 2}" font-size="12" text-anchor="end">{ax1.name}</text>')
    ly = margin + ny * cell + 30
    for i, (kind, text) in enumerate((("sat", "satisfied"), ("vio", "violated"), ("inv", "not a state"))):
        lx = margin + i * 110
        out_lines.append(f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{colors[kind]}" stroke="#000000"/>')
        out_lines.append(f'<text x="{lx + 16}" y="{ly + 11}" font-size="12">{text}</text>')
    out_lines.append(f'<text x="{margin}" y="{margin - 10}" font-size="13">{label}</text>')
    out_lines.append("</svg>")
    text = "\n".join(out_lines) + "\n"
    if out is not None:
        Path(out).write_text(text)
    return text


# --- presets --------------------------------------------------------------------

PRESET_CRITERIA = {
    "fig1": ["fact1:3", "fact1:6", "lew:3", "lew:6", "ppt"],
    "fig2": ["ppt", "entropic:3", "entropic:5", "fact1:3", "fact1:5"],
    "fig3": ["ppt", "breuer", "entropic:5", "fact3:5", "fact3:8", "fact4:5"],
    "fig4": ["ppt", "breuer", "fact3:5", "fact2_module:5", "fact3_limit", "fact2_module_limit"],
    "fig5": ["ppt", "breuer", "fact4:17", "fact4_limit"],
    "fig6": ["ppt", "breuer", "oddcut:6", "fact3:6", "oddcut:13", "fact3:13"],
    "fig7": ["ppt", "breuer", "entropic:2", "quadratic"],
}


def preset(name: str, slice_value: float = 0.0, steps: int = 400) -> ScanSpec:
    """Figure-reproduction specs. fig1 slices t3; fig2 ignores the slice; fig3-7 slice p."""
    crits = PRESET_CRITERIA[name]
    if name == "fig1":
        return ScanSpec("bell_diagonal", [{"name": "t1", "min": -1, "max": 1, "steps": steps}, {"name": "t2", "min": -1, "max": 1, "steps": steps}], crits, {"t3": slice_value})
    if name == "fig2":
        return ScanSpec("divincenzo", [{"name": "b", "min": 0, "max": 1, "steps": steps}, {"name": "c", "min": 0, "max": 1, "steps": steps}], crits)
    return ScanSpec("so3_4x4", [{"name": "q", "min": 0, "max": 1, "steps": steps}, {"name": "r", "min": 0, "max": 1, "steps": steps}], crits, {"p": slice_value})


PRESET_SLICES = {"fig1": (-0.5, 0.0, 0.5), "fig2": (0.0,), **{f"fig{k}": (0.0, 0.2, 0.3, 0.6) for k in range(3, 8)}}


def write_presets(directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, slices in PRESET_SLICES.items():
        for s in slices:
            tag = "" if name == "fig2" else f"_{'t3' if name == 'fig1' else 'p'}{s:g}"
            path = directory / f"{name}{tag}.json"
            path.write_text(preset(name, s).to_json() + "\n")
            written.append(path)
    return written
