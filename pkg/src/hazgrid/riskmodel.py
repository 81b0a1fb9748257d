"""Risk scoring: feature transforms, scenario weights, per-cell risk fields.

Every raw feature is normalized onto [0, 1] by a configurable transform,
combined into a hazard score (fire behavior: rate of spread + intensity)
and an exposure score (population + housing value), then discounted by a
transform of the travel time from the nearest station:

    base = w_fb * FB + w_sd * SD
    ri   = base * s(travel_seconds)

Weight presets: the balanced index splits FB/SD evenly, the
fire-weighted variant uses 0.75/0.25, the exposure-weighted one 0.25/0.75.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import AlignmentError, LayerError, ScenarioSpecError
from .hexgrid import CellId, LayerGrid

FEATURES = ("ROS", "FI", "POP", "MHV")
GROUPS = {"FB": ("ROS", "FI"), "SD": ("POP", "MHV")}
TRANSFORM_KINDS = ("linear", "linear_capped", "log1p", "exponential", "piecewise")

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class TransformSpec:
    """One normalization rule. ``cap`` may be a number or a percentile
    directive ``{"percentile": p}`` resolved against the layer's values."""

    kind: str
    cap: object = None
    scale: Optional[float] = None
    knots: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ScenarioSpecError(f"unknown transform kind {self.kind!r}")
        if self.kind in ("linear_capped", "log1p"):
            if self.cap is None:
                raise ScenarioSpecError(f"{self.kind} transform requires a cap")
            if isinstance(self.cap, dict):
                p = self.cap.get("percentile")
                if set(self.cap) != {"percentile"} or not isinstance(p, (int, float)) \
                        or not (0 <= p <= 100):
                    raise ScenarioSpecError(f"bad percentile cap {self.cap!r}")
            elif not isinstance(self.cap, (int, float)) or self.cap <= 0:
                raise ScenarioSpecError(f"cap must be positive, got {self.cap!r}")
        if self.kind == "exponential":
            if self.scale is None or self.scale <= 0:
                raise ScenarioSpecError("exponential transform requires scale > 0")
        if self.kind == "piecewise":
            knots = self.knots
            if not knots or len(knots) < 2:
                raise ScenarioSpecError("piecewise transform requires >= 2 knots")
            xs = [k[0] for k in knots]
            ys = [k[1] for k in knots]
            if any(x2 <= x1 for x1, x2 in zip(xs, xs[1:])):
                raise ScenarioSpecError("piecewise knot x values must be strictly increasing")
            if any(y2 < y1 for y1, y2 in zip(ys, ys[1:])):
                raise ScenarioSpecError("piecewise knot y values must be non-decreasing")
            if min(ys) < 0.0 or max(ys) > 1.0:
                raise ScenarioSpecError("piecewise knot y values must lie in [0, 1]")

    def resolve_cap(self, values: np.ndarray) -> Optional[float]:
        if not isinstance(self.cap, dict):
            return None if self.cap is None else float(self.cap)
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            return 0.0
        return float(np.percentile(finite, float(self.cap["percentile"])))

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Normalize onto [0, 1]. Degenerate inputs (zero cap or constant
        zero field) map to all zeros rather than dividing by zero."""
        v = np.asarray(values, dtype=np.float64)
        if self.kind == "linear":
            finite = v[np.isfinite(v)]
            top = finite.max() if finite.size else 0.0
            if top <= 0.0:
                return np.zeros_like(v)
            return np.clip(v / top, 0.0, 1.0)
        if self.kind == "linear_capped":
            cap = self.resolve_cap(v)
            if cap is None or cap <= 0.0:
                return np.zeros_like(v)
            return np.clip(np.minimum(v, cap) / cap, 0.0, 1.0)
        if self.kind == "log1p":
            cap = self.resolve_cap(v)
            if cap is None or cap <= 0.0:
                return np.zeros_like(v)
            return np.clip(np.log1p(np.minimum(np.maximum(v, 0.0), cap)) / math.log1p(cap), 0.0, 1.0)
        if self.kind == "exponential":
            return 1.0 - np.exp(-np.maximum(v, 0.0) / float(self.scale))
        xs = np.array([k[0] for k in self.knots], dtype=np.float64)
        ys = np.array([k[1] for k in self.knots], dtype=np.float64)
        return np.interp(v, xs, ys)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.cap is not None:
            out["cap"] = self.cap
        if self.scale is not None:
            out["scale"] = self.scale
        if self.knots is not None:
            out["knots"] = [list(k) for k in self.knots]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "TransformSpec":
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ScenarioSpecError(f"transform spec must be a dict with 'kind': {raw!r}")
        extra = set(raw) - {"kind", "cap", "scale", "knots"}
        if extra:
            raise ScenarioSpecError(f"unknown transform keys {sorted(extra)}")
        knots = raw.get("knots")
        if knots is not None:
            try:
                knots = tuple((float(x), float(y)) for x, y in knots)
            except (TypeError, ValueError):
                raise ScenarioSpecError(f"bad piecewise knots {knots!r}") from None
        return cls(kind=raw["kind"], cap=raw.get("cap"), scale=raw.get("scale"), knots=knots)


def default_transforms() -> Dict[str, TransformSpec]:
    return {
        "ROS": TransformSpec("linear_capped", cap=9.0),
        "FI": TransformSpec("linear_capped", cap=4.1),
        "POP": TransformSpec("log1p", cap={"percentile": 99}),
        "MHV": TransformSpec("linear_capped", cap={"percentile": 99}),
        "STTFS": TransformSpec("linear_capped", cap=1800.0),
    }


@dataclass(frozen=True)
class ScenarioSpec:
    """Transforms plus the weight vectors that assemble the risk index."""

    name: str = "RI"
    transforms: Dict[str, TransformSpec] = field(default_factory=default_transforms)
    feature_weights: Dict[str, float] = field(
        default_factory=lambda: {"ROS": 0.5, "FI": 0.5, "POP": 0.5, "MHV": 0.5}
    )
    outcome_weights: Dict[str, float] = field(
        default_factory=lambda: {"FB": 0.5, "SD": 0.5}
    )

    def __post_init__(self):
        unknown = set(self.transforms) - set(FEATURES) - {"STTFS"}
        if unknown:
            raise ScenarioSpecError(f"transforms for unknown features {sorted(unknown)}")
        merged = default_transforms()
        merged.update(self.transforms)
        object.__setattr__(self, "transforms", merged)

        fw = dict(self.feature_weights)
        extra = set(fw) - set(FEATURES)
        if extra:
            raise ScenarioSpecError(f"feature weights for unknown features {sorted(extra)}")
        for f in FEATURES:
            fw.setdefault(f, 0.5)
            if fw[f] < 0:
                raise ScenarioSpecError(f"feature weight {f} is negative")
        for group, members in GROUPS.items():
            total = sum(fw[m] for m in members)
            if abs(total - 1.0) > _WEIGHT_TOL:
                raise ScenarioSpecError(
                    f"{'+'.join(members)} weights must sum to 1, got {total!r}"
                )
        object.__setattr__(self, "feature_weights", fw)

        ow = dict(self.outcome_weights)
        extra = set(ow) - set(GROUPS)
        if extra:
            raise ScenarioSpecError(f"outcome weights for unknown groups {sorted(extra)}")
        for g in GROUPS:
            ow.setdefault(g, 0.5)
            if ow[g] < 0:
                raise ScenarioSpecError(f"outcome weight {g} is negative")
        if abs(sum(ow.values()) - 1.0) > _WEIGHT_TOL:
            raise ScenarioSpecError(
                f"FB+SD weights must sum to 1, got {sum(ow.values())!r}"
            )
        object.__setattr__(self, "outcome_weights", ow)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "transforms": {k: t.to_dict() for k, t in sorted(self.transforms.items())},
            "feature_weights": dict(sorted(self.feature_weights.items())),
            "outcome_weights": dict(sorted(self.outcome_weights.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioSpec":
        if not isinstance(raw, dict):
            raise ScenarioSpecError("scenario spec must be a JSON object")
        extra = set(raw) - {"name", "transforms", "feature_weights", "outcome_weights"}
        if extra:
            raise ScenarioSpecError(f"unknown scenario keys {sorted(extra)}")
        transforms = {
            k: TransformSpec.from_dict(v) for k, v in (raw.get("transforms") or {}).items()
        }
        return cls(
            name=str(raw.get("name", "RI")),
            transforms=transforms,
            feature_weights=dict(raw.get("feature_weights") or {}),
            outcome_weights=dict(raw.get("outcome_weights") or {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioSpecError(f"scenario is not valid JSON: {exc}") from None
        return cls.from_dict(raw)


PRESET_OUTCOME_WEIGHTS = {
    "RI": {"FB": 0.5, "SD": 0.5},
    "RIF": {"FB": 0.75, "SD": 0.25},
    "RIS": {"FB": 0.25, "SD": 0.75},
}


def preset_scenario(name: str) -> ScenarioSpec:
    if name not in PRESET_OUTCOME_WEIGHTS:
        raise ScenarioSpecError(
            f"unknown preset {name!r}; expected one of {sorted(PRESET_OUTCOME_WEIGHTS)}"
        )
    return ScenarioSpec(name=name, outcome_weights=dict(PRESET_OUTCOME_WEIGHTS[name]))


@dataclass
class RiskField:
    """Per-cell risk: static base, travel discount, and their product."""

    cell_order: List[CellId]
    base: np.ndarray        # w_fb*FB + w_sd*SD, in [0, 1]
    s: np.ndarray           # transform of travel seconds, in [0, 1]
    ri: np.ndarray          # base * s
    reachable: np.ndarray   # bool; False where no station reaches the cell
    scenario: ScenarioSpec
    components: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.cell_order)

    def summary(self) -> dict:
        reach = self.reachable
        ri = self.ri[reach]
        return {
            "cells": len(self.cell_order),
            "reachable_cells": int(reach.sum()),
            "total_ri": float(self.ri[reach].sum()) if reach.any() else 0.0,
            "mean_ri": float(ri.mean()) if ri.size else 0.0,
            "max_ri": float(ri.max()) if ri.size else 0.0,
            "mean_base": float(self.base.mean()) if len(self.base) else 0.0,
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "r", "base", "s", "ri", "reachable"])
            for i, cell in enumerate(self.cell_order):
                w.writerow([
                    cell.q, cell.r,
                    repr(float(self.base[i])), repr(float(self.s[i])),
                    repr(float(self.ri[i])), int(self.reachable[i]),
                ])


def compute_risk(layers: LayerGrid, scenario: ScenarioSpec,
                 travel_seconds: np.ndarray,
                 reachable: Optional[np.ndarray] = None) -> RiskField:
    """Assemble the per-cell risk field for a scenario.

    ``travel_seconds`` is aligned to ``layers.cell_order`` with +inf where
    no station reaches the cell. Unreachable cells keep their base score
    but get the capped (maximal) travel discount.
    """
    missing = [f for f in FEATURES if not layers.has_layer(f)]
    if missing:
        raise LayerError(f"risk model requires layers {missing}")
    travel_seconds = np.asarray(travel_seconds, dtype=np.float64)
    if travel_seconds.shape != (len(layers),):
        raise LayerError(
            f"travel field has {travel_seconds.size} values for {len(layers)} cells"
        )
    if reachable is None:
        reachable = np.isfinite(travel_seconds)
    reachable = np.asarray(reachable, dtype=bool)

    normalized = {}
    for feat in FEATURES:
        normalized[feat] = scenario.transforms[feat].apply(layers.layer(feat))

    fw = scenario.feature_weights
    fb = fw["ROS"] * normalized["ROS"] + fw["FI"] * normalized["FI"]
    sd = fw["POP"] * normalized["POP"] + fw["MHV"] * normalized["MHV"]
    ow = scenario.outcome_weights
    base = ow["FB"] * fb + ow["SD"] * sd

    # The cap makes s(inf) finite; unreachable cells take the max discount.
    s = scenario.transforms["STTFS"].apply(np.where(np.isfinite(travel_seconds),
                                                    travel_seconds, np.inf))
    ri = base * s
    return RiskField(
        cell_order=list(layers.cell_order),
        base=base,
        s=s,
        ri=ri,
        reachable=reachable,
        scenario=scenario,
        components={"FB": fb, "SD": sd, **{f"n_{k}": v for k, v in normalized.items()}},
    )


BRACKET_LABELS = tuple(f"{10 * k}-{10 * (k + 1)}" for k in range(10))


def compare_fields(current: RiskField, optimized: RiskField) -> dict:
    """Per-cell delta report between two risk fields on one cell set.

    Cells unreachable in either field are excluded from the comparison and
    counted separately. Improved cells fall into ten 10-percent brackets
    of relative risk reduction; unchanged cells sit in the 0-10 bracket,
    degraded cells only in the counts.
    """
    if list(current.cell_order) != list(optimized.cell_order):
        raise AlignmentError("risk fields cover different cell sets")
    both = np.asarray(current.reachable, dtype=bool) & np.asarray(optimized.reachable,
                                                                  dtype=bool)
    cur = current.ri[both]
    opt = optimized.ri[both]
    improved = int(np.sum(opt < cur))
    degraded = int(np.sum(opt > cur))
    unchanged = int(np.sum(opt == cur))
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(cur > 0, 100.0 * (opt - cur) / cur,
                       np.where(opt > 0, np.inf, 0.0))
    gain = np.clip(-pct[opt <= cur], 0.0, 100.0)
    which = np.minimum(np.floor(gain / 10.0).astype(int), 9)
    brackets = {label: 0 for label in BRACKET_LABELS}
    for b in which:
        brackets[BRACKET_LABELS[int(b)]] += 1
    cells = [c for c, keep in zip(current.cell_order, both) if keep]
    return {
        "cells": int(both.sum()),
        "excluded_unreachable": int(len(current.cell_order) - int(both.sum())),
        "improved": improved,
        "degraded": degraded,
        "unchanged": unchanged,
        "brackets": brackets,
        "percent_change": {f"{c.q},{c.r}": repr(float(v))
                           for c, v in zip(cells, pct)},
        "current": current.summary(),
        "optimized": optimized.summary(),
    }


def read_risk_csv(path) -> Dict[CellId, dict]:
    """Read a risk CSV back to {cell: {base, s, ri, reachable}}."""
    out: Dict[CellId, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cell = CellId(int(row["q"]), int(row["r"]))
            out[cell] = {
                "base": float(row["base"]),
                "s": float(row["s"]),
                "ri": float(row["ri"]),
                "reachable": bool(int(row["reachable"])),
            }
    return out
