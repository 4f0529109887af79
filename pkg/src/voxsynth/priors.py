"""Physics-based prior simulation: tissue lookup tables and sequence signal models.

Converts fused label volumes into modality-specific prior volumes. CT priors
assign a representative Hounsfield value per tissue class; MR priors evaluate
closed-form steady-state signal models per class and rescale the result to a
[0, 255] display range using the table-wide maximum achievable signal.

Signal models (times in ms, angles in degrees):

    spoiled gradient echo      S = rho * sin(a) * (1 - E1) / (1 - cos(a) * E1),
                               E1 = exp(-TR/T1)
    turbo spin echo (T2w)      S = rho * exp(-TE/T2)
    interpolated breath-hold   in-phase: same as gradient echo;
                               opposed-phase: scaled by |1 - 2*fat_fraction|
                               (two-compartment water/fat cancellation)

The opposed-phase factor models the magnitude of W - F with W + F = rho at
fat fraction F/rho; it is a documented modeling choice, overridable per table.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import numpy as np

from .errors import DomainError, ValidationError
from .volumes import LabelVolume, Modality, ScalarVolume

HU_AIR = -1000.0
HU_MIN, HU_MAX = -1024.0, 3000.0
MR_DISPLAY_MAX = 255.0

TISSUE_TABLE_VERSION = "v1"
SEQUENCE_PRESET_VERSION = "v1"


class SequenceKind(Enum):
    CT = "CT"
    GRE_T1 = "GRE_T1"
    SPACE_T2 = "SPACE_T2"
    VIBE_IN = "VIBE_IN"
    VIBE_OPP = "VIBE_OPP"
    DIXON_VIBE_IN = "DIXON_VIBE_IN"
    DIXON_VIBE_OPP = "DIXON_VIBE_OPP"


_MR_KINDS = frozenset(k for k in SequenceKind if k != SequenceKind.CT)
_VIBE_KINDS = frozenset(
    {
        SequenceKind.VIBE_IN,
        SequenceKind.VIBE_OPP,
        SequenceKind.DIXON_VIBE_IN,
        SequenceKind.DIXON_VIBE_OPP,
    }
)
_OPPOSED_KINDS = frozenset({SequenceKind.VIBE_OPP, SequenceKind.DIXON_VIBE_OPP})


@dataclass(frozen=True)
class TissueRow:
    class_id: int
    name: str
    hu: float
    t1_ms: float
    t2_ms: float
    rho: float
    fat_fraction: float

    def validate(self):
        if self.t1_ms <= 0 or self.t2_ms <= 0:
            raise ValidationError(f"{self.name}: relaxation times must be positive")
        if self.t1_ms < self.t2_ms:
            raise ValidationError(f"{self.name}: t1_ms must be >= t2_ms")
        if not (HU_MIN <= self.hu <= HU_MAX):
            raise ValidationError(f"{self.name}: hu {self.hu} outside [{HU_MIN}, {HU_MAX}]")
        if not (0.0 <= self.rho <= 1.2):
            raise ValidationError(f"{self.name}: rho {self.rho} outside [0, 1.2]")
        if not (0.0 <= self.fat_fraction <= 1.0):
            raise ValidationError(f"{self.name}: fat_fraction {self.fat_fraction} outside [0, 1]")


class TissueParameterTable:
    """Per-class physical parameters keyed by class id."""

    def __init__(self, rows: list[TissueRow], version: str = TISSUE_TABLE_VERSION):
        self.version = version
        self.rows = {r.class_id: r for r in rows}
        if len(self.rows) != len(rows):
            raise ValidationError("duplicate class_id in tissue table")
        for r in rows:
            r.validate()
        air = self.rows.get(0)
        if air is None or air.rho != 0.0 or air.hu != HU_AIR:
            raise ValidationError("table must contain class 0 (air) with rho=0, hu=-1000")

    def __contains__(self, class_id: int) -> bool:
        return class_id in self.rows

    def __getitem__(self, class_id: int) -> TissueRow:
        return self.rows[class_id]

    def class_ids(self) -> list[int]:
        return sorted(self.rows)

    def name_to_id(self) -> dict[str, int]:
        return {r.name: cid for cid, r in self.rows.items()}


_CSV_FIELDS = ["class_id", "name", "hu", "t1_ms", "t2_ms", "rho", "fat_fraction"]


def load_tissue_table(path) -> TissueParameterTable:
    """Parse a tissue table CSV; errors carry the 1-based line number."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError("line 1: empty tissue table") from None
        if [h.strip() for h in header] != _CSV_FIELDS:
            raise ValidationError(
                f"line 1: header must be {','.join(_CSV_FIELDS)}, got {','.join(header)}"
            )
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(_CSV_FIELDS):
                raise ValidationError(f"line {lineno}: expected {len(_CSV_FIELDS)} fields")
            try:
                row = TissueRow(
                    class_id=int(rec[0]),
                    name=rec[1].strip(),
                    hu=float(rec[2]),
                    t1_ms=float(rec[3]),
                    t2_ms=float(rec[4]),
                    rho=float(rec[5]),
                    fat_fraction=float(rec[6]),
                )
                row.validate()
            except (ValueError, ValidationError) as e:
                raise ValidationError(f"line {lineno}: {e}") from None
            rows.append(row)
    return TissueParameterTable(rows)


def default_tissue_table() -> TissueParameterTable:
    ref = resources.files("voxsynth.data") / f"tissue_table_{TISSUE_TABLE_VERSION}.csv"
    with resources.as_file(ref) as p:
        return load_tissue_table(p)


@dataclass(frozen=True)
class SequenceParams:
    kind: SequenceKind
    tr_ms: float = 0.0
    te_ms: float = 0.0
    flip_deg: float = 0.0

    def __post_init__(self):
        if self.kind == SequenceKind.CT:
            return  # timing parameters ignored for CT
        if self.tr_ms <= 0:
            raise ValidationError(f"{self.kind.value}: tr_ms must be > 0")
        if self.te_ms < 0:
            raise ValidationError(f"{self.kind.value}: te_ms must be >= 0")
        if not (0.0 < self.flip_deg < 180.0):
            raise ValidationError(f"{self.kind.value}: flip_deg must be in (0, 180)")


def load_sequence_presets(path=None) -> dict[str, SequenceParams]:
    """Load named sequence presets from JSON (packaged defaults if no path)."""
    if path is None:
        ref = resources.files("voxsynth.data") / f"sequence_presets_{SEQUENCE_PRESET_VERSION}.json"
        raw = json.loads(ref.read_text())
    else:
        with open(path) as f:
            raw = json.load(f)
    presets = {}
    for name, p in raw["presets"].items():
        try:
            presets[name] = SequenceParams(
                kind=SequenceKind(p["kind"]),
                tr_ms=float(p.get("tr_ms", 0.0)),
                te_ms=float(p.get("te_ms", 0.0)),
                flip_deg=float(p.get("flip_deg", 0.0)),
            )
        except (KeyError, ValueError, ValidationError) as e:
            raise ValidationError(f"preset {name!r}: {e}") from None
    return presets


# --------------------------------------------------------------------------
# signal models


def gre_signal(t1_ms: float, rho: float, tr_ms: float, flip_deg: float) -> float:
    """Spoiled gradient-echo steady-state signal. Bounded by [0, rho]."""
    a = math.radians(flip_deg)
    e1 = math.exp(-tr_ms / t1_ms)
    denom = 1.0 - math.cos(a) * e1
    assert denom > 0.0, "cos(a)*exp(-TR/T1) < 1 under the parameter preconditions"
    return rho * math.sin(a) * (1.0 - e1) / denom


def space_signal(t2_ms: float, rho: float, te_ms: float) -> float:
    """T2-weighted turbo-spin-echo signal: pure exponential echo decay."""
    return rho * math.exp(-te_ms / t2_ms)


def vibe_signal(t1_ms: float, rho: float, fat_fraction: float, params: SequenceParams) -> float:
    """Breath-hold T1w gradient-echo signal, with opposed-phase fat cancellation."""
    if params.kind not in _VIBE_KINDS:
        raise DomainError(f"vibe_signal got non-VIBE kind {params.kind.value}")
    base = gre_signal(t1_ms, rho, params.tr_ms, params.flip_deg)
    if params.kind in _OPPOSED_KINDS:
        return base * abs(1.0 - 2.0 * fat_fraction)
    return base


def signal_for_class(row: TissueRow, params: SequenceParams) -> float:
    """Raw (pre-display-scaling) signal for one tissue class."""
    if params.kind == SequenceKind.CT:
        return row.hu
    if params.kind == SequenceKind.GRE_T1:
        return gre_signal(row.t1_ms, row.rho, params.tr_ms, params.flip_deg)
    if params.kind == SequenceKind.SPACE_T2:
        return space_signal(row.t2_ms, row.rho, params.te_ms)
    return vibe_signal(row.t1_ms, row.rho, row.fat_fraction, params)


# --------------------------------------------------------------------------
# volume simulation


def _check_classes(labels: LabelVolume, table: TissueParameterTable) -> np.ndarray:
    present = np.unique(labels.data)
    for cid in present:
        if int(cid) not in table:
            raise LookupError(f"class {int(cid)} not present in tissue table")
    return present


def simulate_ct(labels: LabelVolume, table: TissueParameterTable) -> ScalarVolume:
    """Assign each class its representative Hounsfield value (air = -1000)."""
    present = _check_classes(labels, table)
    lut = np.zeros(int(present.max()) + 1, dtype=np.float64)
    for cid in present:
        lut[cid] = table[int(cid)].hu
    out = lut[labels.data].astype(np.float32)
    return ScalarVolume(labels.dims, labels.spacing, out, Modality.CT_HU, (HU_MIN, HU_MAX))


def max_achievable_signal(table: TissueParameterTable, params: SequenceParams) -> float:
    """Table-wide maximum raw signal; the MR display-scaling denominator."""
    return max(signal_for_class(row, params) for row in table.rows.values())


def simulate_prior(
    labels: LabelVolume, table: TissueParameterTable, params: SequenceParams
) -> ScalarVolume:
    """Dispatch on sequence kind; MR output is display-scaled to [0, 255]."""
    if params.kind == SequenceKind.CT:
        return simulate_ct(labels, table)
    present = _check_classes(labels, table)
    peak = max_achievable_signal(table, params)
    if peak <= 0:
        raise DomainError("tissue table yields no positive signal for this sequence")
    lut = np.zeros(int(present.max()) + 1, dtype=np.float64)
    for cid in present:
        lut[cid] = signal_for_class(table[int(cid)], params) / peak * MR_DISPLAY_MAX
    out = lut[labels.data].astype(np.float32)
    return ScalarVolume(
        labels.dims, labels.spacing, out, Modality.MR_SIGNAL, (0.0, MR_DISPLAY_MAX)
    )
