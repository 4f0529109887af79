"""Body contours, organ-mask fusion, multi-subject composition, procedural phantoms.

All operations are slice-wise and pure. The body contour of a slice is the
largest 8-connected supra-threshold component with every interior hole filled;
fusion restricts organ labels to that contour and fills unlabeled interior
voxels with the reserved SOFT_TISSUE class. Composition copies organ classes
from several aligned subjects into one volume and reports per-voxel provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .errors import (
    DomainError,
    EmptyContourError,
    PlacementError,
    ShapeError,
    ValidationError,
)
from .volumes import LabelVolume, ScalarVolume, label_volume

AIR = 0
SOFT_TISSUE = 1
FAT = 2
BONE = 3
LIVER = 4
KIDNEY = 5
SPLEEN = 6

DEFAULT_CT_CONTOUR_THRESHOLD = -500.0  # HU midway between air and soft tissue

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class BodyContourMask:
    """Binary solid body mask; per slice a single filled component (or empty)."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray  # (nz, ny, nx) bool

    def __post_init__(self):
        nx, ny, nz = self.dims
        if self.data.shape != (nz, ny, nx) or self.data.dtype != bool:
            raise ValidationError("contour mask must be bool with shape (nz, ny, nx)")
        self.data.setflags(write=False)


def _solid_slice_mask(fg: np.ndarray) -> np.ndarray:
    """Largest 8-connected component of ``fg``, interior holes filled."""
    if not fg.any():
        return np.zeros_like(fg)
    labeled, n = ndimage.label(fg, structure=_EIGHT_CONNECTED)
    counts = np.bincount(labeled.ravel())
    counts[0] = 0
    keep = labeled == counts.argmax()
    return ndimage.binary_fill_holes(keep)


def extract_body_contour(img: ScalarVolume, threshold: float) -> BodyContourMask:
    """Threshold, keep the largest in-plane component, fill holes, per slice."""
    out = np.zeros(img.data.shape, dtype=bool)
    any_fg = False
    for z in range(img.data.shape[0]):
        mask = _solid_slice_mask(img.data[z] > threshold)
        any_fg = any_fg or bool(mask.any())
        out[z] = mask
    if not any_fg:
        raise EmptyContourError(f"no voxel above threshold {threshold} on any slice")
    return BodyContourMask(img.dims, img.spacing, out)


def body_mask_from_labels(labels: LabelVolume) -> BodyContourMask:
    """Solid body mask of a label volume (foreground = any non-zero class)."""
    out = np.zeros(labels.data.shape, dtype=bool)
    for z in range(labels.data.shape[0]):
        out[z] = _solid_slice_mask(labels.data[z] != 0)
    return BodyContourMask(labels.dims, labels.spacing, out)


def fuse_masks(organs: LabelVolume, contour: BodyContourMask) -> LabelVolume:
    """Restrict organ labels to the body; fill unlabeled interior with SOFT_TISSUE."""
    if organs.dims != contour.dims or organs.spacing != contour.spacing:
        raise ShapeError(
            f"organs {organs.dims}/{organs.spacing} vs contour {contour.dims}/{contour.spacing}"
        )
    out = np.where(contour.data, np.where(organs.data != 0, organs.data, SOFT_TISSUE), 0)
    return LabelVolume(
        organs.dims,
        organs.spacing,
        np.ascontiguousarray(out.astype(organs.data.dtype)),
        organs.subject_id,
    )


# --------------------------------------------------------------------------
# cross-subject composition


class ConflictPolicy(Enum):
    PRIORITY_ORDER = "priority_order"
    FIRST_WINS = "first_wins"


@dataclass(frozen=True)
class CompositionRecipe:
    """Which subject supplies each organ class, plus the body outline donor.

    Both conflict policies resolve contested voxels deterministically in
    recipe order (earlier entry wins); they are kept distinct in the schema.
    """

    entries: tuple[tuple[int, str], ...]  # (organ_class_id, source_subject_id)
    contour_source: str
    conflict_policy: ConflictPolicy = ConflictPolicy.PRIORITY_ORDER

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((int(c), str(s)) for c, s in self.entries)
        )
        classes = [c for c, _ in self.entries]
        if len(set(classes)) != len(classes):
            raise ValidationError("each organ_class_id may appear at most once")

    def to_json_dict(self) -> dict:
        return {
            "entries": [
                {"organ_class_id": c, "source_subject_id": s} for c, s in self.entries
            ],
            "contour_source": self.contour_source,
            "conflict_policy": self.conflict_policy.value,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CompositionRecipe":
        try:
            entries = tuple(
                (int(e["organ_class_id"]), str(e["source_subject_id"]))
                for e in d["entries"]
            )
            return cls(
                entries=entries,
                contour_source=str(d["contour_source"]),
                conflict_policy=ConflictPolicy(d.get("conflict_policy", "priority_order")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad composition recipe: {e}") from None


@dataclass(frozen=True)
class CompositionResult:
    volume: LabelVolume
    provenance: np.ndarray  # (nz, ny, nx) int16; 0 = none, k = sources[k-1]
    sources: tuple[str, ...]

    def provenance_index(self, subject_id: str) -> int:
        return self.sources.index(subject_id) + 1


def compose_anatomy(
    subjects: dict[str, LabelVolume], recipe: CompositionRecipe
) -> CompositionResult:
    """Assemble a new anatomy by copying organ classes from several subjects.

    All referenced subjects must already live on one grid. Exterior comes from
    the contour donor's body outline; interior voxels no entry claims are
    filled with SOFT_TISSUE attributed to the contour donor.
    """
    referenced = [recipe.contour_source] + [s for _, s in recipe.entries]
    for sid in referenced:
        if sid not in subjects:
            raise LookupError(f"unknown subject {sid!r}")
    ref = subjects[recipe.contour_source]
    for sid in referenced:
        v = subjects[sid]
        if v.dims != ref.dims or v.spacing != ref.spacing:
            raise ShapeError(
                f"subject {sid!r} grid {v.dims}/{v.spacing} differs from "
                f"{recipe.contour_source!r} {ref.dims}/{ref.spacing}"
            )

    sources = tuple(dict.fromkeys(referenced))  # stable unique order
    src_index = {sid: i + 1 for i, sid in enumerate(sources)}

    contour = body_mask_from_labels(ref).data
    out = np.zeros(ref.data.shape, dtype=np.uint16)
    prov = np.zeros(ref.data.shape, dtype=np.int16)
    claimed = np.zeros(ref.data.shape, dtype=bool)

    for class_id, sid in recipe.entries:
        m = (subjects[sid].data == class_id) & contour & ~claimed
        out[m] = class_id
        prov[m] = src_index[sid]
        claimed |= m

    fill = contour & ~claimed
    out[fill] = SOFT_TISSUE
    prov[fill] = src_index[recipe.contour_source]

    digest = hashlib.sha256(
        json.dumps(recipe.to_json_dict(), sort_keys=True).encode()
    ).hexdigest()[:8]
    dtype = np.uint8 if out.max() <= 255 else np.uint16
    vol = LabelVolume(
        ref.dims,
        ref.spacing,
        np.ascontiguousarray(out.astype(dtype)),
        subject_id=f"composite-{digest}",
    )
    return CompositionResult(vol, prov, sources)


# --------------------------------------------------------------------------
# procedural phantoms


@dataclass(frozen=True)
class OrganSpec:
    class_id: int
    rx_frac: tuple[float, float]  # semi-axis range, fraction of body semi-axis x
    ry_frac: tuple[float, float]
    count: int = 1


@dataclass(frozen=True)
class PhantomSpec:
    """Desk-scale stand-in for a library of segmented anatomies."""

    dims: tuple[int, int, int] = (64, 64, 4)
    spacing: tuple[float, float, float] = (1.0, 1.0, 5.0)
    body_class: int = SOFT_TISSUE
    body_frac: tuple[float, float] = (0.78, 0.88)  # body semi-axes / half-extent
    organs: tuple[OrganSpec, ...] = (
        OrganSpec(FAT, (0.28, 0.38), (0.22, 0.32)),
        OrganSpec(BONE, (0.10, 0.16), (0.10, 0.16)),
        OrganSpec(LIVER, (0.26, 0.36), (0.20, 0.30)),
        OrganSpec(KIDNEY, (0.10, 0.16), (0.08, 0.14), count=2),
        OrganSpec(SPLEEN, (0.12, 0.18), (0.10, 0.16)),
    )
    max_retries: int = 200

    def to_json_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "body_class": self.body_class,
            "body_frac": list(self.body_frac),
            "organs": [
                {
                    "class_id": o.class_id,
                    "rx_frac": list(o.rx_frac),
                    "ry_frac": list(o.ry_frac),
                    "count": o.count,
                }
                for o in self.organs
            ],
            "max_retries": self.max_retries,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PhantomSpec":
        try:
            kwargs = {}
            if "dims" in d:
                kwargs["dims"] = tuple(int(x) for x in d["dims"])
            if "spacing" in d:
                kwargs["spacing"] = tuple(float(x) for x in d["spacing"])
            if "body_class" in d:
                kwargs["body_class"] = int(d["body_class"])
            if "body_frac" in d:
                kwargs["body_frac"] = tuple(float(x) for x in d["body_frac"])
            if "organs" in d:
                kwargs["organs"] = tuple(
                    OrganSpec(
                        class_id=int(o["class_id"]),
                        rx_frac=tuple(float(x) for x in o["rx_frac"]),
                        ry_frac=tuple(float(x) for x in o["ry_frac"]),
                        count=int(o.get("count", 1)),
                    )
                    for o in d["organs"]
                )
            if "max_retries" in d:
                kwargs["max_retries"] = int(d["max_retries"])
            return cls(**kwargs)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"bad phantom spec: {e}") from None


def _ellipsoid_mask(shape, center, radii) -> np.ndarray:
    nz, ny, nx = shape
    zz = (np.arange(nz)[:, None, None] - center[0]) / radii[0]
    yy = (np.arange(ny)[None, :, None] - center[1]) / radii[1]
    xx = (np.arange(nx)[None, None, :] - center[2]) / radii[2]
    return zz**2 + yy**2 + xx**2 <= 1.0


def generate_phantom(seed: int, spec: PhantomSpec | None = None) -> tuple[LabelVolume, str]:
    """Deterministic random phantom: elliptical body, non-overlapping organ blobs.

    The PRNG is numpy's PCG64 seeded with ``seed``; identical (seed, spec)
    always produce byte-identical volumes.
    """
    spec = spec or PhantomSpec()
    nx, ny, nz = spec.dims
    rng = np.random.Generator(np.random.PCG64(seed))

    bx = rng.uniform(*spec.body_frac) * (nx / 2 - 1)
    by = rng.uniform(*spec.body_frac) * (ny / 2 - 1)
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0
    yy = (np.arange(ny)[:, None] - cy) / by
    xx = (np.arange(nx)[None, :] - cx) / bx
    body2d = yy**2 + xx**2 <= 1.0

    data = np.zeros((nz, ny, nx), dtype=np.uint8)
    data[:, body2d] = spec.body_class
    body3d = np.broadcast_to(body2d, (nz, ny, nx))
    occupied = np.zeros((nz, ny, nx), dtype=bool)

    for organ in spec.organs:
        for _ in range(organ.count):
            placed = False
            for _attempt in range(spec.max_retries):
                rx = rng.uniform(*organ.rx_frac) * bx
                ry = rng.uniform(*organ.ry_frac) * by
                if nz > 1:
                    rz = rng.uniform(0.6, max(0.61, nz / 2.0))
                    cz = rng.uniform(rz, nz - 1 - rz) if nz - 1 - rz > rz else (nz - 1) / 2.0
                else:
                    rz, cz = 0.6, 0.0
                # conservative center proposal, then exact voxel containment check
                ax, ay = bx - rx - 1.0, by - ry - 1.0
                if ax <= 0 or ay <= 0:
                    continue
                theta = rng.uniform(0.0, 2.0 * np.pi)
                r = np.sqrt(rng.uniform(0.0, 1.0))
                ox = cx + r * np.cos(theta) * ax
                oy = cy + r * np.sin(theta) * ay
                mask = _ellipsoid_mask((nz, ny, nx), (cz, oy, ox), (rz, ry, rx))
                if not mask.any() or (mask & occupied).any() or (mask & ~body3d).any():
                    continue
                data[mask] = organ.class_id
                occupied |= mask
                placed = True
                break
            if not placed:
                raise PlacementError(
                    f"could not place class {organ.class_id} after {spec.max_retries} retries"
                )

    subject_id = f"phantom-{seed:04d}"
    vol = label_volume(data, spec.spacing, subject_id=subject_id)
    return vol, subject_id
