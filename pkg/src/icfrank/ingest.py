"""Reading RR-interval records and cohort manifests."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from ._util import atomic_write_text, fmt
from .errors import MalformedInputError, ValidationError

LABELS = {"healthy": 0, "chf": 1}
LABEL_NAMES = {v: k for k, v in LABELS.items()}

MAX_DROP_FRACTION = 0.10


@dataclass
class TimeSeries:
    """One subject's RR intervals in seconds.

    ``label`` is 0 for healthy, 1 for CHF and None when unknown.
    ``dropped`` counts lines rejected by :func:`read_rr`.
    """

    id: str
    values: np.ndarray
    label: Optional[int] = None
    dropped: int = 0
    source: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValidationError(f"series {self.id!r} must be one-dimensional")
        if np.any(~(self.values > 0)):
            raise ValidationError(f"series {self.id!r} has non-positive RR intervals")
        if self.label not in (None, 0, 1):
            raise ValidationError(f"series {self.id!r} has invalid label {self.label!r}")

    def __len__(self):
        return len(self.values)


@dataclass
class Cohort:
    subjects: List[TimeSeries]
    provenance: Optional[str] = None

    def __post_init__(self):
        seen = set()
        for s in self.subjects:
            if s.id in seen:
                raise ValidationError(f"duplicate subject id {s.id!r}")
            seen.add(s.id)

    def __len__(self):
        return len(self.subjects)

    def __iter__(self):
        return iter(self.subjects)

    @property
    def ids(self):
        return [s.id for s in self.subjects]

    @property
    def labels(self):
        return [s.label for s in self.subjects]

    def require_labels(self):
        """Labels as an int array; both classes must be present."""
        labels = self.labels
        if any(lab is None for lab in labels):
            raise ValidationError("cohort has unlabeled subjects")
        labels = np.asarray(labels, dtype=int)
        if labels.min() == labels.max():
            raise ValidationError("cohort must contain both healthy and chf subjects")
        return labels


def parse_rr(text, max_drop_fraction=MAX_DROP_FRACTION):
    """Parse RR file contents; returns (values, dropped).

    Non-positive values are sensor artifacts and are dropped quietly.
    Non-numeric lines point at a wrong file format instead; more than
    ``max_drop_fraction`` of them raises :class:`MalformedInputError`.
    """
    values = []
    dropped = 0
    garbage = 0
    total = 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        total += 1
        try:
            v = float(line)
        except ValueError:
            garbage += 1
            continue
        if not np.isfinite(v) or v <= 0:
            dropped += 1
            continue
        values.append(v)
    if total and garbage > max_drop_fraction * total:
        raise MalformedInputError(
            f"{garbage} of {total} lines are not numbers; wrong file format?"
        )
    return np.array(values, dtype=float), dropped + garbage


def read_rr(path, id=None, label=None, max_drop_fraction=MAX_DROP_FRACTION):
    """Read one RR file: one interval in seconds per line.

    Non-numeric and non-positive lines are dropped and counted; see
    :func:`parse_rr` for when dropping turns into an error.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        values, dropped = parse_rr(text, max_drop_fraction)
    except MalformedInputError as exc:
        raise MalformedInputError(f"{path}: {exc}") from None
    return TimeSeries(
        id=id if id is not None else path.stem,
        values=values,
        label=label,
        dropped=dropped,
        source=str(path),
    )


def read_manifest(path, max_drop_fraction=MAX_DROP_FRACTION):
    """Load a cohort from a CSV manifest with header ``id,path,label``.

    Paths are resolved relative to the manifest's directory.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["id", "path", "label"]:
        raise ValidationError(f"{path}: manifest header must be exactly id,path,label")

    subjects = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        sid, rel, lab = (c.strip() for c in row)
        if sid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {sid!r}")
        seen.add(sid)
        if lab == "":
            label = None
        elif lab.lower() in LABELS:
            label = LABELS[lab.lower()]
        else:
            raise ValidationError(f"{path}:{lineno}: label must be healthy, chf or empty")
        rr_path = Path(rel)
        if not rr_path.is_absolute():
            rr_path = path.parent / rr_path
        try:
            subjects.append(read_rr(rr_path, id=sid, label=label,
                                    max_drop_fraction=max_drop_fraction))
        except FileNotFoundError:
            raise FileNotFoundError(f"{path}:{lineno}: RR file not found for {sid!r}: {rr_path}") from None
    return Cohort(subjects=subjects, provenance=str(path))


def format_rr(series):
    return "".join(fmt(v) + "\n" for v in np.asarray(series.values if isinstance(series, TimeSeries) else series))


def write_rr(path, series):
    atomic_write_text(path, format_rr(series))


def write_manifest(path, rows, header_lines=()):
    """Write a manifest; ``rows`` are (id, relative path, label or None)."""
    lines = list(header_lines) + ["id,path,label"]
    for sid, rel, label in rows:
        lines.append(f"{sid},{rel},{'' if label is None else LABEL_NAMES[label]}")
    atomic_write_text(path, "\n".join(lines) + "\n")
