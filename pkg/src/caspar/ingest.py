"""Aligned protein sequences + phenotypes -> indicator-mutation design matrix.

Each sequence position with M > 1 observed residues contributes M - 1 binary
columns (the most frequent residue is the reference and gets no column).
Columns carry their 1-based sequence position, so mutations at the same
position sit at distance zero in the positional structure.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    AllPositionsConstant,
    DuplicateId,
    EmptyPanel,
    LengthMismatch,
    ParseError,
)
from .linalg import Dataset
from .structure import PredictorStructure

log = logging.getLogger(__name__)

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
# Ambiguous residue or alignment gap: contributes 0 to every indicator.
MISSING_SYMBOLS = "X-"
_ALPHABET = set(AMINO_ACIDS) | set(MISSING_SYMBOLS)

_MISSING_VALUES = {"", "na", "nan"}


@dataclass(frozen=True)
class SequencePanel:
    """Equal-length aligned sequences keyed by unique ids."""

    ids: tuple[str, ...]
    sequences: tuple[str, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.sequences):
            raise LengthMismatch(
                f"{len(self.ids)} ids but {len(self.sequences)} sequences"
            )
        if not self.ids:
            raise EmptyPanel("panel has no rows")
        if len(set(self.ids)) != len(self.ids):
            seen = set()
            for sid in self.ids:
                if sid in seen:
                    raise DuplicateId(f"sequence id {sid!r} appears more than once")
                seen.add(sid)
        sequences = tuple(s.upper() for s in self.sequences)
        length = len(sequences[0])
        for sid, seq in zip(self.ids, sequences):
            if len(seq) != length:
                raise LengthMismatch(
                    f"sequence {sid!r} has length {len(seq)}, expected {length}"
                )
            bad = set(seq) - _ALPHABET
            if bad:
                raise ValueError(
                    f"sequence {sid!r} contains invalid symbols {sorted(bad)}"
                )
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "sequences", sequences)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def length(self) -> int:
        return len(self.sequences[0])


@dataclass(frozen=True)
class MutationColumn:
    """One indicator predictor: a residue at a 1-based sequence position."""

    position: int
    residue: str
    index: int


def encode_panel(
    panel: SequencePanel,
    phenotype,
    transform: str = "log10",
) -> tuple[Dataset, list[MutationColumn], PredictorStructure]:
    """Build the indicator design, column metadata, and positional structure.

    Positions with a single observed residue are dropped. At a position with
    M > 1 observed residues the most frequent one (ties to the alphabetically
    first) is the reference; each other residue becomes a 0/1 column.
    Missing symbols contribute 0 everywhere and never create columns.

    ``transform`` is applied to the phenotype: ``"log10"`` (default, for
    fold-resistance style responses) or ``"none"``.
    """
    values = np.asarray(phenotype, dtype=float)
    if values.ndim != 1 or values.shape[0] != panel.n:
        raise LengthMismatch(
            f"phenotype has shape {values.shape}, panel has {panel.n} rows"
        )
    if transform == "log10":
        if np.any(values <= 0):
            raise ValueError("log10 transform requires strictly positive phenotype values")
        y = np.log10(values)
    elif transform == "none":
        y = values
    else:
        raise ValueError(f"unknown transform {transform!r}; use 'log10' or 'none'")

    columns: list[MutationColumn] = []
    indicator_cols: list[np.ndarray] = []
    residues_at = [np.array([seq[pos] for seq in panel.sequences]) for pos in range(panel.length)]
    for pos in range(panel.length):
        observed = residues_at[pos]
        counts = Counter(r for r in observed if r not in MISSING_SYMBOLS)
        if len(counts) <= 1:
            continue
        reference = min(counts, key=lambda r: (-counts[r], r))
        for residue in sorted(r for r in counts if r != reference):
            columns.append(MutationColumn(position=pos + 1, residue=residue, index=len(columns)))
            indicator_cols.append((observed == residue).astype(float))
    if not columns:
        raise AllPositionsConstant("no sequence position shows residue variation")

    X = np.column_stack(indicator_cols)
    structure = PredictorStructure.from_positions([c.position for c in columns])
    return Dataset(X, y), columns, structure


def _read_rows(path, n_fields: int):
    text = Path(path).read_text()
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != n_fields:
            raise ParseError(path, line_number, f"expected {n_fields} comma-separated fields, got {len(parts)}")
        yield line_number, parts


def load_panel(sequence_path, phenotype_path, drug: str | None = None):
    """Join a sequence file with a phenotype file on id.

    The sequence file has ``id,sequence`` rows; the phenotype file has
    ``id,drug,value`` rows. Rows whose phenotype is missing (empty or NA) and
    sequences without a phenotype for the chosen drug are dropped; the drop
    count is logged. With ``drug=None`` the file must mention a single drug.

    Returns ``(SequencePanel, phenotype values)`` aligned row for row.
    """
    ids: list[str] = []
    sequences: list[str] = []
    for line_number, (sid, seq) in _read_rows(sequence_path, 2):
        if sid in ids:
            raise DuplicateId(f"{sequence_path}:{line_number}: duplicate sequence id {sid!r}")
        ids.append(sid)
        sequences.append(seq)

    phenotype_rows = list(_read_rows(phenotype_path, 3))
    drugs_seen = {row_drug for _, (_, row_drug, _) in phenotype_rows}
    if drug is None:
        if len(drugs_seen) > 1:
            raise ValueError(
                f"phenotype file mentions several drugs {sorted(drugs_seen)}; pass one explicitly"
            )
        drug = next(iter(drugs_seen), None)

    values: dict[str, float] = {}
    n_missing = 0
    for line_number, (sid, row_drug, raw_value) in phenotype_rows:
        if row_drug != drug:
            continue
        if raw_value.lower() in _MISSING_VALUES:
            n_missing += 1
            continue
        try:
            value = float(raw_value)
        except ValueError as exc:
            raise ParseError(phenotype_path, line_number, f"bad phenotype value {raw_value!r}") from exc
        if sid in values:
            raise DuplicateId(
                f"{phenotype_path}:{line_number}: duplicate phenotype for id {sid!r}"
            )
        values[sid] = value

    kept = [(sid, seq) for sid, seq in zip(ids, sequences) if sid in values]
    n_dropped = len(ids) - len(kept)
    if n_missing or n_dropped:
        log.info(
            "dropped %d sequence rows without a usable phenotype (%d missing values)",
            n_dropped,
            n_missing,
        )
    if not kept:
        raise EmptyPanel("no sequence has a phenotype for the requested drug")
    panel = SequencePanel(
        ids=tuple(sid for sid, _ in kept),
        sequences=tuple(seq for _, seq in kept),
    )
    return panel, np.array([values[sid] for sid in panel.ids])


def write_design(path, dataset: Dataset, column_names=None) -> None:
    """Write a design matrix as CSV: a ``y`` column followed by predictors."""
    names = column_names if column_names is not None else [f"x{j}" for j in range(dataset.p)]
    if len(names) != dataset.p:
        raise LengthMismatch(f"{len(names)} column names for {dataset.p} columns")
    with open(path, "w") as handle:
        handle.write(",".join(["y", *names]) + "\n")
        for i in range(dataset.n):
            cells = [repr(float(dataset.y[i]))]
            cells.extend(repr(float(v)) for v in dataset.X[i])
            handle.write(",".join(cells) + "\n")


def read_design(path) -> tuple[Dataset, list[str]]:
    """Read a design CSV written by :func:`write_design`."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ParseError(path, 1, "empty design file")
    header = [h.strip() for h in lines[0].split(",")]
    if not header or header[0] != "y":
        raise ParseError(path, 1, "design header must start with 'y'")
    names = header[1:]
    rows = []
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ParseError(path, line_number, f"expected {len(header)} cells, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ParseError(path, line_number, str(exc)) from exc
    if not rows:
        raise ParseError(path, 2, "design file has no data rows")
    data = np.asarray(rows)
    return Dataset(data[:, 1:], data[:, 0]), names


def write_design_sidecar(path, columns, extra=None) -> None:
    """Write the JSON sidecar carrying column metadata and positions."""
    doc = {
        "columns": [
            {"index": c.index, "position": c.position, "residue": c.residue} for c in columns
        ],
        "positions": [c.position for c in columns],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_design_sidecar(path) -> dict:
    with open(path) as handle:
        return json.load(handle)
