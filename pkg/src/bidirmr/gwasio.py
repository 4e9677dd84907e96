"""GWAS summary-statistics ingestion, harmonization, and report serialization.

Input files are tab-separated with a header naming at least ``id``, ``beta``
and ``se`` (arbitrary file headers can be remapped onto those names).
Harmonization inner-joins two files on variant id, optionally reconciling
effect alleles: when the outcome file reports the swapped allele pair the
outcome beta changes sign, while palindromic (A/T, C/G) and
mismatched-allele variants are dropped, since without allele frequencies a
silent misorientation is worse than exclusion. Standard errors are never
altered.

Serialization is deterministic: fixed key order, reals rounded to 12
significant digits, a schema version field, and byte-identical output for
identical reports.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateVariantError,
    EmptyIntersectionError,
    GwasParseError,
    InputError,
    NonPositiveSEError,
)
from .focusing import Panel

__all__ = [
    "GwasFile",
    "HarmonizeMode",
    "ReportFormat",
    "SCHEMA_VERSION",
    "emit_report",
    "format_document",
    "harmonize",
    "load_gwas",
    "parse_col_map",
    "write_tsv_rows",
]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_REQUIRED_COLUMNS = ("id", "beta", "se")
_ALLELE_COLUMNS = ("effect_allele", "other_allele")
_PALINDROMIC = ({"A", "T"}, {"C", "G"})


@dataclass(frozen=True, eq=False)
class GwasFile:
    """One study's parsed summary statistics, in file order."""

    ids: tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    effect_allele: tuple[str, ...] | None = None
    other_allele: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def has_alleles(self) -> bool:
        return self.effect_allele is not None and self.other_allele is not None


def parse_col_map(spec: str) -> dict[str, str]:
    """Parse a ``FILECOL=CANONICAL`` comma list, e.g. ``"b=beta,rsid=id"``."""
    mapping: dict[str, str] = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise InputError(f"column mapping {item!r} is not of the form FILECOL=CANONICAL")
        raw, canonical = (part.strip() for part in item.split("=", 1))
        if canonical not in _REQUIRED_COLUMNS + _ALLELE_COLUMNS:
            raise InputError(f"unknown canonical column {canonical!r} in column mapping")
        mapping[raw] = canonical
    return mapping


def load_gwas(path: str, col_map: Mapping[str, str] | None = None) -> GwasFile:
    """Parse one TSV of summary statistics with strict validation.

    ``col_map`` renames file headers onto the canonical names before the
    required-column check. Allele columns are honored only when both are
    present. Non-numeric, non-finite, or nonpositive-SE rows and duplicate
    ids fail with the offending line number.
    """
    col_map = dict(col_map or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise GwasParseError("file is empty", path=path) from None
        names = [col_map.get(h.strip(), h.strip()) for h in header]
        missing = [c for c in _REQUIRED_COLUMNS if c not in names]
        if missing:
            raise GwasParseError(f"missing required columns {missing}", path=path, line=1)
        pos = {name: names.index(name) for name in names}
        with_alleles = all(c in pos for c in _ALLELE_COLUMNS)

        ids: list[str] = []
        beta: list[float] = []
        se: list[float] = []
        ea: list[str] = []
        oa: list[str] = []
        seen: set[str] = set()
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise GwasParseError(
                    f"expected {len(names)} fields, got {len(row)}", path=path, line=line_no
                )
            variant = row[pos["id"]].strip()
            if not variant:
                raise GwasParseError("empty variant id", path=path, line=line_no)
            if variant in seen:
                raise DuplicateVariantError(
                    f"duplicate variant id {variant!r}", path=path, line=line_no
                )
            seen.add(variant)

            values = {}
            for name in ("beta", "se"):
                raw = row[pos[name]].strip()
                try:
                    values[name] = float(raw)
                except ValueError:
                    raise GwasParseError(
                        f"column {name!r} has non-numeric value {raw!r}", path=path, line=line_no
                    ) from None
                if not math.isfinite(values[name]):
                    raise GwasParseError(
                        f"column {name!r} has non-finite value {raw!r}", path=path, line=line_no
                    )
            if values["se"] <= 0.0:
                raise NonPositiveSEError(
                    f"standard error must be positive, got {values['se']}",
                    path=path,
                    line=line_no,
                )
            ids.append(variant)
            beta.append(values["beta"])
            se.append(values["se"])
            if with_alleles:
                ea.append(row[pos["effect_allele"]].strip().upper())
                oa.append(row[pos["other_allele"]].strip().upper())

    logger.info("loaded %d variants from %s", len(ids), path)
    return GwasFile(
        ids=tuple(ids),
        beta=np.array(beta, dtype=float),
        se=np.array(se, dtype=float),
        effect_allele=tuple(ea) if with_alleles else None,
        other_allele=tuple(oa) if with_alleles else None,
    )


class HarmonizeMode(str, Enum):
    BY_ID = "id"
    BY_ALLELE = "allele"


def _is_palindromic(a1: str, a2: str) -> bool:
    return {a1, a2} in _PALINDROMIC


def harmonize(
    exposure: GwasFile, outcome: GwasFile, mode: HarmonizeMode = HarmonizeMode.BY_ID
) -> Panel:
    """Inner-join two studies into a panel, in exposure-file order.

    ``BY_ID`` joins ids verbatim. ``BY_ALLELE`` additionally reconciles
    allele orientation: identical pairs pass through, swapped pairs flip the
    outcome beta's sign, and palindromic or mismatched pairs are dropped
    (counts logged). Standard errors pass through untouched.
    """
    mode = HarmonizeMode(mode)
    if mode is HarmonizeMode.BY_ALLELE and not (exposure.has_alleles and outcome.has_alleles):
        raise InputError("allele harmonization requires allele columns in both files")

    outcome_pos = {variant: j for j, variant in enumerate(outcome.ids)}
    ids: list[str] = []
    beta_d: list[float] = []
    se_d: list[float] = []
    beta_y: list[float] = []
    se_y: list[float] = []
    n_palindromic = 0
    n_mismatched = 0
    for i, variant in enumerate(exposure.ids):
        j = outcome_pos.get(variant)
        if j is None:
            continue
        flip = False
        if mode is HarmonizeMode.BY_ALLELE:
            exp_ea, exp_oa = exposure.effect_allele[i], exposure.other_allele[i]
            out_ea, out_oa = outcome.effect_allele[j], outcome.other_allele[j]
            if _is_palindromic(exp_ea, exp_oa) or _is_palindromic(out_ea, out_oa):
                n_palindromic += 1
                continue
            if (exp_ea, exp_oa) == (out_ea, out_oa):
                flip = False
            elif (exp_ea, exp_oa) == (out_oa, out_ea):
                flip = True
            else:
                n_mismatched += 1
                continue
        ids.append(variant)
        beta_d.append(float(exposure.beta[i]))
        se_d.append(float(exposure.se[i]))
        beta_y.append(-float(outcome.beta[j]) if flip else float(outcome.beta[j]))
        se_y.append(float(outcome.se[j]))

    if mode is HarmonizeMode.BY_ALLELE and (n_palindromic or n_mismatched):
        logger.info(
            "harmonization dropped %d palindromic and %d mismatched-allele variants",
            n_palindromic,
            n_mismatched,
        )
    if not ids:
        raise EmptyIntersectionError("no variants shared between exposure and outcome files")
    return Panel.from_arrays(ids, beta_d, se_d, beta_y, se_y)


class ReportFormat(str, Enum):
    JSON = "json"
    TSV = "tsv"


def _round_sig(value: float) -> float | None:
    # 12 significant digits; the shortest-roundtrip repr of the rounded
    # value is then platform-independent. Non-finite reals have no strict
    # JSON encoding and become null.
    if not math.isfinite(value):
        return None
    return float(f"{value:.12g}")


def _normalize(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return _normalize(obj.value)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _round_sig(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return _round_sig(float(obj))
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, Mapping):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def _tsv_cell(value: Any) -> str:
    if isinstance(value, Enum):
        value = value.value
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_tsv_cell(v) for v in value)
    return str(value)


def format_document(document: Mapping[str, Any], fmt: ReportFormat = ReportFormat.JSON) -> str:
    """Render a report document deterministically as JSON or TSV text.

    The document is a mapping whose ``results`` key (when TSV is requested)
    holds a list of homogeneous row mappings; TSV output is one row per
    entry with columns in first-row key order.
    """
    fmt = ReportFormat(fmt)
    normalized = _normalize(dict(document))
    if fmt is ReportFormat.JSON:
        return json.dumps(normalized, indent=2, allow_nan=False) + "\n"

    rows = normalized.get("results")
    if not isinstance(rows, list) or not rows:
        raise InputError("TSV output needs a nonempty 'results' list of row mappings")
    columns = list(rows[0].keys())
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(_tsv_cell(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def emit_report(
    document: Mapping[str, Any], fmt: ReportFormat = ReportFormat.JSON, path: str | None = None
) -> str:
    """Serialize a report document; write it to ``path`` when given.

    Returns the rendered text either way. Identical documents yield
    byte-identical output.
    """
    text = format_document(document, fmt)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def write_tsv_rows(path: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """Write a plain TSV with the given header and pre-ordered rows."""
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(_tsv_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
