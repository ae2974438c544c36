"""CSV and JSON interchange.

CSV: UTF-8, LF, header row with unit-suffixed column names. JSON: emitter
and cavity objects as produced by ``emitters.*_to_dict``. All writes are
atomic (temporary file in the target directory, then rename).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .emitters import cavity_from_dict, cavity_to_dict, stark_from_dict, stark_to_dict
from .errors import DomainError, ParseError
from .fitting import DecayTransient, Spectrum

SPECTRUM_COLUMNS = ("frequency_ghz", "intensity")
TRANSIENT_COLUMNS = ("time_ns", "counts")


def atomic_write_text(path, text: str):
    path = Path(path)
    d = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=d, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows):
    atomic_write_text(path, format_csv(columns, rows))


def read_csv_columns(path, required: Sequence[str], optional: Sequence[str] = ()) -> dict:
    """Numeric columns by header name. Errors name the file, line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not UTF-8 ({e})") from None
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(f"{path}:1:1: empty file, header required")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"{path}:1:1: missing column(s) {', '.join(missing)}; "
                         f"header is {','.join(header)}")
    wanted = [c for c in (*required, *optional) if c in header]
    idx = {c: header.index(c) for c in wanted}
    out = {c: [] for c in wanted}
    for ln, row in enumerate(rows[1:], start=2):
        if not row or all(not x.strip() for x in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{ln}:1: expected {len(header)} fields, got {len(row)}")
        for c, j in idx.items():
            try:
                v = float(row[j])
            except ValueError:
                raise ParseError(f"{path}:{ln}:{j + 1}: column {c!r}: not a number: {row[j]!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}:{ln}:{j + 1}: column {c!r}: non-finite value")
            out[c].append(v)
    if not out[required[0]]:
        raise ParseError(f"{path}:2:1: no data rows")
    return {c: np.asarray(v) for c, v in out.items()}


def read_spectrum(path) -> Spectrum:
    cols = read_csv_columns(path, SPECTRUM_COLUMNS, ("sigma",))
    try:
        return Spectrum(cols["frequency_ghz"], cols["intensity"], cols.get("sigma"),
                        metadata={"source": str(path)})
    except DomainError as e:
        raise ParseError(f"{path}: {e}") from None


def write_spectrum(path, s: Spectrum):
    if s.sigma is None:
        write_csv(path, ("frequency_ghz", "intensity"), zip(s.frequency, s.intensity))
    else:
        write_csv(path, ("frequency_ghz", "intensity", "sigma"),
                  zip(s.frequency, s.intensity, s.sigma))


def read_transient(path) -> DecayTransient:
    cols = read_csv_columns(path, TRANSIENT_COLUMNS)
    try:
        return DecayTransient(cols["time_ns"], cols["counts"])
    except DomainError as e:
        raise ParseError(f"{path}: {e}") from None


def write_transient(path, t: DecayTransient):
    write_csv(path, TRANSIENT_COLUMNS, zip(t.time, t.counts))


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def load_emitters(path):
    """``{"emitters": [...], "cavities": [...]}`` or a bare list of emitters."""
    doc = read_json(path)
    if isinstance(doc, list):
        doc = {"emitters": doc}
    if not isinstance(doc, dict) or "emitters" not in doc:
        raise ParseError(f"{path}: expected an object with an 'emitters' list")
    unknown = set(doc) - {"emitters", "cavities"}
    if unknown:
        raise ParseError(f"{path}: unknown top-level key(s) {sorted(unknown)}")
    try:
        ems = [stark_from_dict(d) for d in doc["emitters"]]
        cavs = [cavity_from_dict(d) for d in doc.get("cavities", [])]
    except (DomainError, TypeError, KeyError) as e:
        raise ParseError(f"{path}: {e}") from None
    return ems, cavs


def dump_emitters(path, emitters, cavities=()):
    doc = {"emitters": [stark_to_dict(r) for r in emitters]}
    if cavities:
        doc["cavities"] = [cavity_to_dict(c) for c in cavities]
    atomic_write_text(path, dump_json(doc))
