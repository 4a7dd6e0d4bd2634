"""Append-only JSONL result files with provenance headers, plus CSV tables.

Every results file starts with a single header line::

    {"schema": 1, "kind": "...", "config_hash": "...", "code_version": "...", "seed": ...}

followed by one JSON record per line.  Records carry a natural key
(network id, environment descriptor, eta, lambda, mode); re-running a
pipeline skips keys that are already on disk, so interrupted runs resume
by simply appending what is missing.  Given identical inputs a rerun
leaves the file byte-identical.

CSV summaries start with a ``# provenance: ...`` comment line carrying the
same fields, then an ordinary header row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__

SCHEMA_VERSION = 1

RecordKey = tuple[str, str, float, float, str]


def record_key(record: dict) -> RecordKey:
    """Natural key of an evaluation record (see module docstring)."""
    return (
        str(record["network_id"]),
        str(record["env"]),
        float(record["eta"]),
        float(record["lambda"]),
        str(record["mode"]),
    )


def make_header(kind: str, config_hash: str, seed: int) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "config_hash": config_hash,
        "code_version": __version__,
        "seed": int(seed),
    }


def _dump(obj: dict) -> str:
    # Stable field order and no whitespace variance: required for the
    # byte-identical-rerun guarantee.
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class RecordWriter:
    """Keyed, append-only JSONL writer with idempotent resume.

    Opening an existing file validates its header against the expected one
    and indexes the keys already present; ``append`` then silently skips
    duplicates and reports whether it wrote anything.  ``key_fn`` defaults
    to the evaluation-record key; pool network files and similar use their
    own natural keys.
    """

    def __init__(self, path, header: dict, key_fn=record_key):
        self.path = Path(path)
        self.header = header
        self.key_fn = key_fn
        self.keys: set = set()
        if self.path.exists() and self.path.stat().st_size > 0:
            existing, records = read_records(self.path)
            if existing != header:
                raise ValueError(
                    f"{self.path} belongs to a different run: header {existing} != {header}"
                )
            self.keys = {key_fn(r) for r in records}
            self._fh = self.path.open("a", encoding="utf-8")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8")
            self._fh.write(_dump(header) + "\n")
            self._fh.flush()

    def append(self, record: dict) -> bool:
        key = self.key_fn(record)
        if key in self.keys:
            return False
        self._fh.write(_dump(record) + "\n")
        self._fh.flush()
        self.keys.add(key)
        return True

    def __len__(self) -> int:
        return len(self.keys)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_records(path) -> tuple[dict, list[dict]]:
    """Load (header, records) from a JSONL results file."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValueError(f"{path} is empty (missing header line)")
        header = json.loads(first)
        if header.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema {header.get('schema')!r}")
        records = [json.loads(line) for line in fh if line.strip()]
    return header, records


def provenance_comment(header: dict) -> str:
    return (
        f"# provenance: kind={header['kind']} config_hash={header['config_hash']} "
        f"code_version={header['code_version']} seed={header['seed']}"
    )


def write_csv(path, fieldnames, rows, header: dict) -> None:
    """Write a summary table: provenance comment, column header, rows.

    ``rows`` are dicts; missing fields render empty, extras are an error.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(provenance_comment(header) + "\n")
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv(path) -> tuple[str, list[dict]]:
    """Read back a summary table written by ``write_csv``."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        provenance = fh.readline().rstrip("\n")
        if not provenance.startswith("# provenance:"):
            raise ValueError(f"{path} lacks a provenance comment")
        return provenance, list(csv.DictReader(fh))
