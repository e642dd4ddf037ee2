"""File I/O: JSONL rows, JSON reports, CSV exports, and run manifests.

Primary outputs are written atomically (temp file + rename) with stable key
ordering, so a rerun under the same config is byte-identical. Timestamps
live only in ``run_meta.json``; every output directory carries a
``manifest.json`` with the format version and the config hash, which makes
the artifact bundle self-describing.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .supervision import Sample

FORMAT_VERSION = 1


class InputError(Exception):
    """A data file is malformed; the message carries file and line."""


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def dump_json(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: Path, obj: object) -> None:
    atomic_write_text(path, dump_json(obj))


def write_jsonl(path: Path, rows: Iterable[dict]) -> int:
    lines = [json.dumps(row, sort_keys=True, ensure_ascii=False) for row in rows]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def read_jsonl(path: Path) -> Iterator[Tuple[int, dict]]:
    """Yield (line_number, record); malformed lines raise InputError."""
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    with handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise InputError(f"{path}:{line_no}: expected an object per line")
            yield line_no, record


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def config_hash(config_dict: dict) -> str:
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def write_manifest(
    out_dir: Path, command: str, config_digest: str, outputs: dict, extras: Optional[dict] = None
) -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_hash": config_digest,
        "outputs": outputs,
    }
    if extras:
        manifest.update(extras)
    write_json(out_dir / "manifest.json", manifest)


def write_run_meta(out_dir: Path, command: str, config_digest: str) -> None:
    """Timestamped metadata, deliberately kept out of the primary outputs."""
    write_json(
        out_dir / "run_meta.json",
        {
            "command": command,
            "config_hash": config_digest,
            "written_at": datetime.now(timezone.utc).isoformat(),
        },
    )


_SAMPLE_FIELDS = {"id", "context", "text", "origin", "model_id", "checkpoint_step", "total_steps"}


def sample_from_record(record: dict, where: str) -> Sample:
    unknown = set(record) - _SAMPLE_FIELDS
    if unknown:
        raise InputError(f"{where}: unknown sample fields {sorted(unknown)}")
    try:
        return Sample(
            id=str(record["id"]),
            context=str(record.get("context", "")),
            text=str(record["text"]),
            origin=str(record["origin"]),
            model_id=record.get("model_id"),
            checkpoint_step=record.get("checkpoint_step"),
            total_steps=record.get("total_steps"),
        )
    except KeyError as exc:
        raise InputError(f"{where}: missing required field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_samples(path: Path) -> List[Sample]:
    samples = [sample_from_record(rec, f"{path}:{line_no}") for line_no, rec in read_jsonl(path)]
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InputError(f"{path}: duplicate sample ids {dupes[:5]}")
    return samples


def load_human_scores(path: Path) -> List[Tuple[str, int, str]]:
    """Rows of {"sample_id", "score" 1..5, "annotator"}."""
    rows: List[Tuple[str, int, str]] = []
    for line_no, record in read_jsonl(path):
        where = f"{path}:{line_no}"
        try:
            sample_id = str(record["sample_id"])
            score = record["score"]
            annotator = str(record.get("annotator", ""))
        except KeyError as exc:
            raise InputError(f"{where}: missing required field {exc.args[0]!r}") from exc
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
            raise InputError(f"{where}: score must be an integer in 1..5, got {score!r}")
        rows.append((sample_id, score, annotator))
    return rows


def load_contexts(path: Path) -> List[str]:
    """Rows of {"id"?, "text"}; returns the texts in file order."""
    texts = []
    for line_no, record in read_jsonl(path):
        if "text" not in record:
            raise InputError(f"{path}:{line_no}: context rows need a 'text' field")
        texts.append(str(record["text"]))
    return texts
