"""Atomic file writes for run artifacts (manifests, scores, snapshots).

The temp file is created in the destination directory so that os.replace()
is atomic on POSIX filesystems (same mount). The destination is either the
old file or the new file, never a partially-written file.
"""
import json
import os
import tempfile
from pathlib import Path
from typing import Any


def write_bytes_atomic(dest: Path, data: bytes, suffix: str = ".tmp") -> Path:
    dest.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dest.parent, suffix=suffix)
    closed = False
    try:
        os.write(fd, data)
        os.fsync(fd)
        os.close(fd)
        closed = True
        os.replace(tmp_path, dest)
    except Exception:
        if not closed:
            os.close(fd)
        os.unlink(tmp_path)
        raise
    return dest


def dumps_stable(payload: Any) -> str:
    """JSON with sorted keys and a trailing newline; byte-identical for equal payloads."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json_atomic(dest: Path, payload: Any) -> Path:
    return write_bytes_atomic(dest, dumps_stable(payload).encode("utf-8"), suffix=".json.tmp")
