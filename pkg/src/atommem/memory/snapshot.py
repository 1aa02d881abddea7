"""msgpack episode snapshots of a MemoryState, embeddings included.

Snapshot file format
--------------------
A msgpack-encoded dict:

    {
        "format": 1,
        "task_id": "niah-0007",
        "step": 12,
        "memory": {...MemoryState.to_dict()...},
        "embeddings": {
            "dimension": 256,
            "vectors": {"3": <float32 bytes>, ...}   # only entries with a cached embedding
        }
    }

The JSON memory document deliberately omits embeddings; snapshots keep them
so that a restored state retrieves without re-embedding.

Snapshots are written atomically (see atommem.fsutil). load_snapshot() returns
None for missing or corrupt files and never raises.
"""
from pathlib import Path
from typing import Optional

import msgpack
import numpy as np

from atommem.fsutil import write_bytes_atomic
from atommem.memory.state import MemoryState

SNAPSHOT_FORMAT = 1

__all__ = ["save_snapshot", "load_snapshot", "snapshot_path"]


def snapshot_path(snapshot_dir: Path, task_id: str) -> Path:
    return snapshot_dir / f"{task_id}.memory.msgpack"


def save_snapshot(state: MemoryState, snapshot_dir: Path, task_id: str) -> Path:
    vectors: dict[str, bytes] = {}
    dimension = 0
    for entry in state.entries.values():
        if entry.embedding is not None:
            vec = np.asarray(entry.embedding, dtype=np.float32)
            dimension = int(vec.shape[0])
            vectors[str(entry.id)] = vec.tobytes()

    payload = {
        "format": SNAPSHOT_FORMAT,
        "task_id": task_id,
        "step": state.step,
        "memory": state.to_dict(),
        "embeddings": {"dimension": dimension, "vectors": vectors},
    }
    data = msgpack.packb(payload, use_bin_type=True)
    return write_bytes_atomic(snapshot_path(snapshot_dir, task_id), data, suffix=".snap.tmp")


def load_snapshot(snapshot_dir: Path, task_id: str) -> Optional[MemoryState]:
    path = snapshot_path(snapshot_dir, task_id)
    if not path.exists():
        return None
    try:
        payload = msgpack.unpackb(path.read_bytes(), raw=False, strict_map_key=False)
        if payload["format"] != SNAPSHOT_FORMAT:
            return None
        state = MemoryState.from_dict(payload["memory"], step=int(payload["step"]))
        for key, raw in payload["embeddings"]["vectors"].items():
            entry = state.entries.get(int(key))
            if entry is not None:
                entry.embedding = np.frombuffer(raw, dtype=np.float32).astype(np.float64)
        return state
    except Exception:
        # Corrupt file, missing keys, type errors: all treated as absent
        return None
