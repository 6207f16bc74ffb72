"""Small shared helpers: atomic file writes and stable hashing."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory plus rename.

    Interrupted runs never leave a truncated file at the target path.
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stable_hash(obj) -> str:
    """sha256 of the canonical JSON encoding of obj."""
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
