import os
import tempfile
import zlib
from pathlib import Path

import numpy as np


def _tag(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def derive_rng(seed, *path):
    """Generator for a named stream, e.g. ``derive_rng(0, "rank", 17)``.

    Streams are PCG64 seeded through ``SeedSequence`` with the path folded
    into the spawn key, so any (seed, path) pair reproduces in isolation.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_tag(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def fmt(value):
    """12 significant digits; NaN becomes an empty cell."""
    if value is None:
        return ""
    value = float(value)
    if np.isnan(value):
        return ""
    return f"{value:.12g}"


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
