"""CSV emission helpers.

All delimited output in the package goes through :func:`fmt` so that floats
are written with 17 significant digits (enough to round-trip IEEE doubles)
and re-runs with the same seed are byte-identical.
"""

from __future__ import annotations

import hashlib
import os
from typing import Iterable, Sequence


def fmt(value) -> str:
    """Render one cell: floats with 17 significant digits, everything else via str."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    try:
        import numpy as np

        if isinstance(value, np.floating):
            return f"{float(value):.17g}"
        if isinstance(value, np.integer):
            return str(int(value))
    except ImportError:  # pragma: no cover
        pass
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows to ``path`` with a mandatory header, '\\n' line endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
