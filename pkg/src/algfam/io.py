"""File formats and run manifests.

Ideal file (JSON)::

    {"variables": ["x", "y"], "generators": ["x^2 + y^2 - 1", "x - y"]}

Matrix file: JSON list of rows, or whitespace-separated rows with ``#``
comments.  Entries are integers, decimals or fractions ``a/b`` and are
read exactly.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .ideal import GroebnerBasis, Ideal
from .poly import ParseError, Ring, as_fraction

__all__ = [
    "FormatError",
    "resolve_input",
    "read_matrix",
    "read_ideal",
    "ideal_to_dict",
    "read_json",
    "atomic_write",
    "sha256_file",
    "RunManifest",
    "version",
]


class FormatError(ValueError):
    pass


def version() -> str:
    try:
        from importlib.metadata import version as _v

        return _v("artifact")
    except Exception:  # pragma: no cover - not installed
        return "0+unknown"


def resolve_input(path) -> Path:
    """Path as given, or the packaged fixture of that name."""
    p = Path(path)
    if p.exists():
        return p
    data = resources.files("algfam") / "data" / p.name
    if data.is_file():
        return Path(str(data))
    raise FileNotFoundError(f"no such file: {path}")


def read_json(path):
    p = resolve_input(path)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{p}: invalid JSON ({exc})") from None


def _entry(x) -> Fraction:
    if isinstance(x, float):
        # JSON floats go through their shortest decimal form, not the binary value
        x = repr(x)
    try:
        return as_fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad matrix entry {x!r}: {exc}") from None


def read_matrix(path) -> list:
    p = resolve_input(path)
    text = p.read_text()
    stripped = text.lstrip()
    if stripped.startswith("[") or stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{p}: invalid JSON ({exc})") from None
        if isinstance(obj, dict):
            obj = obj.get("S", obj.get("matrix"))
        rows = [[_entry(x) for x in row] for row in obj]
    else:
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([_entry(x) for x in line.replace(",", " ").split()])
    if not rows or any(len(r) != len(rows) for r in rows):
        raise FormatError(f"{p}: matrix must be square and nonempty")
    for i in range(len(rows)):
        for j in range(i):
            if rows[i][j] != rows[j][i]:
                raise FormatError(f"{p}: matrix is not symmetric at ({i + 1},{j + 1})")
    return rows


def read_ideal(obj) -> Ideal:
    """Ideal from a parsed ideal-file dict."""
    if not isinstance(obj, dict) or "variables" not in obj:
        raise FormatError("ideal file needs 'variables' and 'generators'")
    ring = Ring(obj["variables"])
    try:
        gens = [ring.parse(g) for g in obj.get("generators", [])]
    except ParseError:
        raise
    return Ideal(ring, gens)


def ideal_to_dict(I, **extra) -> dict:
    if isinstance(I, GroebnerBasis):
        out = {"variables": list(I.ring.names), "generators": I.format(), "order": I.order.name}
    else:
        out = {"variables": list(I.ring.names), "generators": [g.format() for g in I.gens]}
    out.update(extra)
    return out


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    arguments: dict
    seeds: dict = field(default_factory=dict)
    tool_version: str = field(default_factory=version)
    python: str = field(default_factory=platform.python_version)
    started: str = field(default_factory=_now)
    finished: str | None = None
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add_input(self, path):
        p = resolve_input(path)
        self.inputs[str(path)] = sha256_file(p)

    def write(self, path):
        self.finished = _now()
        atomic_write(path, json.dumps(asdict(self), indent=2, default=str) + "\n")

    @staticmethod
    def path_for(output) -> Path:
        output = Path(output)
        return output.with_name(output.name + ".manifest.json")
