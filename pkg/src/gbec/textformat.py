"""Indentation-based hierarchical key-value text format.

Used by every structured file the package reads or writes (attachment
specs, experiment configs, transform records). Two-space indentation nests
sections, leaves are ``key: value`` lines, ``#`` lines are comments. Keys
carry explicit unit suffixes (``_mm``, ``_deg``) where a value has one.
Parse errors always cite ``source:line``.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field

from .errors import ConfigInvalid

_KEY_RE = re.compile(r"[A-Za-z0-9_.\-]+")


@dataclass
class Node:
    """A parsed section (value None) or leaf, with its source location."""

    source: str
    line: int
    value: str | None = None
    children: dict[str, "Node"] = field(default_factory=dict)

    def where(self) -> str:
        return f"{self.source}:{self.line}"

    def is_section(self) -> bool:
        return self.value is None

    def keys(self):
        return self.children.keys()

    def child(self, key: str, required: bool = True) -> "Node | None":
        node = self.children.get(key)
        if node is None and required:
            raise ConfigInvalid(f"{self.where()}: missing required key '{key}'")
        return node

    def section(self, key: str, required: bool = True) -> "Node | None":
        node = self.child(key, required)
        if node is None:
            return None
        if not node.is_section():
            raise ConfigInvalid(f"{node.where()}: '{key}' must be a section, not a value")
        return node

    def leaf(self, key: str, default: str | None = None, required: bool = False) -> str | None:
        node = self.child(key, required)
        if node is None:
            return default
        if node.is_section():
            raise ConfigInvalid(f"{node.where()}: '{key}' must be a value, not a section")
        return node.value

    def get_str(self, key: str, default: str | None = None, required: bool = False) -> str | None:
        return self.leaf(key, default, required)

    def get_int(self, key: str, default: int | None = None, required: bool = False) -> int | None:
        raw = self.leaf(key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigInvalid(f"{self.children[key].where()}: '{key}' must be an integer, got {raw!r}") from None

    def get_float(self, key: str, default: float | None = None, required: bool = False) -> float | None:
        raw = self.leaf(key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigInvalid(f"{self.children[key].where()}: '{key}' must be a number, got {raw!r}") from None

    def get_floats(self, key: str, count: int | None = None, required: bool = False) -> list[float] | None:
        raw = self.leaf(key, None, required)
        if raw is None:
            return None
        try:
            values = [float(tok) for tok in raw.split()]
        except ValueError:
            raise ConfigInvalid(f"{self.children[key].where()}: '{key}' must be numbers, got {raw!r}") from None
        if count is not None and len(values) != count:
            raise ConfigInvalid(
                f"{self.children[key].where()}: '{key}' needs {count} numbers, got {len(values)}"
            )
        return values

    def require_only(self, allowed) -> None:
        """Reject unknown keys so typos fail loudly with their line."""
        allowed = set(allowed)
        for key, node in self.children.items():
            if key not in allowed:
                raise ConfigInvalid(f"{node.where()}: unknown key '{key}'")


def parse_text(text: str, source: str = "<text>") -> Node:
    """Parse into a root section node."""
    root = Node(source, 0)
    stack: list[Node] = [root]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        indent = len(line) - len(line.lstrip(" "))
        if indent % 2 != 0:
            raise ConfigInvalid(f"{source}:{lineno}: indentation must be multiples of 2 spaces")
        depth = indent // 2
        if depth >= len(stack):
            raise ConfigInvalid(f"{source}:{lineno}: indentation jumps more than one level")
        content = line.strip()
        key, sep, rest = content.partition(":")
        key = key.strip()
        if not sep:
            raise ConfigInvalid(f"{source}:{lineno}: expected 'key: value' or 'key:'")
        if not _KEY_RE.fullmatch(key):
            raise ConfigInvalid(f"{source}:{lineno}: invalid key {key!r}")
        value = rest.strip()
        node = Node(source, lineno, value if value else None)
        parent = stack[depth]
        if not parent.is_section():
            raise ConfigInvalid(f"{source}:{lineno}: cannot nest under a value line")
        if key in parent.children:
            raise ConfigInvalid(f"{source}:{lineno}: duplicate key '{key}'")
        parent.children[key] = node
        del stack[depth + 1:]
        stack.append(node)
    return root


def parse_file(path) -> Node:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"{path}: cannot read file ({exc})") from None
    return parse_text(text, source=str(path))


def format_float(x: float) -> str:
    """Shortest representation that round-trips exactly through float()."""
    return repr(float(x))


def format_floats(values) -> str:
    return " ".join(format_float(v) for v in values)


def dump_text(mapping: dict, header: str | None = None) -> str:
    """Serialize a nested dict of {str: str | dict} the parser accepts."""
    lines: list[str] = []
    if header:
        lines.append(f"# {header}")

    def emit(section: dict, depth: int) -> None:
        pad = "  " * depth
        for key, value in section.items():
            if isinstance(value, dict):
                lines.append(f"{pad}{key}:")
                emit(value, depth + 1)
            else:
                lines.append(f"{pad}{key}: {value}")

    emit(mapping, 0)
    return "\n".join(lines) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write whole-file-or-nothing: temp file in the same dir, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
