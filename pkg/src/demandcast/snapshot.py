"""Shared text snapshot format for trained models.

Snapshots are line-oriented ``key=value`` text with a versioned first
line, for example::

    demandcast-snapshot v1 kind=mlp

Floats are printed with 17 significant digits, which is enough to
reconstruct an IEEE double exactly, so parse followed by serialize is
byte-identical. Arrays are space-separated in row-major order.
"""

import numpy as np

from .errors import ParseError

FORMAT_VERSION = 1
_PREFIX = "demandcast-snapshot"


def format_float(x) -> str:
    return "%.17g" % float(x)


def format_array(a) -> str:
    """Row-major space-separated rendering of an array (may be empty)."""
    flat = np.asarray(a, dtype=float).ravel()
    return " ".join(format_float(v) for v in flat)


def parse_array(text: str) -> np.ndarray:
    if not text.strip():
        return np.empty(0)
    try:
        return np.array([float(t) for t in text.split()])
    except ValueError as exc:
        raise ParseError(f"bad number in snapshot array: {exc}") from None


def header_line(kind: str) -> str:
    return f"{_PREFIX} v{FORMAT_VERSION} kind={kind}"


def parse_header(line: str) -> str:
    """Validate the header line and return the snapshot kind."""
    parts = line.strip().split()
    if len(parts) != 3 or parts[0] != _PREFIX:
        raise ParseError(f"not a model snapshot: {line.strip()!r}")
    if parts[1] != f"v{FORMAT_VERSION}":
        raise ParseError(f"unsupported snapshot version {parts[1]!r}")
    if not parts[2].startswith("kind="):
        raise ParseError(f"snapshot header missing kind: {line.strip()!r}")
    return parts[2][len("kind=") :]


def parse_body(text: str) -> dict:
    """Parse the key=value lines after the header into an ordered dict."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if lineno == 1 or not line.strip():
            continue
        if "=" not in line:
            raise ParseError(f"snapshot line {lineno} has no '=': {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in out:
            raise ParseError(f"duplicate snapshot key {key!r}")
        out[key] = value
    return out


def need(body: dict, key: str) -> str:
    if key not in body:
        raise ParseError(f"snapshot missing key {key!r}")
    return body[key]
