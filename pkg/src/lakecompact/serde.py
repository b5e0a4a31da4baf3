"""Canonical JSON encoding and small typed-field readers used by the loaders."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from typing import Any

from lakecompact.errors import ValidationError

log = logging.getLogger(__name__)


def canonical_dumps(obj: Any) -> bytes:
    """Sorted keys, two-space indent, LF, trailing newline, UTF-8."""
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


class Reader:
    """Pulls typed fields out of a decoded JSON object, tracking the field path.

    Unknown keys are rejected in strict mode and logged in lenient mode.
    """

    def __init__(self, obj: Any, path: str, *, lenient: bool = False, error=ValidationError):
        self.path = path
        self.lenient = lenient
        self._error = error
        if not isinstance(obj, Mapping):
            self.fail("", f"expected an object, got {type(obj).__name__}")
        self.obj = obj
        self._seen: set[str] = set()

    def _join(self, key: str) -> str:
        if not key:
            return self.path
        return f"{self.path}.{key}" if self.path else key

    def fail(self, key: str, message: str):
        if self._error is ValidationError:
            raise ValidationError(self._join(key), message)
        raise self._error(f"{self._join(key)}: {message}")

    def child(self, key: str, obj: Any) -> Reader:
        return Reader(obj, self._join(key), lenient=self.lenient, error=self._error)

    def has(self, key: str) -> bool:
        return key in self.obj

    def raw(self, key: str, default: Any = ...) -> Any:
        self._seen.add(key)
        if key not in self.obj:
            if default is not ...:
                return default
            self.fail(key, "missing required field")
        return self.obj[key]

    def int(self, key: str, default: Any = ..., *, minimum: int | None = None, nullable: bool = False) -> int:
        value = self.raw(key, default)
        if value is None and (nullable or default is None):
            return None  # type: ignore[return-value]
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(key, f"must be >= {minimum}, got {value}")
        return value

    def number(self, key: str, default: Any = ..., *, positive: bool = False) -> float:
        value = self.raw(key, default)
        if value is None and default is None:
            return None  # type: ignore[return-value]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(key, f"expected a finite number, got {value!r}")
        if positive and not value > 0:
            self.fail(key, f"must be > 0, got {value}")
        return float(value)

    def str(self, key: str, default: Any = ...) -> str:
        value = self.raw(key, default)
        if value is None and default is None:
            return None  # type: ignore[return-value]
        if not isinstance(value, str):
            self.fail(key, f"expected a string, got {value!r}")
        return value

    def bool(self, key: str, default: Any = ...) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            self.fail(key, f"expected a boolean, got {value!r}")
        return value

    def list(self, key: str, default: Any = ...) -> list:
        value = self.raw(key, default)
        if not isinstance(value, list):
            self.fail(key, f"expected an array, got {type(value).__name__}")
        return value

    def mapping(self, key: str, default: Any = ...) -> Mapping:
        value = self.raw(key, default)
        if not isinstance(value, Mapping):
            self.fail(key, f"expected an object, got {type(value).__name__}")
        return value

    def finish(self) -> None:
        unknown = sorted(set(self.obj) - self._seen)
        if not unknown:
            return
        if self.lenient:
            for key in unknown:
                log.warning("ignoring unknown field %s", self._join(key))
            return
        self.fail(unknown[0], "unknown field")
