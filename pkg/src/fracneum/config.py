"""Flat key-value run configuration: ``section.key = value`` lines.

The format is diff-friendly and language-neutral: one assignment per line,
``#`` comments, no nesting.  Typed getters raise ConfigurationError naming
the offending key, which the CLI maps to exit status 1.
"""

from __future__ import annotations

from .errors import ConfigurationError


class RunConfig:
    """Parsed configuration with typed, error-reporting accessors."""

    def __init__(self, entries: dict, source: str = "<config>"):
        self.entries = dict(entries)
        self.source = source

    @classmethod
    def parse(cls, path) -> "RunConfig":
        entries = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigurationError(
                        f"{path}:{lineno}: expected 'section.key = value' (got {raw.strip()!r})"
                    )
                key, value = (part.strip() for part in line.split("=", 1))
                if not key:
                    raise ConfigurationError(f"{path}:{lineno}: empty key")
                entries[key] = value
        return cls(entries, source=str(path))

    def has(self, key: str) -> bool:
        return key in self.entries

    def _raw(self, key: str, default=None):
        if key in self.entries:
            return self.entries[key]
        if default is not None:
            return default
        raise ConfigurationError(f"{self.source}: missing required key {key!r}")

    def get_float(self, key: str, default=None) -> float:
        raw = self._raw(key, default)
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{self.source}: key {key!r} must be a number (got {raw!r})")

    def get_int(self, key: str, default=None) -> int:
        raw = self._raw(key, default)
        try:
            return int(str(raw))
        except (TypeError, ValueError):
            raise ConfigurationError(f"{self.source}: key {key!r} must be an integer (got {raw!r})")

    def get_str(self, key: str, default=None) -> str:
        return str(self._raw(key, default))

    def section(self, prefix: str) -> dict:
        """All entries under ``prefix.`` with the prefix stripped."""
        head = prefix + "."
        return {k[len(head):]: v for k, v in self.entries.items() if k.startswith(head)}
