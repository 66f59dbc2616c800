"""Code-mold instantiation: substitute ``#P<name>`` markers and bind environment variables.

A marker is ``#P`` followed by a maximal run of identifier characters; the
run names the parameter whose configured value replaces the whole token.
Substitution is pure text (the surrounding language is never parsed), and a
rendered file must come out marker-free so rendering is idempotent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .space import Configuration, ParamSpace

MARKER_RE = re.compile(r"#P([A-Za-z0-9_]*)")


class MoldError(ValueError):
    """A marker could not be resolved or a render left marker tokens behind."""


@dataclass(frozen=True)
class MoldFile:
    """One templated source file and where its rendered copy lands (relative paths)."""

    source: str
    destination: str


def scan_markers(text: str) -> set[str]:
    """Names of all ``#P<name>`` markers appearing in the text."""
    return {m.group(1) for m in MARKER_RE.finditer(text) if m.group(1)}


def render(text: str, config: Configuration, *, filename: str = "<mold>") -> str:
    """Replace every marker with the configuration's value for that parameter.

    Non-marker text passes through byte-identical. Raises MoldError for a
    marker naming no parameter (longest-match: the marker name is the maximal
    identifier run after ``#P``) and when a substituted value itself
    introduces marker tokens, which would break idempotence.
    """

    def _sub(m: re.Match) -> str:
        name = m.group(1)
        if not name or name not in config:
            raise MoldError(f"{filename}: unresolvable marker {m.group(0)!r}")
        return config[name]

    rendered = MARKER_RE.sub(_sub, text)
    leftover = MARKER_RE.search(rendered)
    if leftover:
        raise MoldError(
            f"{filename}: rendered output still contains marker token {leftover.group(0)!r}"
        )
    return rendered


def render_molds(molds, config: Configuration, source_root: Path, dest_root: Path) -> list[Path]:
    """Render each mold file under dest_root, mirroring its destination layout."""
    written = []
    for mold in molds:
        src = source_root / mold.source
        text = src.read_text()
        out = render(text, config, filename=str(src))
        dest = dest_root / mold.destination
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(out)
        written.append(dest)
    return written


def bind_env(bindings: dict[str, str], config: Configuration) -> dict[str, str]:
    """Concrete environment assignments: env var -> the raw configured value string."""
    env = {}
    for env_name, param_name in bindings.items():
        if param_name not in config:
            raise MoldError(f"env binding {env_name} references unknown parameter {param_name!r}")
        env[env_name] = config[param_name]
    return env


def validate_bindings(bindings: dict[str, str], space: ParamSpace) -> None:
    names = set(space.names)
    for env_name, param_name in bindings.items():
        if param_name not in names:
            raise MoldError(f"env binding {env_name} references unknown parameter {param_name!r}")
