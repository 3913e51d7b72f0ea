"""Verdicts and counterexample witnesses shared by the checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .fileio import write_graph, write_profile
from .graphs import Graph, Profile


def _jsonable(value):
    if isinstance(value, Profile):
        return write_profile(value)
    if isinstance(value, Graph):
        return write_graph(value)
    if isinstance(value, (frozenset, set)):
        return sorted(_jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if hasattr(value, "item"):  # numpy scalar
        return value.item()
    return value


@dataclass
class Witness:
    """A counterexample.  ``profiles`` and ``outputs`` are aligned."""

    kind: str
    profiles: tuple = ()
    outputs: tuple = ()
    edges: tuple = ()
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "profiles": [write_profile(p) for p in self.profiles],
            "outputs": [write_graph(g) for g in self.outputs],
            "edges": [list(e) for e in self.edges],
            "detail": self.detail,
        }
        d.update({k: _jsonable(v) for k, v in self.extra.items()})
        return d

    def describe(self) -> str:
        lines = [self.detail] if self.detail else []
        for k, v in self.extra.items():
            lines.append(f"{k}: {_jsonable(v)}")
        for i, (p, g) in enumerate(zip(self.profiles, self.outputs), start=1):
            tag = f"profile {i}" if len(self.profiles) > 1 else "profile"
            lines.append(f"{tag}:")
            lines.append(write_profile(p).rstrip())
            lines.append(f"output: {_edge_text(g)}")
        return "\n".join(lines)


def _edge_text(g: Graph) -> str:
    return "{" + ", ".join(f"({x},{y})" for x, y in g.edges) + "}"


@dataclass
class Verdict:
    check: str
    status: str  # pass | fail
    witness: Optional[Witness] = None
    examined: int = 0
    scope: str = "all graphs"
    sampled: bool = False
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def __bool__(self):
        return self.passed

    @property
    def label(self) -> str:
        if self.status == "fail":
            return "fail"
        return "no counterexample found (sampled)" if self.sampled else "pass"

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "label": self.label,
            "scope": self.scope,
            "examined": int(self.examined),
            "sampled": self.sampled,
            "info": _jsonable(self.info),
            "witness": None if self.witness is None else self.witness.to_dict(),
        }

    def describe(self) -> str:
        head = f"{self.check} [{self.scope}]: {self.label} ({self.examined} examined)"
        if self.witness is None:
            return head
        return head + "\n" + self.witness.describe()
