"""Text format for graphs and profiles, plus Graphviz DOT output.

::

    # comment
    vertices: x y z
    agent 1:
    x y
    agent 2:
    y z
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Union

from .errors import ParseError, UsageError
from .graphs import Graph, Profile, VertexUniverse

_AGENT = re.compile(r"agent\s+(\S+)\s*:$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield no, line


def parse_blocks(text: str):
    """Parse into (universe, [edge lists]) without checking the agent count."""
    universe = None
    blocks: list = []
    for no, line in _lines(text):
        if universe is None:
            if not line.startswith("vertices:"):
                raise ParseError("expected 'vertices: <label> ...' first", no)
            labels = line[len("vertices:") :].split()
            if not labels:
                raise ParseError("no vertices declared", no)
            if len(set(labels)) != len(labels):
                dup = next(v for v in labels if labels.count(v) > 1)
                raise ParseError(f"duplicate vertex {dup!r}", no)
            universe = VertexUniverse(labels)
            continue
        m = _AGENT.match(line)
        if m:
            if m.group(1) != str(len(blocks) + 1):
                raise ParseError(
                    f"expected 'agent {len(blocks) + 1}:', got 'agent {m.group(1)}:'", no
                )
            blocks.append([])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"malformed line {line!r}", no)
        if not blocks:
            raise ParseError("edge line before any 'agent k:' header", no)
        for v in parts:
            if v not in universe.names:
                raise ParseError(f"unknown vertex {v!r}", no)
        blocks[-1].append((parts[0], parts[1]))
    if universe is None:
        raise ParseError("empty input: missing 'vertices:' line")
    return universe, blocks


def parse_profile(text: str) -> Profile:
    universe, blocks = parse_blocks(text)
    if len(blocks) < 2:
        raise ParseError(f"a profile needs at least 2 agent blocks, found {len(blocks)}")
    return Profile.from_edge_lists(universe, blocks)


def parse_graph(text: str) -> Graph:
    universe, blocks = parse_blocks(text)
    if len(blocks) != 1:
        raise ParseError(f"a graph file needs exactly one 'agent 1:' block, found {len(blocks)}")
    return Graph.from_edges(universe, blocks[0])


def _block(k: int, g: Graph) -> list:
    return [f"agent {k}:"] + [f"{x} {y}" for x, y in g.edges]


def write_graph(g: Graph) -> str:
    lines = ["vertices: " + " ".join(g.universe.names)] + _block(1, g)
    return "\n".join(lines) + "\n"


def write_profile(pr: Profile) -> str:
    lines = ["vertices: " + " ".join(pr.universe.names)]
    for k, g in enumerate(pr.graphs, start=1):
        lines += _block(k, g)
    return "\n".join(lines) + "\n"


def canonical(text: str) -> str:
    """Canonical re-serialisation of a graph or profile file."""
    universe, blocks = parse_blocks(text)
    graphs = [Graph.from_edges(universe, b) for b in blocks]
    lines = ["vertices: " + " ".join(universe.names)]
    for k, g in enumerate(graphs, start=1):
        lines += _block(k, g)
    return "\n".join(lines) + "\n"


def _read(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def parse_graph_file(path) -> Graph:
    return parse_graph(_read(path))


def parse_profile_file(path) -> Profile:
    return parse_profile(_read(path))


def write_graph_file(path, g: Graph) -> None:
    Path(path).write_text(write_graph(g), encoding="utf-8")


def write_profile_file(path, pr: Profile) -> None:
    Path(path).write_text(write_profile(pr), encoding="utf-8")


def parse_quota_file(path, universe: VertexUniverse) -> dict:
    """Lines ``<source> <target> <k>``; returns {edge index: quota}."""
    quotas = {}
    for no, line in _lines(_read(path)):
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected '<source> <target> <k>', got {line!r}", no)
        x, y, q = parts
        try:
            e = universe.edge_index(x, y)
        except UsageError as exc:
            raise ParseError(str(exc), no) from None
        try:
            quotas[e] = int(q)
        except ValueError:
            raise ParseError(f"quota {q!r} is not an integer", no) from None
    return quotas


def to_dot(g: Graph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    lines += [f'  "{v}";' for v in g.universe.names]
    lines += [f'  "{x}" -> "{y}";' for x, y in g.edges]
    lines.append("}")
    return "\n".join(lines) + "\n"
