"""Shortest dependency paths: graph construction, BFS, and node-sequence encoding.

A parse tree is viewed as an undirected graph; the unique simple path between
the two nominal anchors is encoded as an alternating sequence of word, arrow,
and (optionally) arc-label nodes.  Arrow convention: "→" marks a traversal
step from dependent to head, "←" from head to dependent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .corpus import Direction, ParsedSentence, RawInstance

ARROW_TO_HEAD = "→"
ARROW_TO_DEPENDENT = "←"
_ARROWS = {ARROW_TO_HEAD, ARROW_TO_DEPENDENT}
_FLIP = {ARROW_TO_HEAD: ARROW_TO_DEPENDENT, ARROW_TO_DEPENDENT: ARROW_TO_HEAD}


class PathError(Exception):
    """Path extraction failed for an instance."""


class NodeKind(Enum):
    WORD = "word"
    ARROW = "arrow"
    LABEL = "label"


class PathMode(Enum):
    """Whether arc labels appear on the encoded path or only arrows."""

    LABELED = "labeled"
    DIRECTIONS_ONLY = "directions-only"


@dataclass(frozen=True)
class PathNode:
    kind: NodeKind
    text: str

    def __post_init__(self) -> None:
        if self.kind is NodeKind.ARROW and self.text not in _ARROWS:
            raise ValueError(f"invalid arrow token {self.text!r}")


def _kind_at(position: int, mode: PathMode) -> NodeKind:
    if mode is PathMode.LABELED:
        return (NodeKind.WORD, NodeKind.ARROW, NodeKind.LABEL)[position % 3]
    return NodeKind.WORD if position % 2 == 0 else NodeKind.ARROW


@dataclass(frozen=True)
class NodeSequence:
    """The encoded path: WORD (ARROW [LABEL] WORD)*, anchors at both ends."""

    nodes: tuple[PathNode, ...]
    mode: PathMode

    def __post_init__(self) -> None:
        n = len(self.nodes)
        step = 3 if self.mode is PathMode.LABELED else 2
        if n < 1 or n % step != 1:
            raise ValueError(f"sequence of {n} nodes does not fit mode {self.mode.value}")
        for i, node in enumerate(self.nodes):
            want = _kind_at(i, self.mode)
            if node.kind is not want:
                raise ValueError(f"node {i}: expected {want.value}, got {node.kind.value}")

    def __len__(self) -> int:
        return len(self.nodes)

    def texts(self) -> list[str]:
        return [n.text for n in self.nodes]

    @property
    def n_edges(self) -> int:
        step = 3 if self.mode is PathMode.LABELED else 2
        return (len(self.nodes) - 1) // step


@dataclass(frozen=True)
class Edge:
    neighbor: int
    deprel: str
    to_head: bool


@dataclass(frozen=True)
class DepGraph:
    """Undirected adjacency view of a parse tree (root link excluded)."""

    n: int
    adjacency: tuple[tuple[Edge, ...], ...]

    def edge_between(self, i: int, j: int) -> Edge:
        for e in self.adjacency[i]:
            if e.neighbor == j:
                return e
        raise PathError(f"no arc between tokens {i} and {j}")


def build_graph(parse: ParsedSentence) -> DepGraph:
    """Turn head links into labeled, orientation-tagged undirected adjacency."""
    n = len(parse)
    adj: list[list[Edge]] = [[] for _ in range(n)]
    for i, tok in enumerate(parse.tokens):
        if tok.head is None:
            continue
        adj[i].append(Edge(tok.head, tok.deprel, to_head=True))
        adj[tok.head].append(Edge(i, tok.deprel, to_head=False))
    return DepGraph(n, tuple(tuple(edges) for edges in adj))


def select_anchor(span: tuple[int, int], parse: ParsedSentence) -> int:
    """Pick the span's syntactic head: the one token headed from outside.

    Falls back to the rightmost span token when the head is not unique.
    """
    lo, hi = span
    inside = range(lo, hi + 1)
    outward = [
        i
        for i in inside
        if parse.tokens[i].head is None or not (lo <= parse.tokens[i].head <= hi)
    ]
    if len(outward) == 1:
        return outward[0]
    return hi


def shortest_path(g: DepGraph, a: int, b: int) -> list[int]:
    """BFS from a to b; in a tree this is the unique simple path."""
    if a == b:
        raise PathError(f"degenerate pair: both anchors are token {a}")
    if not (0 <= a < g.n and 0 <= b < g.n):
        raise PathError(f"anchor out of range: {a}, {b} (n={g.n})")
    parent = [-1] * g.n
    parent[a] = a
    queue = deque([a])
    while queue:
        i = queue.popleft()
        if i == b:
            break
        for e in g.adjacency[i]:
            if parent[e.neighbor] == -1:
                parent[e.neighbor] = i
                queue.append(e.neighbor)
    if parent[b] == -1:
        raise PathError(f"no path between tokens {a} and {b}")
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def encode_path(
    path: list[int], g: DepGraph, parse: ParsedSentence, mode: PathMode
) -> NodeSequence:
    """Encode a token path as word/arrow/label nodes; words are lower-cased."""
    nodes = [PathNode(NodeKind.WORD, parse.tokens[path[0]].form.lower())]
    for i, j in zip(path, path[1:]):
        edge = g.edge_between(i, j)
        arrow = ARROW_TO_HEAD if edge.to_head else ARROW_TO_DEPENDENT
        nodes.append(PathNode(NodeKind.ARROW, arrow))
        if mode is PathMode.LABELED:
            nodes.append(PathNode(NodeKind.LABEL, edge.deprel))
        nodes.append(PathNode(NodeKind.WORD, parse.tokens[j].form.lower()))
    return NodeSequence(tuple(nodes), mode)


def reverse_path(s: NodeSequence) -> NodeSequence:
    """Reverse the path, keeping each arrow/label unit on its edge and
    flipping every arrow."""
    step = 3 if s.mode is PathMode.LABELED else 2
    words = s.nodes[::step]
    units = [tuple(s.nodes[i : i + step - 1]) for i in range(1, len(s.nodes), step)]
    nodes: list[PathNode] = [words[-1]]
    for word, unit in zip(reversed(words[:-1]), reversed(units)):
        arrow = unit[0]
        nodes.append(PathNode(NodeKind.ARROW, _FLIP[arrow.text]))
        nodes.extend(unit[1:])
        nodes.append(word)
    return NodeSequence(tuple(nodes), s.mode)


def instance_path(raw: RawInstance, parse: ParsedSentence, mode: PathMode) -> NodeSequence:
    """The encoded shortest path from the e1 anchor to the e2 anchor."""
    g = build_graph(parse)
    a = select_anchor(raw.e1_span, parse)
    b = select_anchor(raw.e2_span, parse)
    return encode_path(shortest_path(g, a, b), g, parse, mode)


def subject_first_path(
    raw: RawInstance, parse: ParsedSentence, mode: PathMode
) -> NodeSequence:
    """The path starting at the gold subject (e1→e2 for undirected labels)."""
    fwd = instance_path(raw, parse, mode)
    if raw.label.direction is Direction.E2_TO_E1:
        return reverse_path(fwd)
    return fwd


# ---------------------------------------------------------------------------
# Path file format (`extract-paths` output, also the negative-pool input)
# ---------------------------------------------------------------------------


def format_path_line(inst_id: int, s: NodeSequence) -> str:
    return f"{inst_id}\t" + " ".join(s.texts())


def parse_path_line(line: str, mode: PathMode) -> tuple[int, NodeSequence]:
    """Inverse of format_path_line; validates the node pattern."""
    try:
        id_part, rest = line.rstrip("\n").split("\t", 1)
        inst_id = int(id_part)
    except ValueError:
        raise PathError(f"malformed path line {line!r}") from None
    texts = rest.split(" ")
    try:
        nodes = tuple(
            PathNode(_kind_at(i, mode), t) for i, t in enumerate(texts)
        )
        return inst_id, NodeSequence(nodes, mode)
    except ValueError as e:
        raise PathError(f"malformed path line {line!r}: {e}") from None
