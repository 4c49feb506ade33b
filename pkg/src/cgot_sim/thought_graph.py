"""Per-agent inference graphs.

Each agent reasons over a DAG: initial nodes hold the conditions known at
start, intermediate nodes hold reasoning steps, and output nodes hold the
action proposals the conclude layer consumes. Two marker kinds record
structural events: a composition marker ties merged member graphs together,
and a split marker summarizes what a composite decided while its members
were merged.

Node ids are monotonically increasing integers handed out by a per-run
allocator, so ordering by id is a stable total order across replays.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter

from .errors import InvalidInput, UnknownNode


class NodeKind(str, Enum):
    INITIAL = "Initial"
    INTERMEDIATE = "Intermediate"
    OUTPUT = "Output"
    COMPOSITION_MARKER = "CompositionMarker"
    SPLIT_MARKER = "SplitMarker"


# Kinds that act as the attachment point for the next round of thoughts.
_FRONTIER_KINDS = frozenset(
    {NodeKind.OUTPUT, NodeKind.COMPOSITION_MARKER, NodeKind.SPLIT_MARKER}
)


@dataclass(frozen=True)
class ThoughtNode:
    id: int
    kind: NodeKind
    content: str
    producer: str
    turn: int


@dataclass(frozen=True)
class ThoughtEdge:
    src: int
    dst: int


class NodeIdAllocator:
    """Hands out run-scoped, monotonically increasing node ids."""

    def __init__(self, start: int = 0):
        self._counter = itertools.count(start)

    def next_id(self) -> int:
        return next(self._counter)


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


@dataclass
class ThoughtGraph:
    owner: str
    nodes: dict[int, ThoughtNode] = field(default_factory=dict)
    edges: list[ThoughtEdge] = field(default_factory=list)

    # ------------------------------------------------------------------
    # construction

    def add_node(self, node: ThoughtNode, parents: list[int]) -> int:
        """Insert ``node`` with an edge from every parent.

        Non-initial nodes must name at least one existing parent; initial
        nodes must name none.
        """
        if node.id in self.nodes:
            raise InvalidInput(f"duplicate node id {node.id}")
        if node.kind is NodeKind.INITIAL:
            if parents:
                raise InvalidInput("initial nodes take no parents")
        elif not parents:
            raise InvalidInput(f"{node.kind.value} node requires parents")
        for pid in parents:
            if pid not in self.nodes:
                raise UnknownNode(f"unknown parent {pid}")
        self.nodes[node.id] = node
        for pid in parents:
            self.edges.append(ThoughtEdge(src=pid, dst=node.id))
        return node.id

    # ------------------------------------------------------------------
    # queries

    def parents_of(self, node_id: int) -> list[int]:
        return [e.src for e in self.edges if e.dst == node_id]

    def children_of(self, node_id: int) -> list[int]:
        return [e.dst for e in self.edges if e.src == node_id]

    def nodes_of_kind(self, kind: NodeKind) -> list[ThoughtNode]:
        return sorted(
            (n for n in self.nodes.values() if n.kind is kind), key=lambda n: n.id
        )

    def collect_outputs(self, turn: int) -> list[ThoughtNode]:
        """All output nodes created at ``turn``, ordered by node id."""
        return sorted(
            (
                n
                for n in self.nodes.values()
                if n.kind is NodeKind.OUTPUT and n.turn == turn
            ),
            key=lambda n: n.id,
        )

    def frontier(self) -> list[int]:
        """Attachment point for the next round of thoughts.

        The most recent output or marker node if one exists, otherwise every
        initial node.
        """
        candidates = [n.id for n in self.nodes.values() if n.kind in _FRONTIER_KINDS]
        if candidates:
            return [max(candidates)]
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.INITIAL)

    def validate(self) -> ValidationReport:
        """Report cycles, dangling edges, self-loops, and parentless nodes."""
        violations: list[str] = []
        for e in self.edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                violations.append(f"dangling edge {e.src}->{e.dst}")
            if e.src == e.dst:
                violations.append(f"self-loop at node {e.src}")
        in_degree = {nid: 0 for nid in self.nodes}
        for e in self.edges:
            if e.dst in in_degree and e.src != e.dst:
                in_degree[e.dst] += 1
        for node in self.nodes.values():
            if node.kind is NodeKind.INITIAL:
                if in_degree[node.id] > 0:
                    violations.append(f"initial node {node.id} has parents")
            elif in_degree[node.id] == 0:
                violations.append(f"node {node.id} ({node.kind.value}) has no parents")
        if not any(v.startswith(("dangling", "self-loop")) for v in violations):
            ts = TopologicalSorter(
                {nid: self.parents_of(nid) for nid in self.nodes}
            )
            try:
                ts.prepare()
            except CycleError as exc:
                violations.append(f"cycle: {exc.args[1]}")
        return ValidationReport(ok=not violations, violations=violations)

    # ------------------------------------------------------------------
    # copies and serialization

    def copy(self) -> "ThoughtGraph":
        return ThoughtGraph(
            owner=self.owner, nodes=dict(self.nodes), edges=list(self.edges)
        )

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "content": n.content,
                    "producer": n.producer,
                    "turn": n.turn,
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": [{"from": e.src, "to": e.dst} for e in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ThoughtGraph":
        graph = cls(owner=data["owner"])
        for nd in data["nodes"]:
            graph.nodes[nd["id"]] = ThoughtNode(
                id=nd["id"],
                kind=NodeKind(nd["kind"]),
                content=nd["content"],
                producer=nd["producer"],
                turn=nd["turn"],
            )
        graph.edges = [ThoughtEdge(src=ed["from"], dst=ed["to"]) for ed in data["edges"]]
        return graph


def new_graph(
    owner: str,
    conditions: list[str],
    alloc: NodeIdAllocator,
    turn: int = 0,
) -> ThoughtGraph:
    """Fresh graph whose initial nodes are the given known conditions."""
    if not conditions:
        raise InvalidInput("a graph needs at least one initial condition")
    graph = ThoughtGraph(owner=owner)
    for text in conditions:
        node = ThoughtNode(
            id=alloc.next_id(),
            kind=NodeKind.INITIAL,
            content=text,
            producer=owner,
            turn=turn,
        )
        graph.add_node(node, parents=[])
    return graph


def append_round(
    graph: ThoughtGraph,
    alloc: NodeIdAllocator,
    producer: str,
    turn: int,
    thoughts: list[str],
    actions: list[str],
) -> list[ThoughtNode]:
    """Append one inference round: a chain of thoughts ending in output nodes.

    The first new node attaches to the graph frontier; outputs hang off the
    last thought (or directly off the frontier when the round produced none).
    Returns the created output nodes in id order.
    """
    parents = graph.frontier()
    for text in thoughts:
        node = ThoughtNode(
            id=alloc.next_id(),
            kind=NodeKind.INTERMEDIATE,
            content=text,
            producer=producer,
            turn=turn,
        )
        graph.add_node(node, parents=parents)
        parents = [node.id]
    outputs = []
    for text in actions:
        node = ThoughtNode(
            id=alloc.next_id(),
            kind=NodeKind.OUTPUT,
            content=text,
            producer=producer,
            turn=turn,
        )
        graph.add_node(node, parents=parents)
        outputs.append(node)
    return outputs
