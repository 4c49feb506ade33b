import json

import pytest

from cgot_sim import (
    InvalidInput,
    NodeIdAllocator,
    NodeKind,
    ThoughtGraph,
    ThoughtNode,
    UnknownNode,
    append_round,
    new_graph,
)


@pytest.fixture
def alloc():
    return NodeIdAllocator()


def _node(alloc, kind, content="x", producer="V1", turn=0):
    return ThoughtNode(alloc.next_id(), kind, content, producer, turn)


class TestNewGraph:
    def test_two_conditions(self, alloc):
        g = new_graph("V1", ["at PackageSite", "carrying nothing"], alloc)
        assert len(g.nodes_of_kind(NodeKind.INITIAL)) == 2
        assert g.edges == []

    def test_one_condition(self, alloc):
        g = new_graph("RB", ["at PackageSite"], alloc)
        assert len(g.nodes_of_kind(NodeKind.INITIAL)) == 1

    def test_empty_conditions_rejected(self, alloc):
        with pytest.raises(InvalidInput):
            new_graph("V1", [], alloc)

    def test_owner_recorded(self, alloc):
        assert new_graph("RB", ["c"], alloc).owner == "RB"


class TestAddNode:
    def test_intermediate_under_both_initials_has_in_degree_two(self, alloc):
        g = new_graph("V1", ["a", "b"], alloc)
        initials = g.nodes_of_kind(NodeKind.INITIAL)
        mid = _node(alloc, NodeKind.INTERMEDIATE)
        g.add_node(mid, parents=[n.id for n in initials])
        assert len(g.parents_of(mid.id)) == 2

    def test_output_under_intermediate_makes_path_of_two_edges(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        mid = _node(alloc, NodeKind.INTERMEDIATE)
        g.add_node(mid, parents=[root.id])
        out = _node(alloc, NodeKind.OUTPUT, content="Move(B1)")
        g.add_node(out, parents=[mid.id])
        # walk the chain Initial -> Intermediate -> Output
        assert g.children_of(root.id) == [mid.id]
        assert g.children_of(mid.id) == [out.id]

    def test_parentless_intermediate_rejected(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        with pytest.raises(InvalidInput):
            g.add_node(_node(alloc, NodeKind.INTERMEDIATE), parents=[])

    def test_unknown_parent_rejected(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        with pytest.raises(UnknownNode):
            g.add_node(_node(alloc, NodeKind.OUTPUT), parents=[999])

    def test_duplicate_id_rejected(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        clone = ThoughtNode(root.id, NodeKind.INTERMEDIATE, "x", "V1", 0)
        with pytest.raises(InvalidInput):
            g.add_node(clone, parents=[root.id])


class TestCollectOutputs:
    def test_initials_only_is_empty(self, alloc):
        g = new_graph("V1", ["a", "b"], alloc)
        assert g.collect_outputs(0) == []

    def test_single_chain_yields_single_output(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        mid = _node(alloc, NodeKind.INTERMEDIATE)
        g.add_node(mid, parents=[root.id])
        out = _node(alloc, NodeKind.OUTPUT, content="Move(B1)")
        g.add_node(out, parents=[mid.id])
        assert [n.content for n in g.collect_outputs(0)] == ["Move(B1)"]

    def test_filters_by_turn_and_orders_by_id(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        old = _node(alloc, NodeKind.OUTPUT, content="Wait()", turn=0)
        g.add_node(old, parents=[root.id])
        new_b = _node(alloc, NodeKind.OUTPUT, content="Move(B2)", turn=1)
        new_a = _node(alloc, NodeKind.OUTPUT, content="Move(B1)", turn=1)
        g.add_node(new_b, parents=[root.id])
        g.add_node(new_a, parents=[root.id])
        outputs = g.collect_outputs(1)
        assert [n.content for n in outputs] == ["Move(B2)", "Move(B1)"]
        assert [n.id for n in outputs] == sorted(n.id for n in outputs)
        # idempotent within a turn
        assert g.collect_outputs(1) == outputs


class TestValidate:
    def test_empty_graph_ok(self):
        assert ThoughtGraph("V1").validate().ok

    def test_fresh_graph_ok(self, alloc):
        assert new_graph("V1", ["a", "b"], alloc).validate().ok

    def test_self_loop_reported(self, alloc):
        from cgot_sim import ThoughtEdge

        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        g.edges.append(ThoughtEdge(root.id, root.id))
        report = g.validate()
        assert not report.ok
        assert any("self-loop" in v for v in report.violations)

    def test_cycle_reported(self, alloc):
        from cgot_sim import ThoughtEdge

        g = new_graph("V1", ["a"], alloc)
        root = g.nodes_of_kind(NodeKind.INITIAL)[0]
        mid = _node(alloc, NodeKind.INTERMEDIATE)
        g.add_node(mid, parents=[root.id])
        g.edges.append(ThoughtEdge(mid.id, root.id))
        report = g.validate()
        assert not report.ok
        assert any("cycle" in v for v in report.violations)

    def test_dangling_edge_reported(self, alloc):
        from cgot_sim import ThoughtEdge

        g = new_graph("V1", ["a"], alloc)
        g.edges.append(ThoughtEdge(1, 12345))
        report = g.validate()
        assert not report.ok
        assert any("dangling" in v for v in report.violations)

    def test_parentless_intermediate_reported(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        orphan = _node(alloc, NodeKind.INTERMEDIATE)
        g.nodes[orphan.id] = orphan  # bypass add_node's guard on purpose
        report = g.validate()
        assert not report.ok
        assert any("parent" in v for v in report.violations)


class TestAppendRound:
    def test_wires_thoughts_then_actions(self, alloc):
        g = new_graph("V1", ["a", "b"], alloc)
        outputs = append_round(
            g, alloc, "V1", 1, thoughts=["consider B1"], actions=["Move(B1)"]
        )
        assert [n.content for n in outputs] == ["Move(B1)"]
        assert g.validate().ok
        mids = g.nodes_of_kind(NodeKind.INTERMEDIATE)
        assert [n.content for n in mids] == ["consider B1"]
        # the output hangs off the turn's intermediate thought
        assert g.parents_of(outputs[0].id) == [mids[0].id]

    def test_actions_attach_to_frontier_without_thoughts(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        first = append_round(g, alloc, "V1", 0, thoughts=[], actions=["Wait()"])
        second = append_round(g, alloc, "V1", 1, thoughts=[], actions=["Move(B1)"])
        assert g.parents_of(second[0].id) == [first[0].id]

    def test_counts_monotone_over_rounds(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        sizes = [(len(g.nodes), len(g.edges))]
        for turn in range(4):
            append_round(g, alloc, "V1", turn, ["t"], ["Wait()"])
            sizes.append((len(g.nodes), len(g.edges)))
            assert g.validate().ok
        assert sizes == sorted(sizes)


class TestSerialization:
    def test_round_trip(self, alloc):
        g = new_graph("V1", ["a", "b"], alloc)
        append_round(g, alloc, "V1", 0, ["think"], ["Move(B1)"])
        clone = ThoughtGraph.from_dict(g.to_dict())
        assert clone.to_dict() == g.to_dict()
        assert clone.owner == "V1"
        assert json.loads(g.to_json())["owner"] == "V1"

    def test_copy_is_independent(self, alloc):
        g = new_graph("V1", ["a"], alloc)
        clone = g.copy()
        append_round(g, alloc, "V1", 0, [], ["Wait()"])
        assert len(clone.nodes) == 1
        assert len(g.nodes) == 2


class TestAllocator:
    def test_ids_strictly_increase(self, alloc):
        ids = [alloc.next_id() for _ in range(100)]
        assert ids == sorted(set(ids))
