import numpy as np
import pytest

from causalpaths import (
    CycleError,
    DuplicateEdge,
    DuplicateNode,
    InvalidName,
    SelfLoop,
    UnknownNode,
    bidirected,
    build_graph,
    directed,
    relatives,
    topological_order,
)
from tests.helpers import oracle_is_acyclic, oracle_reachable, random_dag

FIG4_EDGES = [directed("X", "Z"), directed("X", "Y"), directed("Z", "Y")]


def fig4():
    return build_graph(["X", "Y", "Z"], FIG4_EDGES)


def test_build_valid_triangle():
    g = fig4()
    assert g.nodes == ("X", "Y", "Z")
    assert len(g.edges) == 3


def test_two_cycle_rejected():
    with pytest.raises(CycleError) as exc:
        build_graph(["A", "B"], [directed("A", "B"), directed("B", "A")])
    assert "A" in str(exc.value) and "B" in str(exc.value)


def test_longer_cycle_listed_in_message():
    with pytest.raises(CycleError) as exc:
        build_graph(
            ["A", "B", "C", "D"],
            [directed("A", "B"), directed("B", "C"), directed("C", "A"), directed("A", "D")],
        )
    cycle = exc.value.cycle
    assert cycle[0] == cycle[-1]
    assert len(set(cycle[:-1])) == len(cycle) - 1 >= 3


def test_bidirected_edges_never_create_cycles():
    g = build_graph(
        ["SE1", "P1", "P2"],
        [bidirected("SE1", "P1"), directed("SE1", "P2"), directed("P1", "P2")],
    )
    assert len(g.bidirected_edges) == 1


def test_bidirected_is_canonical_under_swap():
    assert bidirected("B", "A") == bidirected("A", "B")
    with pytest.raises(DuplicateEdge):
        build_graph(["A", "B"], [bidirected("A", "B"), bidirected("B", "A")])


def test_validation_errors():
    with pytest.raises(SelfLoop):
        directed("X", "X")
    with pytest.raises(UnknownNode):
        build_graph(["X"], [directed("X", "Y")])
    with pytest.raises(DuplicateNode):
        build_graph(["X", "X"], [])
    with pytest.raises(DuplicateEdge):
        build_graph(["X", "Y"], [directed("X", "Y"), directed("X", "Y")])
    with pytest.raises(InvalidName):
        build_graph(["2bad"], [])


def test_directed_plus_bidirected_between_same_pair_is_allowed():
    g = build_graph(["X", "Y"], [directed("X", "Y"), bidirected("X", "Y")])
    assert len(g.edges) == 2


def test_graph_immutable():
    g = fig4()
    with pytest.raises(AttributeError):
        g.nodes = ()


def test_topological_order_fig4():
    assert topological_order(fig4()) == ["X", "Z", "Y"]


def test_topological_order_declaration_ties():
    g = build_graph(["B", "A"], [])
    assert topological_order(g) == ["B", "A"]


def test_relatives_fig4():
    g = fig4()
    assert relatives(g, "X", "descendants") == {"Z", "Y"}
    assert relatives(g, "Y", "parents") == {"X", "Z"}
    assert relatives(g, "Y", "children") == set()
    assert relatives(g, "Z", "ancestors") == {"X"}
    with pytest.raises(UnknownNode):
        relatives(g, "Q", "parents")
    with pytest.raises(ValueError):
        relatives(g, "X", "cousins")


def test_topological_order_random_graphs_against_edge_check():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        g = random_dag(rng, 6, p=0.5)
        order = topological_order(g)
        rank = {n: i for i, n in enumerate(order)}
        for e in g.directed_edges:
            assert rank[e.source] < rank[e.target]


def test_descendants_match_bruteforce_reachability():
    rng = np.random.default_rng(7)
    for _ in range(25):
        g = random_dag(rng, 6, p=0.45)
        for node in g.nodes:
            assert g.descendants(node) == oracle_reachable(g, node)


def test_ancestor_descendant_duality():
    rng = np.random.default_rng(77)
    for _ in range(20):
        g = random_dag(rng, 7, p=0.4)
        for u in g.nodes:
            for v in g.nodes:
                if u == v:
                    continue
                assert (v in g.descendants(u)) == (u in g.ancestors(v))


def test_cycle_detection_matches_bruteforce_on_all_4_node_digraphs():
    nodes = ["A", "B", "C", "D"]
    arcs = [(a, b) for a in nodes for b in nodes if a != b]
    accepted = rejected = 0
    for bits in range(2 ** len(arcs)):
        chosen = [arcs[i] for i in range(len(arcs)) if bits >> i & 1]
        expected = oracle_is_acyclic(nodes, chosen)
        try:
            build_graph(nodes, [directed(a, b) for a, b in chosen])
            built = True
        except CycleError:
            built = False
        assert built == expected, f"disagreement on arcs {chosen}"
        accepted += built
        rejected += not built
    assert accepted and rejected
