import numpy as np
import pytest
from scipy import sparse

from ifsdyn.attractor import global_attractor, h_invariance_defect
from ifsdyn.catalog import build_system, disc_region, halving, identity, tent2, tent_landmarks
from ifsdyn.chaingraph import (
    chain_graph,
    condense,
    connectivity,
    inventory_csv,
    node_edges,
    recurrent_set,
    scc_forward_backward,
    scc_matrix,
    to_dot,
)
from ifsdyn.errors import EmptySetError
from ifsdyn.grid import GridSet, GridSpec, hausdorff_distance
from ifsdyn.transition import build_graph

from oracles import partition_of, scc_partition, transitive_closure


def random_digraph(rng, n=None):
    n = n or int(rng.integers(1, 201))
    p = float(rng.uniform(0.2, 3.0)) / n
    adj = rng.random((n, n)) < p
    return adj


def fb_labels(adj: np.ndarray) -> np.ndarray:
    mat = sparse.csr_matrix(adj.astype(np.int8))
    mat_t = mat.T.tocsr()

    def post(s):
        return mat_t @ s.astype(np.int8) > 0

    def pre(s, within=None):
        out = mat @ s.astype(np.int8) > 0
        return out if within is None else out & within

    return scc_forward_backward(post, pre, np.ones(len(adj), dtype=bool))


def test_scc_routes_match_closure_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        adj = random_digraph(rng)
        ref = scc_partition(adj)
        assert partition_of(scc_matrix(sparse.csr_matrix(adj))) == ref
        assert partition_of(fb_labels(adj)) == ref


def test_scc_labels_numbered_by_smallest_member():
    rng = np.random.default_rng(12)
    adj = random_digraph(rng, 60)
    for labels in (scc_matrix(sparse.csr_matrix(adj)), fb_labels(adj)):
        firsts = [np.flatnonzero(labels == k)[0] for k in range(labels.max() + 1)]
        assert firsts == sorted(firsts)


def test_scc_trivial_graphs():
    assert partition_of(scc_matrix(sparse.eye(5, format="csr"))) == [frozenset([k]) for k in range(5)]
    cycle = np.roll(np.eye(8, dtype=bool), 1, axis=1)
    assert scc_matrix(sparse.csr_matrix(cycle)).tolist() == [0] * 8
    assert fb_labels(cycle).tolist() == [0] * 8


def test_condensation_partitions_support_and_is_acyclic():
    ifs = build_system("sierpinski")
    grid = GridSpec.uniform(ifs.domain, 40)
    g = build_graph(ifs, grid, disc_region(grid), eta=0.02)
    cg = condense(g)
    sizes = cg.component_sizes()
    assert sizes.sum() == len(g.support) and np.all(sizes > 0)
    e = cg.condensation_edges
    adj = np.zeros((cg.ncomponents, cg.ncomponents), dtype=bool)
    adj[e[:, 0], e[:, 1]] = True
    assert not np.diag(transitive_closure(adj)).any()


def test_symbolic_condense_matches_explicit():
    ifs = build_system("levitt_yoccoz")
    grid = GridSpec.uniform(ifs.domain, 32)
    a = condense(build_graph(ifs, grid, GridSet.full(grid), eta=0.03, explicit=True))
    b = condense(build_graph(ifs, grid, GridSet.full(grid), eta=0.03, explicit=False))
    assert np.array_equal(a.labels, b.labels)


@pytest.fixture(scope="module")
def tent_graph():
    ifs = tent2(1.9, 1.5)
    grid = GridSpec.uniform(ifs.domain, 2000)
    return chain_graph(build_graph(ifs, grid, GridSet.full(grid)))


def test_tent_two_strong_nodes_one_edge(tent_graph):
    cg = tent_graph
    grid = cg.grid
    strong = cg.nodes("strong")
    assert len(strong) == 2
    zero = cg.node_of(int(grid.cell_of_point(0.0)[0]))
    other = [k for k in strong if k != zero][0]
    marks = tent_landmarks(1.9, 1.5)
    lo, hi = cg.node_set(other).span()
    tol = 3 * grid.widths[0] * (1 + 1e-9)
    assert abs(lo[0] - marks["ell"]) <= tol and abs(hi[0] - marks["c1"]) <= tol
    assert node_edges(cg, "strong") == [(zero, other)]
    assert connectivity(cg, "strong").connected


def test_tent_components_below_ell_are_transient(tent_graph):
    cg = tent_graph
    grid = cg.grid
    classes = cg.component_classes()
    for x in (0.02, 0.04, 0.06):
        assert classes[cg.component_of(int(grid.cell_of_point(x)[0]))] == 0


def test_buffer_zone_graphs():
    ifs = build_system("buffer_zone")
    grid = GridSpec.uniform(ifs.domain, 600)
    cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid)))
    node = {x: cg.node_of(int(grid.cell_of_point(x)[0])) for x in (0.0, 1.0, 2.0, 3.0)}
    assert node[1.0] == node[2.0] is not None
    assert sorted(cg.nodes("strong")) == sorted([node[0.0], node[3.0]])
    assert not cg.node(node[1.0]).strong
    assert node_edges(cg, "strong") == []
    conn = connectivity(cg, "strong")
    assert not conn.connected and conn.families == [[node[0.0]], [node[3.0]]]
    assert sorted(node_edges(cg, "weak")) == sorted([(node[1.0], node[0.0]), (node[1.0], node[3.0])])
    assert connectivity(cg, "weak").connected


def test_single_contraction():
    ifs = halving(1)
    grid = GridSpec.uniform(ifs.domain, 64)
    cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid)))
    assert cg.nodes("weak") == cg.nodes("strong") == [0]
    cells = cg.node(0).cells
    assert 0 in cells and len(cells) <= 2
    assert connectivity(cg, "strong").connected


def test_identity_everything_recurrent():
    ifs = identity(2)
    grid = GridSpec.uniform(ifs.domain, 16)
    cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid)))
    assert recurrent_set(cg, "weak") == GridSet.full(grid)


@pytest.mark.parametrize("name,res", [("tent2", 800), ("sierpinski", 48)])
def test_recurrent_sets_monotone_in_eta(name, res):
    ifs = build_system(name)
    grid = GridSpec.uniform(ifs.domain, res)
    prev = None
    for eta in (0.0, 0.02, 0.05):
        cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid), eta=eta))
        cur = {w: recurrent_set(cg, w) for w in ("weak", "strong")}
        if prev is not None:
            for w in cur:
                assert prev[w].issubset(cur[w])
        prev = cur


def test_strong_nodes_are_h_invariant():
    ifs = build_system("sierpinski")
    grid = GridSpec.uniform(ifs.domain, 64)
    cg = chain_graph(build_graph(ifs, grid, disc_region(grid), eta=0.0))
    assert len(cg.nodes("strong")) == 1
    for k in cg.nodes("strong"):
        assert h_invariance_defect(ifs, cg.node_set(k)) <= 2 * grid.cell_diameter


def test_restriction_to_attractor_keeps_strong_nodes():
    ifs = tent2(1.9, 1.5)
    grid = GridSpec.uniform(ifs.domain, 2000)
    full = chain_graph(build_graph(ifs, grid, GridSet.full(grid)))
    att = global_attractor(ifs, GridSet.full(grid)).cells
    sub = chain_graph(build_graph(ifs, grid, att))
    a = [full.node_set(k) for k in full.nodes("strong")]
    b = [sub.node_set(k) for k in sub.nodes("strong")]
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert hausdorff_distance(x, y) <= 2 * grid.cell_diameter


def test_exports(tent_graph):
    csv_text = inventory_csv(tent_graph)
    rows = csv_text.strip().splitlines()
    assert rows[0] == "node,class,cells,core_cells,components,bbox"
    assert [r.split(",")[1] for r in rows[1:]] == ["strong_node", "strong_node"]
    dot = to_dot(tent_graph, "strong")
    assert dot.startswith('digraph "strong_nodes" {') and "node0 -> node1;" in dot
    assert to_dot(tent_graph, "strong") == dot


def test_node_edge_views():
    ifs = build_system("buffer_zone")
    grid = GridSpec.uniform(ifs.domain, 300)
    cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid)))
    closure = set(node_edges(cg, "weak", "closure"))
    reduction = set(node_edges(cg, "weak", "reduction"))
    assert reduction <= closure
    with pytest.raises(ValueError):
        node_edges(cg, "weak", "sideways")


def test_connectivity_needs_nodes():
    ifs = build_system("tent2")
    grid = GridSpec.uniform(ifs.domain, 200)
    cg = chain_graph(build_graph(ifs, grid, GridSet.interval(grid, 0.3, 0.35)))
    if not cg.nodes("strong"):
        with pytest.raises(EmptySetError):
            connectivity(cg, "strong")
