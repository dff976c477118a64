import numpy as np
import pytest

from ifsdyn.catalog import build_system, halving, identity, sierpinski, tent2
from ifsdyn.errors import EmptySetError, GridMismatchError
from ifsdyn.grid import GridSet, GridSpec
from ifsdyn.transition import build_graph, image_cells, reachable_set

from oracles import bfs_reach


def test_identity_self_loops():
    ifs = identity(2)
    grid = GridSpec.uniform(ifs.domain, 8)
    g = build_graph(ifs, grid, GridSet.full(grid))
    assert g.has_self_loop(np.arange(grid.ncells)).all()


def test_halving_edges_point_toward_zero():
    ifs = halving(1)
    grid = GridSpec.uniform(ifs.domain, 8)
    g = build_graph(ifs, grid, GridSet.full(grid))
    edges = g.edge_list()
    assert np.all(edges[:, 1] <= np.maximum(edges[:, 0], 1))
    assert g.has_self_loop(np.array([0]))[0]
    # brute force: cell c = [c/8, (c+1)/8] maps onto [c/16, (c+1)/16], padded by one cell
    for c in range(8):
        a, b = c / 16 - 1 / 8, (c + 1) / 16 + 1 / 8
        ref = [k for k in range(8) if (k + 1) / 8 > a and k / 8 < b]
        assert g.successors(c).tolist() == ref


def test_sierpinski_vertex_cells_loop():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 64)
    g = build_graph(ifs, grid, GridSet.full(grid))
    for k, v in enumerate([(0, 0), (1, 0), (0.5, np.sqrt(3) / 2)], start=1):
        c = int(grid.cell_of_point(v)[0])
        assert c in g.successors(c, map_index=k)


def test_image_cells_identity():
    ifs = identity(2)
    grid = GridSpec.uniform(ifs.domain, 9)
    cells = image_cells(ifs, grid, 1, 40, slack=0)
    assert 40 in cells
    assert set(cells.tolist()) <= {30, 31, 32, 39, 40, 41, 48, 49, 50}


def test_image_cells_homothety_radius():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 64)
    cell = int(grid.cell_of_point((1.0, 0.8))[0])
    cells = image_cells(ifs, grid, 1, cell, slack=0)
    lo, hi = grid.cell_boxes(np.array([cell]))
    img_lo, img_hi = lo[0] / 2, hi[0] / 2
    pad = 0.25 * grid.cell_diameter
    blo, bhi = grid.cell_boxes(cells)
    assert np.all(bhi >= img_lo - pad - 1e-12) and np.all(blo <= img_hi + pad + 1e-12)
    assert int(grid.cell_of_point(grid.centers([cell])[0] / 2)[0]) in cells


def test_image_cells_tent_interval():
    ifs = tent2(1.9, 1.5)
    grid = GridSpec.uniform(ifs.domain, 1000)
    h = grid.widths[0]
    cell = int(grid.cell_of_point(0.5 - h / 2)[0])
    pad = grid.cell_diameter
    cells = image_cells(ifs, grid, 1, cell, slack=pad)
    a, b = 0.95 - 1.9 * h - pad, 0.95 + pad
    ref = [k for k in range(1000) if (k + 1) * h > a + 1e-12 and k * h < b - 1e-12]
    assert cells.tolist() == ref


def test_image_cells_negative_slack():
    ifs = identity(1)
    with pytest.raises(ValueError):
        image_cells(ifs, GridSpec.uniform(ifs.domain, 4), 1, 0, slack=-1)


@pytest.mark.parametrize("name,res", [("sierpinski", 48), ("levitt_yoccoz", 48), ("logistic_triangle", 40),
                                      ("tent_sierpinski", 40), ("tent2", 500), ("buffer_zone", 300)])
def test_pointwise_soundness(name, res):
    ifs = build_system(name)
    grid = GridSpec.uniform(ifs.domain, res)
    g = build_graph(ifs, grid, GridSet.full(grid))
    rng = np.random.default_rng(7)
    cells = rng.choice(g.support_ids, size=10_000 // 6)
    lo, hi = grid.cell_boxes(cells)
    pts = grid.domain.project(lo + rng.random(lo.shape) * (hi - lo))
    owners = grid.cell_of_point(pts)
    for i, fmap in enumerate(ifs.maps, start=1):
        tgt = grid.cell_of_point(fmap(pts))
        for c, t in zip(owners, tgt):
            if grid.mask[t]:
                assert t in g.successors(c, i)


def test_explicit_and_symbolic_agree():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 32)
    sup = GridSet.from_predicate(grid, lambda p: np.hypot(*(p - 0.5).T) < 0.6)
    a = build_graph(ifs, grid, sup, eta=0.05, explicit=True)
    b = build_graph(ifs, grid, sup, eta=0.05, explicit=False)
    assert np.array_equal(a.edge_list(), b.edge_list())
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = rng.random(grid.ncells) < 0.05
        w = rng.random(grid.ncells) < 0.5
        for g in (a, b):
            ref_post = np.zeros(grid.ncells, bool)
            e = a.edge_list()
            ref_post[e[s[e[:, 0]], 1]] = True
            assert np.array_equal(g.post(s), ref_post)
            ref_pre = np.zeros(grid.ncells, bool)
            ref_pre[e[s[e[:, 1]], 0]] = True
            assert np.array_equal(g.pre(s), ref_pre)
            assert np.array_equal(g.pre(s, w), ref_pre & w)


@pytest.mark.parametrize("name,res", [("tent2", 400), ("sierpinski", 32)])
def test_edges_monotone_in_eta(name, res):
    ifs = build_system(name)
    grid = GridSpec.uniform(ifs.domain, res)
    prev = None
    for eta in (0.0, 0.02, 0.05):
        e = build_graph(ifs, grid, GridSet.full(grid), eta=eta).edge_list()
        cur = set(map(tuple, e.tolist()))
        if prev is not None:
            assert prev <= cur
        prev = cur


def test_build_is_deterministic():
    ifs = build_system("levitt_yoccoz")
    grid = GridSpec.uniform(ifs.domain, 40)
    a = build_graph(ifs, grid, GridSet.full(grid), eta=0.03).edge_list()
    b = build_graph(ifs, grid, GridSet.full(grid), eta=0.03).edge_list()
    assert np.array_equal(a, b)


def test_edges_stay_in_support():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 32)
    sup = GridSet.from_predicate(grid, lambda p: p[:, 0] < 0.5)
    e = build_graph(ifs, grid, sup, eta=0.1).edge_list()
    assert sup.bits[e[:, 0]].all() and sup.bits[e[:, 1]].all()


def test_build_errors():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 16)
    with pytest.raises(EmptySetError):
        build_graph(ifs, grid, GridSet.empty(grid))
    with pytest.raises(GridMismatchError):
        build_graph(ifs, grid, GridSet.full(GridSpec.uniform(ifs.domain, 8)))
    with pytest.raises(ValueError):
        build_graph(ifs, grid, GridSet.full(grid), eta=-1)


def test_reachable_set_matches_bfs():
    ifs = halving(2)
    grid = GridSpec.uniform(ifs.domain, 16)
    g = build_graph(ifs, grid, GridSet.full(grid), eta=0.0)
    succ = {}
    for a, b in g.edge_list().tolist():
        succ.setdefault(a, set()).add(b)
    rng = np.random.default_rng(5)
    for _ in range(10):
        start = rng.choice(grid.ncells, size=3, replace=False)
        res = reachable_set(g, GridSet.from_ids(grid, start))
        assert res.converged
        assert set(res.cells.ids.tolist()) == bfs_reach(succ, set(start.tolist()))
        assert 0 in res.cells


def test_reachable_set_trivial_cases():
    ifs = halving(1)
    grid = GridSpec.uniform(ifs.domain, 20)
    g = build_graph(ifs, grid, GridSet.full(grid))
    assert reachable_set(g, GridSet.empty(grid)).cells.is_empty
    assert reachable_set(g, GridSet.full(grid)).cells == GridSet.full(grid)
    one = reachable_set(g, GridSet.from_ids(grid, [19]), steps=1)
    more = reachable_set(g, GridSet.from_ids(grid, [19]), steps=3)
    assert one.cells.issubset(more.cells) and not one.converged
