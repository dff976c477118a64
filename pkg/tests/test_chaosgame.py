import numpy as np
import pytest

from ifsdyn.attractor import global_attractor
from ifsdyn.catalog import disc_region, identity, sierpinski, tent2
from ifsdyn.chaingraph import chain_graph, recurrent_set
from ifsdyn.chaosgame import (
    OrbitConfig,
    bifurcation_sweep,
    choices,
    family_system,
    largest_gap,
    orbit_tail_set,
    random_orbit,
    splitmix64,
    tail_histogram,
    uniforms,
)
from ifsdyn.errors import ConfigurationError
from ifsdyn.grid import GridSet, GridSpec, dilate, directed_distance
from ifsdyn.maps import Domain
from ifsdyn.transition import build_graph


def test_splitmix_reference_values():
    # first outputs of the reference generator seeded with 0
    assert int(splitmix64(0, np.array([0]))[0]) == 0xE220A8397B1DCDAF
    assert int(splitmix64(0, np.array([1]))[0]) == 0x6E789E6AA1B965F4


def test_uniforms_are_counter_based():
    whole = uniforms(9, 0, 100)
    assert np.array_equal(whole[40:60], uniforms(9, 40, 20))
    assert np.all((whole >= 0) & (whole < 1))


def test_choices_follow_weights():
    cfg = OrbitConfig(0.5, total=10, burn=0, seed=1, weights=(1.0, 3.0))
    picks = choices(cfg, 2, 0, 40_000)
    assert abs(np.mean(picks == 1) - 0.75) < 0.01


def test_bad_orbit_configs():
    with pytest.raises(ConfigurationError):
        OrbitConfig(0.5, total=10, burn=10)
    with pytest.raises(ConfigurationError):
        OrbitConfig(0.5, weights=(1.0, -1.0))
    with pytest.raises(ConfigurationError):
        OrbitConfig(0.5, weights=(1.0,)).cumulative(2)


def test_orbit_is_deterministic():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 128)
    cfg = OrbitConfig((0.3, 0.3), total=20_000, burn=100, seed=5)
    assert random_orbit(ifs, cfg, grid).cells == random_orbit(ifs, cfg, grid).cells
    other = OrbitConfig((0.3, 0.3), total=20_000, burn=100, seed=6)
    assert random_orbit(ifs, other, grid).cells != random_orbit(ifs, cfg, grid).cells


def test_identity_orbit_stays_in_one_cell():
    ifs = identity(2)
    grid = GridSpec.uniform(ifs.domain, 50)
    res = random_orbit(ifs, OrbitConfig((0.41, 0.77), total=1000, burn=0), grid)
    assert len(res.cells) == 1 and not res.escaped
    assert res.cells == GridSet.from_points(grid, (0.41, 0.77))


def test_start_outside_domain_rejected():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 32)
    with pytest.raises(ConfigurationError):
        random_orbit(ifs, OrbitConfig((5.0, 5.0), total=10, burn=0), grid)


def test_sierpinski_tail_lies_near_attractor():
    ifs = sierpinski()
    grid = GridSpec.uniform(ifs.domain, 128)
    att = global_attractor(ifs, disc_region(grid)).cells
    tail = orbit_tail_set(ifs, OrbitConfig((0.3, 0.3), total=50_000, burn=100, seed=2), grid)
    assert tail.issubset(dilate(att, 2 * grid.cell_diameter))
    assert directed_distance(att, tail) <= 2 * grid.cell_diameter


def test_tent_tail_meets_weak_recurrent_set():
    ifs = tent2(1.9, 1.5)
    grid = GridSpec(ifs.domain, (2000,))
    cg = chain_graph(build_graph(ifs, grid, GridSet.full(grid), eta=0.0))
    rec = recurrent_set(cg, "weak")
    tail = orbit_tail_set(ifs, OrbitConfig(0.3, total=20_000, burn=1000, seed=4), grid)
    assert not (tail & rec).is_empty
    assert tail.issubset(dilate(rec, 2 * grid.cell_diameter))


def test_tail_histogram_matches_orbit_cells():
    ifs = tent2(1.9, 1.5)
    bins = GridSpec(ifs.domain, (500,))
    cfg = OrbitConfig(0.3, total=5000, burn=100, seed=8)
    counts = tail_histogram(ifs, cfg, bins)
    assert counts.sum() == 4900
    assert np.array_equal(counts > 0, random_orbit(ifs, cfg, bins).cells.bits)


def test_sweep_is_deterministic_and_shaped():
    bins = GridSpec(Domain.interval(0, 1), (200,))
    cfg = OrbitConfig(0.3, total=2000, burn=200, seed=7)
    a = bifurcation_sweep("tent2_fixed_second", (1.0, 2.0), 16, cfg, bins, second=np.sqrt(2))
    b = bifurcation_sweep("tent2_fixed_second", (1.0, 2.0), 16, cfg, bins, second=np.sqrt(2))
    assert a.counts.shape == (16, 200)
    assert np.array_equal(a.counts, b.counts)
    assert np.all(a.counts.sum(axis=1) == 1800)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "param,bin_lo,bin_hi,count"


def test_sweep_rows_follow_scalar_orbits():
    bins = GridSpec(Domain.interval(0, 1), (100,))
    cfg = OrbitConfig(0.3, total=3000, burn=300, seed=11)
    sweep = bifurcation_sweep("logistic2_fixed_second", (2.5, 3.5), 5, cfg, bins, second=3.0)
    seeds = splitmix64(11, np.arange(5, dtype=np.uint64))
    for j, p in enumerate(sweep.params):
        ifs = family_system("logistic2_fixed_second", float(p), 3.0)
        ref = tail_histogram(ifs, OrbitConfig(0.3, total=3000, burn=300, seed=int(seeds[j])), bins)
        assert np.array_equal(sweep.counts[j], ref)


def test_zero_width_sweep_has_one_row():
    bins = GridSpec(Domain.interval(0, 1), (50,))
    cfg = OrbitConfig(0.3, total=500, burn=50)
    sweep = bifurcation_sweep("logistic1", (2.8, 2.8), 10, cfg, bins)
    assert len(sweep.params) == 1 and sweep.counts.shape == (1, 50)


def test_single_map_logistic_fixed_point():
    bins = GridSpec(Domain.interval(0, 1), (1000,))
    cfg = OrbitConfig(0.3, total=3000, burn=2000)
    sweep = bifurcation_sweep("logistic1", (2.5, 2.5), 1, cfg, bins)
    occupied = np.flatnonzero(sweep.occupied[0])
    assert len(occupied) == 1
    assert abs(bins.centers(occupied)[0, 0] - 0.6) <= bins.widths[0]


def test_sweep_argument_checks():
    bins = GridSpec(Domain.interval(0, 1), (50,))
    cfg = OrbitConfig(0.3, total=100, burn=10)
    with pytest.raises(ConfigurationError):
        bifurcation_sweep("unknown", (0, 1), 4, cfg, bins)
    with pytest.raises(ConfigurationError):
        bifurcation_sweep("logistic1", (0, 5), 4, cfg, bins)
    with pytest.raises(ConfigurationError):
        bifurcation_sweep("logistic1", (1, 2), 1, cfg, bins)
    with pytest.raises(ConfigurationError):
        bifurcation_sweep("logistic2_fixed_second", (1, 2), 4, cfg, bins)
    with pytest.raises(ConfigurationError):
        bifurcation_sweep("logistic1", (1, 2), 4, cfg, GridSpec.uniform(Domain.box(0, 0, 1, 1), 4))


def test_largest_gap():
    occ = np.zeros(20, dtype=bool)
    occ[[2, 3, 9, 10, 17]] = True
    assert largest_gap(occ) == (11, 6)
    assert largest_gap(np.zeros(5, dtype=bool)) == (0, 0)
    assert largest_gap(np.ones(5, dtype=bool)) == (0, 0)
