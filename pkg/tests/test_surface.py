import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoline.contact import unit_normal
from isoline.lines import self_intersections
from isoline.surface import (SCENARIOS, Axis, Chart, SurfaceError, make_scenario, partition_sum,
                             read_jet_table, write_jet_table)

ALL = [make_scenario(name) for name in SCENARIOS]


def _random_nodes(chart, rng, k=20):
    u = chart.lo + (chart.hi - chart.lo) * rng.uniform(0.05, 0.95, size=(k, chart.dim))
    return u


@pytest.mark.parametrize("surface", ALL, ids=SCENARIOS)
def test_first_derivatives_match_finite_differences(surface):
    """Central differences of q converge to D at second order."""
    rng = np.random.default_rng(1)
    for chart in surface.charts:
        u = _random_nodes(chart, rng)
        _, D, H = chart.jets(u)
        errs = []
        for h in (1e-2, 5e-3):
            cols = []
            for k in range(chart.dim):
                e = np.zeros(chart.dim)
                e[k] = h
                cols.append((chart.jets(u + e)[0] - chart.jets(u - e)[0]) / (2 * h))
            errs.append(np.abs(np.stack(cols, axis=-1) - D).max())
        assert errs[1] < 1e-4
        assert errs[1] < errs[0] / 3.0          # O(h^2)
        # second derivatives, same check on D
        h = 1e-4
        for k in range(chart.dim):
            e = np.zeros(chart.dim)
            e[k] = h
            fd = (chart.jets(u + e)[1] - chart.jets(u - e)[1]) / (2 * h)
            assert np.abs(fd - H[..., :, k]).max() < 1e-5
        assert np.allclose(H, np.swapaxes(H, -1, -2))


@pytest.mark.parametrize("surface", [s for s in ALL if s.embedded], ids=lambda s: s.name)
def test_partition_of_unity(surface):
    pts = surface.sample_points(12 if surface.n == 2 else 64)
    assert np.allclose(partition_sum(surface, pts), 1.0, atol=1e-12)


@pytest.mark.parametrize("surface", [s for s in ALL if s.embedded], ids=lambda s: s.name)
def test_normals_point_outward(surface):
    for chart, nodes, _, pu in surface.quadrature(8 if surface.n == 2 else 32):
        q, D, _ = chart.jets(nodes)
        N = unit_normal(D, np.full(len(nodes), chart.orientation))
        if surface.name == "tube_s1xs2":
            core = q.copy()
            core[:, [1, 3]] = 0.0
            core *= 2.0 / np.linalg.norm(core, axis=-1, keepdims=True)
            out = q - core
        else:
            out = q - surface.center
        assert np.all(np.sum(N * out, axis=-1) > 0)


def test_sphere_radius_and_center():
    c = (0.5, -1.0, 0.0, 2.0)
    s = make_scenario("sphere3", radius=1.7, center=c)
    for chart, nodes, _, _ in s.quadrature(10):
        q = chart.jets(nodes)[0]
        assert np.allclose(np.linalg.norm(q - np.array(c), axis=-1), 1.7)


def test_tube_lies_at_distance_r_from_core():
    s = make_scenario("tube_s1xs2", major_radius=3.0, minor_radius=0.7)
    pts = s.sample_points(10)
    rho = np.hypot(pts[:, 0], pts[:, 2])
    assert np.allclose(np.hypot(rho - 3.0, np.hypot(pts[:, 1], pts[:, 3])), 0.7)


def test_figure_eight_has_one_transversal_crossing():
    s = make_scenario("figure_eight")
    crossings = self_intersections(s)
    assert len(crossings) == 1
    _, _, point, sin = crossings[0]
    assert np.allclose(point, 0.0, atol=1e-2)
    assert sin > 0.5
    assert not self_intersections(make_scenario("circle"))


def test_chart_minimum_singular_value():
    for s in ALL:
        for chart in s.charts:
            nodes, _ = chart.grid(10 if s.n == 2 else 64, "seeds")
            D = chart.jets(nodes)[1]
            assert np.linalg.svd(D, compute_uv=False).min() > 0.1


def test_jet_table_round_trip(tmp_path):
    s = make_scenario("ellipsoid3")
    chart = s.charts[0]
    u = _random_nodes(chart, np.random.default_rng(3), 5)
    q, D, H = chart.jets(u)
    rows = [(chart.id, u[k], q[k], D[k], H[k]) for k in range(5)]
    path = tmp_path / "jets.txt"
    write_jet_table(path, rows)
    back = read_jet_table(path, 2)
    for a, b in zip(rows, back):
        assert a[0] == b[0]
        for x, y in zip(a[1:], b[1:]):
            assert np.array_equal(x, y)


def test_point_map_chart_matches_symbolic_jets():
    axes = (Axis(0.0, 2 * np.pi, True),)
    fd = Chart.from_point_map(0, axes, lambda u: np.stack([np.cos(u[..., 0]), np.sin(u[..., 0])], -1))
    exact = make_scenario("circle").charts[0]
    u = np.linspace(0.1, 6.0, 7)[:, None]
    for a, b in zip(fd.jets(u), exact.jets(u)):
        assert np.allclose(a, b, atol=1e-5)


@given(st.sampled_from(["circle", "sphere3"]), st.floats(0.2, 5.0))
def test_radius_scales_diameter(name, r):
    base = make_scenario(name).diameter
    assert np.isclose(make_scenario(name, radius=r).diameter, r * base, rtol=1e-9)


def test_scenario_errors():
    with pytest.raises(SurfaceError):
        make_scenario("torus")
    with pytest.raises(SurfaceError):
        make_scenario("tube_s1xs2", major_radius=1.0, minor_radius=1.5)
    with pytest.raises(SurfaceError):
        make_scenario("ellipsoid3", semi_axes=(1.0, 2.0))
    with pytest.raises(SurfaceError):
        make_scenario("circle", radius=-1.0)
    with pytest.raises(SurfaceError):
        make_scenario("circle").transformed(np.diag([1.0, -1.0]), np.zeros(2))


def test_off_surface_check():
    s = make_scenario("sphere3")
    with pytest.raises(SurfaceError):
        s.check_offsurface([0.0, 1.0, 0.0, 0.0])
    assert np.isclose(s.check_offsurface([0.0, 0.0, 3.0, 0.0]), 2.0)
