import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoline.contact import (K_poly, adapted_frame_matrices, contact_form, frame_at, literal_C,
                             literal_P, local_geometry, shape_operator, unit_normal)
from isoline.surface import SCENARIOS, make_scenario

ALL = {name: make_scenario(name) for name in SCENARIOS}
N2 = [name for name, s in ALL.items() if s.n == 2]


def random_points(surface, k, seed):
    """k random (chart_id, u) pairs with nonzero partition weight."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        c = surface.charts[rng.integers(len(surface.charts))]
        u = c.lo + (c.hi - c.lo) * rng.uniform(0.02, 0.98, size=c.dim)
        if c.weight(u[None])[0] > 0:
            out.append((c.id, u))
    return out


def geometry_batch(surface, pts):
    qs, Ds, Hs, ors = [], [], [], []
    for cid, u in pts:
        c = surface.chart(cid)
        q, D, H = c.jets(u[None])
        qs.append(q[0]), Ds.append(D[0]), Hs.append(H[0]), ors.append(c.orientation)
    return local_geometry(surface.space, np.array(qs), np.array(Ds), np.array(Hs), np.array(ors))


@pytest.mark.parametrize("name", SCENARIOS)
def test_almost_contact_identities(name):
    s = ALL[name]
    g = geometry_batch(s, random_points(s, 100, 0))
    zeta = -s.space.apply_J0(g.N)
    z = np.einsum("...ij,...i->...j", g.E, zeta)         # zeta in the E basis; eta = z^T
    P = g.P
    d = P.shape[-1]
    # zeta is tangent
    assert np.abs(np.einsum("...i,...i->...", zeta, g.N)).max() < 1e-12
    assert np.abs(np.einsum("...ij,...j->...i", P, z)).max() < 1e-9          # P zeta = 0
    assert np.abs(np.einsum("...i,...i->...", z, z) - 1).max() < 1e-9         # eta(zeta) = 1
    assert np.abs(np.einsum("...i,...ij->...j", z, P)).max() < 1e-9           # eta o P = 0
    P2 = P @ P + np.eye(d) - z[..., :, None] * z[..., None, :]
    assert np.abs(P2).max() < 1e-9                                           # P^2 = -I + zeta (x) eta
    assert np.abs(P + np.swapaxes(P, -1, -2)).max() < 1e-12


def test_contact_form_is_eta():
    s = ALL["ellipsoid3"]
    rng = np.random.default_rng(5)
    for cid, u in random_points(s, 20, 1):
        f = frame_at(s, np.zeros(4), (cid, u))
        X = rng.normal(size=3)
        assert np.isclose(contact_form(s, np.zeros(4), (cid, u), X), X @ f.zeta_coords, atol=1e-12)
        assert np.isclose(contact_form(s, np.zeros(4), (cid, u), f.zeta_coords), 1.0)


@pytest.mark.parametrize("name", SCENARIOS)
def test_shape_operator_is_symmetric_and_weingarten(name):
    s = ALL[name]
    pts = random_points(s, 30, 2)
    g = geometry_batch(s, pts)
    assert g.skew_residual.max() < 1e-9
    # dN from the jets matches finite differences of N
    h = 1e-5
    for k, (cid, u) in enumerate(pts[:10]):
        c = s.chart(cid)
        for j in range(c.dim):
            e = np.zeros(c.dim)
            e[j] = h
            Np = unit_normal(c.jets((u + e)[None])[1], np.array([c.orientation]))[0]
            Nm = unit_normal(c.jets((u - e)[None])[1], np.array([c.orientation]))[0]
            assert np.allclose((Np - Nm) / (2 * h), g.dN[k][:, j], atol=1e-6)


@pytest.mark.parametrize("name,radius", [("circle", 2.0), ("sphere3", 0.5), ("sphere3", 3.0)])
def test_round_spheres_have_A_equal_identity_over_R(name, radius):
    s = make_scenario(name, radius=radius)
    g = geometry_batch(s, random_points(s, 20, 3))
    d = g.A.shape[-1]
    assert np.allclose(g.A, np.eye(d) / radius, atol=1e-10)


@pytest.mark.parametrize("name", SCENARIOS)
def test_K_polynomial_is_even(name):
    s = ALL[name]
    rng = np.random.default_rng(4)
    p = np.full(s.space.dim, 7.0)
    for s_ in random_points(s, 100, 4):
        t = rng.uniform(-10, 10)
        k1, k2 = K_poly(s, p, s_, t), K_poly(s, p, s_, -t)
        assert abs(k1 - k2) < 1e-9 * (1 + abs(k1))


@pytest.mark.parametrize("name", N2)
def test_n2_adapted_frame_closed_form(name):
    """In a frame (+-zeta, e, J0 e): P = 0 (+) rotation, det(A + tP) = a11 t^2 + det A."""
    s = ALL[name]
    rng = np.random.default_rng(6)
    p = np.full(4, 9.0)
    for s_ in random_points(s, 40, 6):
        for branch in (1, -1):
            af = adapted_frame_matrices(s, p, s_, branch)
            assert np.allclose(af.P, literal_P(2), atol=1e-12)
            t = rng.uniform(-5, 5)
            A = af.A
            assert abs(np.linalg.det(A + t * af.P) - (A[0, 0] * t * t + np.linalg.det(A))) < 1e-9
            # basis invariance: same polynomial in the QR tangent basis
            g = frame_at(s, p, s_).geometry
            assert np.isclose(np.linalg.det(g.A + t * g.P), np.linalg.det(A + t * af.P), atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_C_plus_C_minus_is_identity(n):
    Cp, Cm = literal_C(n, 1), literal_C(n, -1)
    d = 2 * n - 1
    assert np.abs(Cp @ Cm - np.eye(d)).max() < 1e-12
    assert np.abs(Cm @ Cp - np.eye(d)).max() < 1e-12
    assert abs(np.linalg.det(Cp) - 1) < 1e-12 and abs(np.linalg.det(Cm) - 1) < 1e-12


@pytest.mark.parametrize("name", SCENARIOS)
def test_numeric_C_matches_literal(name):
    s = ALL[name]
    for s_ in random_points(s, 10, 7):
        for branch in (1, -1):
            af = adapted_frame_matrices(s, np.full(s.space.dim, 5.0), s_, branch)
            assert np.abs(af.C - literal_C(s.n, branch)).max() < 1e-12


@given(st.floats(0.1, 10.0))
def test_shape_operator_scales_inversely(c):
    s = ALL["ellipsoid3"]
    sc = s.scaled_about(np.zeros(4), c)
    for s_ in random_points(s, 3, 8):
        A = shape_operator(s, np.zeros(4), s_)
        Ac = shape_operator(sc, np.zeros(4), s_)
        assert np.allclose(Ac, A / c, atol=1e-9 * (1 + np.abs(A).max() / c))
