import numpy as np
import pytest

from eqfam.errors import NotSimplicial, UnsupportedDimension
from eqfam.gcomplex import (
    Chain,
    Cochain,
    attach_action,
    build_sphere_complex,
    chain_equal,
    cnz_domains_s3,
    coordinate_circle_s3,
    d,
    delta,
    equator_sphere_s3,
    halfspace_domains_s3,
    hemisphere_domains_s2,
    pair,
    sort_parity,
    total_D,
    z2z2_domains_s3,
)
from eqfam.equivariant import GroupData
from eqfam.models import group_rep


def z2_antipodal_group(d):
    table = {("e", "e"): "e", ("e", "s"): "s", ("s", "e"): "s", ("s", "s"): "e"}
    return GroupData.direct(["e", "s"], {"e": 1, "s": 1}, table,
                            u={"e": np.eye(1), "s": np.eye(1)},
                            param={"e": np.eye(d), "s": -np.eye(d)})


def test_cross_polytope_counts():
    cx = build_sphere_complex(3, 0)
    assert cx.n_simplices(0) == 8 and cx.n_simplices(3) == 16
    cx = build_sphere_complex(2, 1)
    assert cx.n_simplices(0) == 18 and cx.n_simplices(2) == 32
    # Euler characteristic of S^2
    assert cx.n_simplices(0) - cx.n_simplices(1) + cx.n_simplices(2) == 2


def test_refined_16cell_recount():
    """Independent recount: 16 * 8^r tetrahedra, every triangle shared by two."""
    cx = build_sphere_complex(3, 2)
    assert cx.n_simplices(3) == 16 * 8 ** 2 == 1024
    incidence = {}
    for t in cx.simplices[3]:
        for j in range(4):
            f = t[:j] + t[j + 1:]
            incidence[f] = incidence.get(f, 0) + 1
    assert set(incidence.values()) == {2}
    assert len(incidence) == cx.n_simplices(2)
    # S^3 Euler characteristic vanishes
    assert (cx.n_simplices(0) - cx.n_simplices(1)
            + cx.n_simplices(2) - cx.n_simplices(3)) == 0


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        build_sphere_complex(4, 0)


def test_global_orientation_closes():
    for dim, r in [(1, 2), (2, 1), (3, 1)]:
        cx = build_sphere_complex(dim, r)
        assert cx.top_chain().boundary().is_zero()


def test_attach_identity_and_antipodal():
    cx = build_sphere_complex(3, 0)
    grp = z2_antipodal_group(4)
    cxa = attach_action(cx, grp)
    assert np.array_equal(cxa.perms["e"], np.arange(8))
    perm = cxa.perms["s"]
    assert np.all(perm != np.arange(8))  # fixed-point free on all 8 vertices


def test_attach_c4z_coordinate_match():
    two_s = 1
    cx = build_sphere_complex(3, 1)
    grp = GroupData.generate({"Q4z": group_rep("Q4z", two_s)})
    cxa = attach_action(cx, grp)
    mat = grp.param["Q4z"]
    perm = cxa.perms["Q4z"]
    # direct coordinate matching oracle
    for i, v in enumerate(cxa.vertices):
        assert np.linalg.norm(mat @ v - cxa.vertices[perm[i]]) < 1e-9
    # composition consistency (gh) v = g (h v) on all vertices
    q2 = grp.mul("Q4z", "Q4z")
    assert np.array_equal(perm[perm], cxa.perms[q2])


def test_attach_rejects_non_isometry():
    cx = build_sphere_complex(2, 0)
    bad = GroupData.direct(
        ["e", "r"], {"e": 1, "r": 1},
        {("e", "e"): "e", ("e", "r"): "r", ("r", "e"): "r", ("r", "r"): "e"},
        u={"e": np.eye(1), "r": np.eye(1)},
        param={"e": np.eye(3), "r": np.array(
            [[np.cos(0.3), -np.sin(0.3), 0], [np.sin(0.3), np.cos(0.3), 0], [0, 0, 1]]
        )})
    with pytest.raises(NotSimplicial):
        attach_action(cx, bad)


def test_boundary_of_triangle():
    cx = build_sphere_complex(2, 0)
    tri = cx.simplices[2][0]
    b = Chain(cx, 2).add(tri).boundary()
    t0, t1, t2 = tri
    assert b.data == {(t1, t2): 1, (t0, t2): -1, (t0, t1): 1}


def test_boundary_squared_zero_integer():
    cx = build_sphere_complex(3, 1)
    rng = np.random.default_rng(0)
    c = Chain(cx, 3)
    for s in rng.choice(len(cx.simplices[3]), size=40, replace=False):
        c.add(cx.simplices[3][s], int(rng.integers(-3, 4)))
    assert c.boundary().boundary().is_zero()


def test_closed_loop_boundary_empty():
    cx = build_sphere_complex(1, 1)
    assert cx.top_chain().boundary().is_zero()


def test_orientation_reversal_negates():
    cx = build_sphere_complex(2, 0)
    tri = cx.simplices[2][0]
    f = Cochain(cx, 0, 2)
    f.set((), tri, 0.7)
    t0, t1, t2 = tri
    assert f.ev((), (t1, t0, t2)) == pytest.approx(-0.7)
    stup, sign = sort_parity((t1, t0, t2))
    assert stup == tri and sign == -1


def _attached_polygon(refinements=2):
    cx = build_sphere_complex(1, refinements)
    grp = z2_antipodal_group(2)
    return attach_action(cx, grp), grp


def test_d_constant_and_dd_zero():
    cx, grp = _attached_polygon()
    f = Cochain(cx, 0, 0, grp)
    for v in cx.simplices[0]:
        f.set((), v, 1.23)
    assert d(f).max_abs() == 0.0
    rng = np.random.default_rng(1)
    g = Cochain(cx, 1, 0, grp)
    for lbl in grp.labels:
        for v in cx.simplices[0]:
            g.set((lbl,), v, float(rng.integers(-5, 6)))
    assert d(d(g)).max_abs() == 0.0


def test_delta_formulas_and_identities():
    cx, grp = _attached_polygon()
    rng = np.random.default_rng(2)
    # (delta f)_g(tau) = f(tau) - f(g tau) for unitary g on a (0,0)-cochain
    f = Cochain(cx, 0, 0, grp)
    vals = rng.normal(size=cx.n_simplices(0))
    for (v,) in cx.simplices[0]:
        f.set((), (v,), vals[v])
    df = delta(f)
    perm = cx.perms["s"]
    for (v,) in cx.simplices[0]:
        assert df.ev(("s",), (v,)) == pytest.approx(vals[v] - vals[perm[v]])
    # delta delta = 0 and d delta = delta d on a random (1,1)-cochain
    h = Cochain(cx, 1, 1, grp)
    for lbl in grp.labels:
        for e in cx.simplices[1]:
            h.set((lbl,), e, rng.normal())
    assert delta(delta(h)).max_abs() < 1e-12
    h0 = Cochain(cx, 1, 0, grp)
    for lbl in grp.labels:
        for v in cx.simplices[0]:
            h0.set((lbl,), v, rng.normal())
    assert (d(delta(h0)) - delta(d(h0))).max_abs() < 1e-12


def test_total_differential():
    cx, grp = _attached_polygon()
    rng = np.random.default_rng(3)
    chi = Cochain(cx, 0, 0, grp)
    for v in cx.simplices[0]:
        chi.set((), v, rng.normal())
    Dchi = total_D([chi])
    assert Dchi[0].max_abs() > 0 and len(Dchi) == 2
    # D of zero is zero
    zero = Cochain(cx, 0, 0, grp)
    assert all(c.max_abs() == 0 for c in total_D([zero]))
    # DD = 0 on a random total 1-cochain
    f01 = Cochain(cx, 0, 1, grp)
    for e in cx.simplices[1]:
        f01.set((), e, rng.normal())
    f10 = Cochain(cx, 1, 0, grp)
    for lbl in grp.labels:
        for v in cx.simplices[0]:
            f10.set((lbl,), v, rng.normal())
    DD = total_D(total_D([f01, f10]))
    assert all(c.max_abs() < 1e-12 for c in DD)


def test_pair_linearity_and_bruteforce():
    cx, grp = _attached_polygon()
    rng = np.random.default_rng(4)
    f = Cochain(cx, 0, 1, grp)
    for e in cx.simplices[1]:
        f.set((), e, rng.normal())
    empty = Chain(cx, 1)
    assert pair(f, (), empty) == 0.0
    c = Chain(cx, 1)
    expected = 0.0
    for e in cx.simplices[1][:5]:
        k = int(rng.integers(-2, 3))
        c.add(e, k)
        expected += k * f.ev((), e)
    assert pair(f, (), c) == pytest.approx(expected)
    assert pair(f, (), -c) == pytest.approx(-expected)


def test_group_action_commutes_with_boundary():
    cx = build_sphere_complex(3, 1)
    grp = GroupData.generate({n: group_rep(n, 1) for n in ("T", "C2x")})
    cxa = attach_action(cx, grp)
    rng = np.random.default_rng(5)
    c = Chain(cxa, 3)
    for i in rng.choice(len(cxa.simplices[3]), size=20, replace=False):
        c.add(cxa.simplices[3][i], int(rng.integers(-2, 3)))
    for g in grp.labels:
        assert chain_equal(c.transform(g).boundary(), c.boundary().transform(g))


def test_hemisphere_domains_s2():
    cx = build_sphere_complex(2, 0)
    grp = z2_antipodal_group(3)
    cxa = attach_action(cx, grp)
    doms = hemisphere_domains_s2(cxa, "s")
    assert len(doms["D"].data) == 4  # octahedron upper hemisphere
    eq = doms["D"].boundary()
    assert len(eq.data) == 4 and eq.boundary().is_zero()
    assert chain_equal(eq, doms["C"] + doms["C"].transform("s"))


def test_s3_halfspace_domain_identities():
    cx = build_sphere_complex(3, 1)
    # free antipodal action: dD3 = D2 - sD2, dD2 = D1 + sD1 (the form the
    # S^3 Z2 invariant needs)
    grp_s = GroupData.direct(
        ["e", "s"], {"e": 1, "s": -1},
        {("e", "e"): "e", ("e", "s"): "s", ("s", "e"): "s", ("s", "s"): "e"},
        u={"e": np.eye(1), "s": np.eye(1)},
        param={"e": np.eye(4), "s": -np.eye(4)})
    cxs = attach_action(cx, grp_s)
    doms = halfspace_domains_s3(cxs, "s")
    assert doms.signs == {"s2": -1, "s1": 1}
    assert chain_equal(doms["D3"].boundary(),
                       doms["D2"] - doms["D2"].transform("s"))
    b = doms["D1"].boundary()
    assert b.data == {(doms["P-"],): 1, (doms["P+"],): -1}
    assert np.allclose(cxs.vertices[doms["P+"]], [1, 0, 0, 0])
    # time reversal reverses the ambient orientation, flipping both signs
    grp_t = GroupData.generate({"T": group_rep("T", 1)})
    cxt = attach_action(cx, grp_t)
    doms_t = halfspace_domains_s3(cxt, "T")
    assert doms_t.signs == {"s2": 1, "s1": -1}


def test_s3_cnz_and_z2z2_domains():
    cx = build_sphere_complex(3, 1)
    grp = GroupData.generate({n: group_rep(n, 1) for n in ("C2x", "C2y")})
    grp4 = GroupData.generate({"Q4z": group_rep("Q4z", 1)})
    cxa = attach_action(attach_action(cx, grp), grp4)
    doms = cnz_domains_s3(cxa, "Q4z", 4)
    assert len(doms["D3"].data) == cxa.n_simplices(3) // 4
    assert doms["circle"].boundary().is_zero()
    doms2 = cnz_domains_s3(cxa, grp.mul("C2x", "C2y"), 2)
    assert len(doms2["D3"].data) == cxa.n_simplices(3) // 2
    z = z2z2_domains_s3(cxa, "C2x", "C2y")
    assert len(z["D3"].data) == cxa.n_simplices(3) // 4
    # the three arcs share endpoints P+-
    for k in ("D1_p00", "D1_0p0", "D1_00p"):
        ends = {v[0] for v in z[k].boundary().data}
        assert ends == {z["P+"], z["P-"]}


def test_equator_sphere_and_circle():
    cx = build_sphere_complex(3, 1)
    sphere = equator_sphere_s3(cx)
    assert sphere.boundary().is_zero()
    assert all(abs(cx.barycenter(s)[3]) < 1e-12 for s, _ in sphere.items())
    loop = coordinate_circle_s3(cx, (2, 3))
    assert loop.boundary().is_zero()
    assert all(np.hypot(*cx.barycenter(s)[[2, 3]]) < 1e-12 for s, _ in loop.items())


def test_subdivision_keeps_symmetry():
    """The vertex-permutation action stays well-defined after refinement."""
    for r in (0, 1, 2):
        cx = build_sphere_complex(3, r)
        grp = GroupData.generate({n: group_rep(n, 1) for n in ("T", "C2x", "C2y")})
        attach_action(cx, grp)  # raises NotSimplicial on failure
        grp4 = GroupData.generate({"Q4z": group_rep("Q4z", 1)})
        attach_action(cx, grp4)


def test_mesh_export_schema(tmp_path):
    cx = build_sphere_complex(2, 0)
    path = tmp_path / "mesh.json"
    cx.save(path)
    import json

    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert doc["dim"] == 2
    assert len(doc["vertices"]) == 6
    assert len(doc["simplices"]["2"]) == 8
    assert set(doc["orientation"]) <= {1, -1}
