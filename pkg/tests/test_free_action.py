"""Free-action higher Berry phases on synthetic shift-equivariant towers.

The parameter space is a K x K grid torus; the shifts act freely, so the
invariants of one period (cylinder strip, unit plaquette) are well-defined.
Synthetic cochain data realizes a generic equivariant tower: a shift-periodic
part plus an exact gauge orbit plus, for two commuting shifts, the carry and
bilinear 2-cocycles of Z_K x Z_K.
"""

import numpy as np
import pytest

from eqfam.equivariant import (
    cyclic_group,
    free_cylinder_gamma2,
    free_torus_gamma2,
    product_cyclic_group,
)
from eqfam.errors import BadDecomposition
from eqfam.gcomplex import (
    Chain,
    Cochain,
    attach_perm_action,
    build_torus_complex,
    d,
    delta,
)
from eqfam.numerics import angle_dist

KC = 8  # cylinder grid (cyclic shift group of order KC)
KT = 4  # torus grid (product group of order KT^2; delta checks are O(|G|^3))


def make_vid(K):
    def vid(i, j):
        return (i % K) * K + (j % K)

    return vid


def shift_perm(K, di, dj):
    vid = make_vid(K)
    perm = np.empty(K * K, dtype=int)
    for i in range(K):
        for j in range(K):
            perm[vid(i, j)] = vid(i + di, j + dj)
    return perm


def strip_chain(cx, K, j0):
    vid = make_vid(K)
    c = Chain(cx, 2)
    for i in range(K):
        c.add((vid(i, j0), vid(i + 1, j0), vid(i + 1, j0 + 1)))
        c.add((vid(i, j0), vid(i + 1, j0 + 1), vid(i, j0 + 1)))
    return c


def row_loop(cx, K, j0):
    vid = make_vid(K)
    c = Chain(cx, 1)
    for i in range(K):
        c.add((vid(i, j0), vid(i + 1, j0)))
    return c


@pytest.fixture(scope="module")
def cylinder_setup():
    """Z_K acting by the j-shift, with shift-periodic + gauge cochain data."""
    K = KC
    vid = make_vid(K)
    grp = cyclic_group(K, prefix="s")
    perms = {lbl: shift_perm(K, 0, k) for k, lbl in enumerate(grp.labels)}
    cx = attach_perm_action(build_torus_complex(K), grp, perms)
    rng = np.random.default_rng(99)

    def sq_class(s, j_ref):
        return tuple(sorted((v // K, (v % K - j_ref) % K) for v in s))

    base_a02 = {}
    chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}
    rho_row = rng.uniform(-1, 1, K)  # shift-periodic vertex function
    rho = np.array([rho_row[v // K] for v in range(K * K)])
    chi10 = {(g, v): rng.uniform(-np.pi, np.pi)
             for g in grp.labels if g != "e" for v in range(K * K)}

    def ev01(u, v):
        return chi01[(u, v)] if u < v else -chi01[(v, u)]

    def x10(lbl, v):
        return 0.0 if lbl == "e" else chi10[(lbl, v)]

    a02 = Cochain(cx, 0, 2, grp)
    for s in cx.simplices[2]:
        cls = sq_class(s, min(v % K for v in s))
        if cls not in base_a02:
            base_a02[cls] = rng.uniform(-1, 1)
        u, v, w = s
        a02.set((), s, base_a02[cls] + ev01(v, w) - ev01(u, w) + ev01(u, v))
    a11 = Cochain(cx, 1, 1, grp)
    for k, g in enumerate(grp.labels):
        pg = perms[g]
        for (u, v) in cx.simplices[1]:
            gu, gv = int(pg[u]), int(pg[v])
            val = k * (rho[v] - rho[u]) + ev01(u, v) - ev01(gu, gv) \
                - (x10(g, v) - x10(g, u))
            a11.set((g,), (u, v), val)
    a20 = Cochain(cx, 2, 0, grp)
    for kg, g in enumerate(grp.labels):
        for kh, h in enumerate(grp.labels):
            carry = 1 if kg + kh >= K else 0
            gh = grp.mul(g, h)
            ph = perms[h]
            for (v,) in cx.simplices[0]:
                val = -K * carry * rho[v] \
                    + x10(h, v) - x10(gh, v) + x10(g, int(ph[v]))
                a20.set((g, h), (v,), val)
    return cx, grp, a02, a11, a20


def test_cylinder_chain_structure(cylinder_setup):
    from eqfam.gcomplex import chain_equal

    cx = cylinder_setup[0]
    strip, base = strip_chain(cx, KC, 0), row_loop(cx, KC, 0)
    assert base.boundary().is_zero()
    assert chain_equal(strip.boundary(), base.transform("s") - base)


def test_cylinder_cocycles_close(cylinder_setup):
    cx, grp, a02, a11, a20 = cylinder_setup
    assert (delta(a02) - d(a11)).max_abs() < 1e-10
    assert (delta(a11) + d(a20)).max_abs() < 1e-10
    assert delta(a20).max_abs() < 1e-10


def test_cylinder_invariant_trivial_for_zero_data():
    K = KC
    grp = cyclic_group(K, prefix="s")
    perms = {lbl: shift_perm(K, 0, k) for k, lbl in enumerate(grp.labels)}
    cx = attach_perm_action(build_torus_complex(K), grp, perms)
    val = free_cylinder_gamma2(cx, Cochain(cx, 0, 2, grp),
                               Cochain(cx, 1, 1, grp), "s",
                               strip_chain(cx, K, 0), row_loop(cx, K, 0))
    assert val == 0.0


def test_cylinder_invariant_gauge_orbit(cylinder_setup, rng):
    """100 random gauge moves leave the one-period invariant unchanged."""
    cx, grp, a02, a11, a20 = cylinder_setup
    strip, base = strip_chain(cx, KC, 0), row_loop(cx, KC, 0)
    baseval = free_cylinder_gamma2(cx, a02, a11, "s", strip, base)
    for _ in range(100):
        chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}
        chi10 = rng.uniform(-np.pi, np.pi, KC * KC)

        def ev01(u, v):
            return chi01[(u, v)] if u < v else -chi01[(v, u)]

        a02s = a02.copy()
        for s in cx.simplices[2]:
            u, v, w = s
            a02s.data[((), s)] += ev01(v, w) - ev01(u, w) + ev01(u, v)
        a11s = a11.copy()
        pg = cx.perms["s"]
        for (u, v) in cx.simplices[1]:
            gu, gv = int(pg[u]), int(pg[v])
            a11s.data[(("s",), (u, v))] += ev01(u, v) - ev01(gu, gv) \
                - (chi10[v] - chi10[u])
        val = free_cylinder_gamma2(cx, a02s, a11s, "s", strip, base)
        assert angle_dist(val, baseval) < 1e-9


def test_cylinder_invariant_shift_invariance(cylinder_setup):
    """Moving the strip by shift periods gives the same value."""
    cx, grp, a02, a11, a20 = cylinder_setup
    vals = [free_cylinder_gamma2(cx, a02, a11, "s",
                                 strip_chain(cx, KC, j), row_loop(cx, KC, j))
            for j in range(3)]
    assert angle_dist(vals[0], vals[1]) < 1e-9
    assert angle_dist(vals[0], vals[2]) < 1e-9
    assert abs(vals[0]) > 1e-3  # nontrivial for this data


def test_cylinder_rejects_bad_strip(cylinder_setup):
    cx, grp, a02, a11, a20 = cylinder_setup
    with pytest.raises(BadDecomposition):
        free_cylinder_gamma2(cx, a02, a11, "s", strip_chain(cx, KC, 0),
                             row_loop(cx, KC, 3))


# --------------------------------------------------------------------------
# torus plaquette with two commuting shifts


@pytest.fixture(scope="module")
def torus_setup():
    K = KT
    grp = product_cyclic_group(K)
    perms = {}
    for i in range(K):
        for j in range(K):
            lbl = "e" if (i, j) == (0, 0) else f"a{i}b{j}"
            perms[lbl] = shift_perm(K, i, j)
    cx = attach_perm_action(build_torus_complex(K), grp, perms)
    rng = np.random.default_rng(123)
    theta = 2 * np.pi * 3 / K  # bilinear Z_K x Z_K cocycle coefficient

    def comps(lbl):
        return (0, 0) if lbl == "e" else (int(lbl[1]), int(lbl[3]))

    chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}
    chi10 = {(g, v): rng.uniform(-np.pi, np.pi)
             for g in grp.labels if g != "e" for v in range(K * K)}

    def ev01(u, v):
        return chi01[(u, v)] if u < v else -chi01[(v, u)]

    def x10(lbl, v):
        return 0.0 if lbl == "e" else chi10[(lbl, v)]

    a02 = Cochain(cx, 0, 2, grp)
    for s in cx.simplices[2]:
        u, v, w = s
        a02.set((), s, ev01(v, w) - ev01(u, w) + ev01(u, v))
    a11 = Cochain(cx, 1, 1, grp)
    for g in grp.labels:
        pg = perms[g]
        for (u, v) in cx.simplices[1]:
            gu, gv = int(pg[u]), int(pg[v])
            a11.set((g,), (u, v),
                    ev01(u, v) - ev01(gu, gv) - (x10(g, v) - x10(g, u)))
    a20 = Cochain(cx, 2, 0, grp)
    for g in grp.labels:
        ga, gb = comps(g)
        for h in grp.labels:
            ha, hb = comps(h)
            gh = grp.mul(g, h)
            ph = perms[h]
            for (v,) in cx.simplices[0]:
                val = theta * gb * ha \
                    + x10(h, v) - x10(gh, v) + x10(g, int(ph[v]))
                a20.set((g, h), (v,), val)
    return cx, grp, a02, a11, a20, theta


def plaquette_chains(cx, K, i0=0, j0=0):
    vid = make_vid(K)
    plaq = Chain(cx, 2)
    plaq.add((vid(i0, j0), vid(i0 + 1, j0), vid(i0 + 1, j0 + 1)))
    plaq.add((vid(i0, j0), vid(i0 + 1, j0 + 1), vid(i0, j0 + 1)))
    bottom = Chain(cx, 1).add((vid(i0, j0), vid(i0 + 1, j0)))
    left = Chain(cx, 1).add((vid(i0, j0), vid(i0, j0 + 1)))
    return plaq, bottom, left, vid(i0, j0)


def test_torus_cocycles_close(torus_setup):
    cx, grp, a02, a11, a20, _ = torus_setup
    assert (delta(a02) - d(a11)).max_abs() < 1e-10
    assert (delta(a11) + d(a20)).max_abs() < 1e-10
    assert delta(a20).max_abs() < 1e-10


def test_torus_invariant_value_and_translation(torus_setup):
    cx, grp, a02, a11, a20, theta = torus_setup
    s1, s2 = "a1b0", "a0b1"
    vals = []
    for (i0, j0) in ((0, 0), (1, 2), (3, 1)):
        plaq, bottom, left, corner = plaquette_chains(cx, KT, i0, j0)
        vals.append(free_torus_gamma2(cx, a02, a11, a20, s1, s2,
                                      plaq, bottom, left, corner))
    # the pure-gauge parts cancel; what survives is the antisymmetrized
    # bilinear cocycle at the corner, -theta
    for v in vals:
        assert angle_dist(v, -theta) < 1e-9


def test_torus_invariant_gauge_orbit(torus_setup, rng):
    cx, grp, a02, a11, a20, theta = torus_setup
    s1, s2 = "a1b0", "a0b1"
    plaq, bottom, left, corner = plaquette_chains(cx, KT)
    base = free_torus_gamma2(cx, a02, a11, a20, s1, s2, plaq, bottom, left,
                             corner)
    nv = KT * KT
    for _ in range(100):
        chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}
        chi10 = {(g, v): rng.uniform(-np.pi, np.pi)
                 for g in grp.labels if g != "e" for v in range(nv)}

        def ev01(u, v):
            return chi01[(u, v)] if u < v else -chi01[(v, u)]

        def x10(lbl, v):
            return 0.0 if lbl == "e" else chi10[(lbl, v)]

        a02s = a02.copy()
        for s in cx.simplices[2]:
            u, v, w = s
            a02s.data[((), s)] += ev01(v, w) - ev01(u, w) + ev01(u, v)
        a11s = a11.copy()
        for g in (s1, s2):
            pg = cx.perms[g]
            for (u, v) in cx.simplices[1]:
                gu, gv = int(pg[u]), int(pg[v])
                a11s.data[((g,), (u, v))] += ev01(u, v) - ev01(gu, gv) \
                    - (x10(g, v) - x10(g, u))
        a20s = a20.copy()
        for g in (s1, s2):
            for h in (s1, s2):
                gh = grp.mul(g, h)
                ph = cx.perms[h]
                for (v,) in cx.simplices[0]:
                    a20s.data[((g, h), (v,))] += \
                        x10(h, v) - x10(gh, v) + x10(g, int(ph[v]))
        val = free_torus_gamma2(cx, a02s, a11s, a20s, s1, s2, plaq, bottom,
                                left, corner)
        assert angle_dist(val, base) < 1e-9


def test_torus_rejects_wrong_plaquette(torus_setup):
    cx, grp, a02, a11, a20, _ = torus_setup
    vid = make_vid(KT)
    plaq, bottom, left, corner = plaquette_chains(cx, KT)
    wrong_left = Chain(cx, 1).add((vid(1, 0), vid(1, 1)))
    with pytest.raises(BadDecomposition):
        free_torus_gamma2(cx, a02, a11, a20, "a1b0", "a0b1", plaq, bottom,
                          wrong_left, corner)
