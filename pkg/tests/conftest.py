"""Shared fixtures: meshes, model families, towers, and synthetic cochain data.

Heavy objects are session-scoped; unit tests default to refinement 1, the
acceptance suite builds refinement 2 through the same fixtures.
"""

import numpy as np
import pytest

from eqfam.equivariant import GroupData, build_equivariant
from eqfam.gcomplex import Chain, Cochain, attach_action, build_sphere_complex
from eqfam.models import group_rep, model_tensors
from eqfam.mps import MPSFamily
from eqfam.numerics import branch_lift, canonical_phase


def make_model_setup(two_s: int, refinements: int):
    """S^3 mesh with the T/C2x/C2y and Q4z actions, model family, towers."""
    cx = build_sphere_complex(3, refinements)
    grp = GroupData.generate({n: group_rep(n, two_s) for n in ("T", "C2x", "C2y")})
    grp4 = GroupData.generate({"Q4z": group_rep("Q4z", two_s)})
    cx = attach_action(attach_action(cx, grp), grp4)
    fam = MPSFamily(cx, model_tensors(cx, two_s))
    eq = build_equivariant(fam, grp)
    eq4 = build_equivariant(fam, grp4)
    return {"cx": cx, "grp": grp, "grp4": grp4, "fam": fam, "eq": eq, "eq4": eq4}


@pytest.fixture(scope="session")
def model_half_ref1():
    return make_model_setup(1, 1)


@pytest.fixture(scope="session")
def model_half_ref2():
    return make_model_setup(1, 2)


@pytest.fixture(scope="session")
def model_one_ref2():
    return make_model_setup(2, 2)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


# --------------------------------------------------------------------------
# cochain-level gauge shifts (the full gauge orbit acting on derived data)


def clone_family(fam: MPSFamily) -> MPSFamily:
    out = MPSFamily.__new__(MPSFamily)
    out.cx = fam.cx
    out.tensors = fam.tensors
    out.gap_tol = fam.gap_tol
    out.edges = {e: type(ov)(mu=ov.mu, X=ov.X) for e, ov in fam.edges.items()}
    out.tri_a02 = dict(fam.tri_a02)
    out.quality = dict(fam.quality)
    return out


def clone_tower(eq):
    from eqfam.equivariant import EquivariantData

    return EquivariantData(fam=eq.fam, group=eq.group, V=dict(eq.V),
                           a10=dict(eq.a10), a11=dict(eq.a11), a20=dict(eq.a20),
                           quality=dict(eq.quality))


def gauge_shift(fam, eq, rng, eq_extra=()):
    """Random full gauge-orbit move at the cochain level.

    chi00 (vertex phases) shifts a01, a10; chi01 (edge phases) shifts a02 and
    a11; chi10 (V phases per group element and vertex) shifts a11 and a20.
    Returns shifted copies (family, tower, extra towers...).
    """
    cx = fam.cx
    nv = cx.n_simplices(0)
    chi00 = rng.uniform(-np.pi, np.pi, nv)
    chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}

    fam2 = clone_family(fam)
    for (u, v), ov in fam2.edges.items():
        ov.mu = ov.mu * np.exp(-1j * (chi00[v] - chi00[u]))
    for (u, v, w) in cx.simplices[2]:
        fam2.tri_a02[(u, v, w)] += chi01[(v, w)] - chi01[(u, w)] + chi01[(u, v)]

    def ev01(su, sv):
        return chi01[(su, sv)] if su < sv else -chi01[(sv, su)]

    towers = []
    for tower in (eq, *eq_extra):
        grp = tower.group
        t2 = clone_tower(tower)
        chi10 = {(g, v): rng.uniform(-np.pi, np.pi)
                 for g in grp.labels if g != grp.identity for v in range(nv)}

        def x10(g, v):
            return 0.0 if g == grp.identity else chi10[(g, v)]

        for (g, v) in list(t2.a10):
            phig = grp.phi[g]
            gv = int(cx.perms[g][v])
            t2.a10[(g, v)] -= phig * chi00[v] - chi00[gv]
        for (g, (u, v)) in list(t2.a11):
            phig = grp.phi[g]
            perm = cx.perms[g]
            gu, gv = int(perm[u]), int(perm[v])
            t2.a11[(g, (u, v))] += phig * ev01(u, v) - ev01(gu, gv)
            t2.a11[(g, (u, v))] -= x10(g, v) - x10(g, u)
        for (g, h, v) in list(t2.a20):
            phig = grp.phi[g]
            hv = int(cx.perms[h][v])
            gh = grp.mul(g, h)
            t2.a20[(g, h, v)] += phig * x10(h, v) - x10(gh, v) + x10(g, hv)
        towers.append(t2)
    return (fam2, *towers)


# --------------------------------------------------------------------------
# synthetic sigma-equivariant data on S^3 (free antipodal antiunitary action)


def sigma_group(dim_u: int = 2):
    table = {("e", "e"): "e", ("e", "sigma"): "sigma",
             ("sigma", "e"): "sigma", ("sigma", "sigma"): "e"}
    return GroupData.direct(["e", "sigma"], {"e": 1, "sigma": -1}, table,
                            u={"e": np.eye(dim_u), "sigma": np.eye(dim_u)},
                            param={"e": np.eye(4), "sigma": -np.eye(4)})


def synthetic_sigma_tower(refinements: int = 2):
    """Exactly sigma-odd triangle cochain hosting a +-1 monopole pair.

    An auxiliary two-level family chi(n) = ground state of m(n).s with
    m = f/|f| and f a generic odd linear map R^4 -> R^3 produces a Berry flux
    cochain whose winding sits at a sigma-related pair of interior points;
    antisymmetrizing makes it exactly sigma-odd, so a11 = a20 = 0 closes the
    tower with zero cocycle residuals.
    """
    cx = build_sphere_complex(3, refinements)
    grp = sigma_group()
    cx = attach_action(cx, grp)
    a, b, c = 0.55, 0.35, 0.65
    M = np.array([[-b, 1, 0, 0], [0, 0, 1, -c * a], [-a, 0, 0, 1.0]])

    def coherent(n):
        m = M @ n
        m = m / np.linalg.norm(m)
        H = 0.5 * np.array([[m[2], m[0] - 1j * m[1]], [m[0] + 1j * m[1], -m[2]]])
        w, v = np.linalg.eigh(H)
        return canonical_phase(v[:, 0])

    psi = [coherent(v) for v in cx.vertices]
    A = {}
    for (u, v) in cx.simplices[1]:
        A[(u, v)] = np.angle(np.vdot(psi[u], psi[v]))
    F = {}
    for s in cx.simplices[2]:
        u, v, w = s
        F[s] = branch_lift(A[(v, w)] - A[(u, w)] + A[(u, v)])
    a02 = Cochain(cx, 0, 2, grp)
    for s in cx.simplices[2]:
        img, sign = cx.act_simplex("sigma", s)
        a02.set((), s, 0.5 * (F[s] - sign * F[img]))
    a11 = Cochain(cx, 1, 1, grp)
    a20 = Cochain(cx, 2, 0, grp)
    for g in grp.labels:
        for e in cx.simplices[1]:
            a11.set((g,), e, 0.0)
        for h in grp.labels:
            for v in cx.simplices[0]:
                a20.set((g, h), v, 0.0)
    return cx, grp, a02, a11, a20


def shift_sigma_tower(cx, grp, a02, a11, a20, rng):
    """Random gauge move (chi01, chi10) of a sigma tower; returns shifted copies."""
    nv = cx.n_simplices(0)
    chi01 = {e: rng.uniform(-np.pi, np.pi) for e in cx.simplices[1]}
    chi10 = rng.uniform(-np.pi, np.pi, nv)
    perm = cx.perms["sigma"]

    def ev01(su, sv):
        return chi01[(su, sv)] if su < sv else -chi01[(sv, su)]

    a02s, a11s, a20s = a02.copy(), a11.copy(), a20.copy()
    for s in cx.simplices[2]:
        u, v, w = s
        a02s.set((), s, a02.ev((), s) + ev01(v, w) - ev01(u, w) + ev01(u, v))
    for (u, v) in cx.simplices[1]:
        gu, gv = int(perm[u]), int(perm[v])
        val = a11.ev(("sigma",), (u, v)) - ev01(u, v) - ev01(gu, gv) \
            - (chi10[v] - chi10[u])
        a11s.set(("sigma",), (u, v), val)
    for (v,) in cx.simplices[0]:
        sv = int(perm[v])
        val = a20.ev(("sigma", "sigma"), (v,)) - chi10[v] + chi10[sv]
        a20s.set(("sigma", "sigma"), (v,), val)
    return a02s, a11s, a20s
