"""Equivariant families of pure states on a triangulated parameter space.

Discrete Berry data of a family |psi(tau)> over the vertices of a G-complex:

    A(t0, t1)   = arg <psi(t0)|psi(t1)>          edge Berry connection
    F(triangle) = branch lift of (dA)(triangle)   Berry flux
    alpha_g(t)  = arg <psi(g t)| g psi(t)>        equivariance phase

Loop sums of A give Berry phases, flux sums over 2-cycles give Chern numbers,
and alpha restricted to stabilized vertices gives symmetry charges.  All
reported numbers are invariant under independent vertex phase changes.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateGroundState,
    EquivarianceViolated,
    FluxGuardExceeded,
    NotACycle,
    NotFixedPoint,
    NotFree,
    NotQuantized,
    PreconditionViolated,
    VanishingOverlap,
)
from .gcomplex import Chain, Cochain, GComplex
from .numerics import (
    angle_dist,
    branch_lift,
    canonical_phase,
    quantization_residual,
    wrap_angle,
)

OVERLAP_TOL = 1e-8
FLUX_GUARD = np.pi / 2
QUANT_TOL = 1e-3


class PureStateFamily:
    """Unit vectors on the vertices of a G-complex with an on-site group action."""

    def __init__(self, cx: GComplex, states: np.ndarray, group=None):
        self.cx = cx
        self.states = np.asarray(states, dtype=complex)
        if self.states.shape[0] != cx.n_simplices(0):
            raise PreconditionViolated("one state per vertex required")
        norms = np.linalg.norm(self.states, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise PreconditionViolated("states must be normalized")
        self.group = group if group is not None else cx.group

    def apply_element(self, g, vec: np.ndarray) -> np.ndarray:
        u = self.group.u[g]
        if self.group.phi[g] < 0:
            return u @ vec.conj()
        return u @ vec

    def gauge_transformed(self, chi: np.ndarray) -> "PureStateFamily":
        return PureStateFamily(self.cx, self.states * np.exp(1j * chi)[:, None],
                               self.group)


def berry_connection(fam: PureStateFamily, overlap_tol: float = OVERLAP_TOL) -> Cochain:
    """Edge cochain A(t0, t1) = arg <psi(t0)|psi(t1)>."""
    A = Cochain(fam.cx, 0, 1, fam.group)
    for (u, v) in fam.cx.simplices[1]:
        ov = np.vdot(fam.states[u], fam.states[v])
        if abs(ov) < overlap_tol:
            raise VanishingOverlap(f"edge ({u}, {v}): |overlap| = {abs(ov):.2e}")
        A.set((), (u, v), np.angle(ov))
    return A


def berry_phase(A: Cochain, loop: Chain) -> float:
    """Gauge-invariant loop sum of the Berry connection (mod 2pi)."""
    if not loop.boundary().is_zero():
        raise NotACycle("Berry phase needs a closed loop")
    return wrap_angle(sum(c * A.ev((), s) for s, c in loop.items()))


def flux(A: Cochain, tri) -> float:
    """Branch-lifted Berry flux through one triangle."""
    u, v, w = tri
    return branch_lift(A.ev((), (v, w)) - A.ev((), (u, w)) + A.ev((), (u, v)))


def chern(fam: PureStateFamily, surface: Chain, flux_guard: float = FLUX_GUARD,
          A: Cochain | None = None):
    """Chern number of a closed surface: (integer, rounding residual, max |F|)."""
    if not surface.boundary().is_zero():
        raise NotACycle("Chern number needs a closed surface")
    A = berry_connection(fam) if A is None else A
    total = 0.0
    worst = 0.0
    for s, c in surface.items():
        u, v, w = s
        f = branch_lift(c * (A.ev((), (v, w)) - A.ev((), (u, w)) + A.ev((), (u, v))))
        if abs(f) > flux_guard:
            raise FluxGuardExceeded(f"|F| = {abs(f):.3f} on triangle {s}")
        worst = max(worst, abs(f))
        total += f
    nu = int(np.rint(total / (2 * np.pi)))
    return nu, abs(total / (2 * np.pi) - nu), worst


def alpha_cochain(fam: PureStateFamily, equiv_tol: float = 1e-8) -> Cochain:
    """(1,0)-cochain alpha_g(tau) = arg <psi(g tau)| g psi(tau)>."""
    alpha = Cochain(fam.cx, 1, 0, fam.group)
    for g in fam.group.labels:
        perm = fam.cx.perms[g]
        for v in range(fam.cx.n_simplices(0)):
            target = fam.states[perm[v]]
            moved = fam.apply_element(g, fam.states[v])
            ov = np.vdot(target, moved)
            if abs(ov) < 1.0 - equiv_tol:
                raise EquivarianceViolated(
                    f"element {g!r} vertex {v}: |overlap| = {abs(ov):.6f}"
                )
            alpha.set((g,), (v,), np.angle(ov))
    return alpha


def berry_phase_fixed_point(fam: PureStateFamily, h, domains,
                            quantization_tol: float = QUANT_TOL):
    """Quantized Berry phase from expectation values of h at its fixed points.

    ``domains`` must provide the loop = C - hC, the arc C and endpoints P, Q
    with dC = Q - P.  Returns alpha_h(Q) - alpha_h(P) after asserting it
    matches the directly summed Berry phase on the loop.
    """
    if fam.group.phi[h] != 1:
        raise PreconditionViolated("fixed-point formula needs a unitary element")
    P, Q = domains["P"], domains["Q"]
    perm = fam.cx.perms[h]
    if perm[P] != P or perm[Q] != Q:
        raise NotFixedPoint(f"{h!r} does not fix both endpoints")
    loop, C = domains["loop"], domains["C"]
    from .gcomplex import chain_equal
    if not chain_equal(loop, C - C.transform(h)):
        raise PreconditionViolated("loop does not decompose as C - hC")
    alpha = alpha_cochain(fam)
    val = wrap_angle(alpha.ev((h,), (Q,)) - alpha.ev((h,), (P,)))
    A = berry_connection(fam)
    direct = berry_phase(A, loop)
    if angle_dist(val, direct) > quantization_tol:
        raise NotQuantized(
            f"fixed-point value {val:.6f} vs loop Berry phase {direct:.6f}"
        )
    return val


def chern_mod_n(fam: PureStateFamily, c, n: int, domains,
                quantization_tol: float = QUANT_TOL):
    """Chern number mod n from the rotation charges at the two fixed points."""
    if fam.group.phi[c] != 1:
        raise PreconditionViolated("rotation element must be unitary")
    P, Q = domains["P"], domains["Q"]
    perm = fam.cx.perms[c]
    if perm[P] != P or perm[Q] != Q:
        raise NotFixedPoint(f"{c!r} does not fix the poles")
    alpha = alpha_cochain(fam)
    val = wrap_angle(alpha.ev((c,), (Q,)) - alpha.ev((c,), (P,)))
    nu, _, _ = chern(fam, fam.cx.top_chain())
    if angle_dist(val, 2 * np.pi * nu / n) > quantization_tol:
        raise NotQuantized(
            f"mod-{n} charge difference {val:.6f} vs 2 pi nu / n = "
            f"{wrap_angle(2 * np.pi * nu / n):.6f}"
        )
    return val


def xi_s2(fam: PureStateFamily, sigma, domains, flux_guard: float = FLUX_GUARD,
          quantization_tol: float = 1e-6) -> float:
    """Z2 invariant of a free antipodal action on S^2 (values 0 or pi).

    xi = (1/2) sum_D F - sum_C A - alpha_sigma(P) with dD = C + sigma C and
    dC = sigma P - P; the line-plus-endpoint part is the gauge-invariant open
    Berry phase of the arc closed by the sigma matrix element, so this is the
    only sign assignment that is both gauge invariant and quantized (the
    cocycle delta alpha = 0 gives 2 xi = -(alpha(P) + alpha(sigma P)) = 0).
    The absolute value depends on the chosen phase of the sigma matrix;
    only differences between two families sharing the same action are
    convention-free.
    """
    g = fam.group
    if g.phi[sigma] != 1 or g.mul(sigma, sigma) != g.identity:
        raise PreconditionViolated("sigma must be unitary with sigma^2 = e")
    perm = fam.cx.perms[sigma]
    if np.any(perm == np.arange(len(perm))):
        raise NotFree("sigma has a fixed vertex")
    A = berry_connection(fam)
    alpha = alpha_cochain(fam)
    D, C, P = domains["D"], domains["C"], domains["P"]
    half_flux = 0.0
    for s, c in D.items():
        f = branch_lift(c * (A.ev((), (s[1], s[2])) - A.ev((), (s[0], s[2]))
                             + A.ev((), (s[0], s[1]))))
        if abs(f) > flux_guard:
            raise FluxGuardExceeded(f"|F| = {abs(f):.3f} on triangle {s}")
        half_flux += 0.5 * f
    line = sum(c * A.ev((), s) for s, c in C.items())
    val = wrap_angle(half_flux - line - alpha.ev((sigma,), (P,)))
    res = quantization_residual(val)
    if res > quantization_tol:
        raise NotQuantized(f"xi = {val:.6f} is {res:.2e} away from {{0, pi}}")
    return val


# --------------------------------------------------------------------------
# concrete families


def spin_field_family(cx: GComplex, two_s: int, group) -> PureStateFamily:
    """Ground state of h . S at every vertex h of an S^2 mesh."""
    from .models import spin_ops

    Sx, Sy, Sz = spin_ops(two_s)
    states = []
    for h in cx.vertices:
        H = h[0] * Sx + h[1] * Sy + h[2] * Sz
        w, v = np.linalg.eigh(H)
        if w[1] - w[0] < 1e-10:
            raise DegenerateGroundState(f"field point {h} is degenerate")
        states.append(canonical_phase(v[:, 0]))
    return PureStateFamily(cx, np.array(states), group)


def two_band_family(cx: GComplex, group) -> PureStateFamily:
    """The 2x2 model with ground state (n_x + i n_y, n_z) on S^2."""
    n = cx.vertices
    states = np.stack([n[:, 0] + 1j * n[:, 1], n[:, 2] + 0j], axis=1)
    return PureStateFamily(cx, states, group)


def constant_family(cx: GComplex, vec, group) -> PureStateFamily:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return PureStateFamily(cx, np.tile(v, (cx.n_simplices(0), 1)), group)
