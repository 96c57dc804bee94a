"""G-equivariant cochain tower over an MPS family and the derived invariants.

For every group element g and vertex tau the mixed transfer matrix between
u_g-transformed tensors and the tensors at g tau yields a phase a10 and a
unitary V_g(tau) (the edge-space representation).  From these:

    a11_g(edge)  -- phase aligning V X V+ with the overlap matrix of the
                    image edge,
    a20_{g,h}(v) -- the projective multiplier of V_g V_h against V_{gh}.

The tower satisfies five cocycle conditions (checked numerically, see
``cocycle_residuals``), and quantized combinations of its entries give SPT
invariants, Thouless pumps, quantized higher Berry phases, and the whole
suite of fixed-point formulas relating them to the DDKS number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mps as mpsmod
from .errors import (
    BadDecomposition,
    DegenerateDominantEigenvalue,
    EquivarianceViolated,
    FluxGuardExceeded,
    NotACycle,
    NotFree,
    NotProportionalToIdentity,
    NotQuantized,
    NotStabilized,
    PreconditionViolated,
    SchmidtMismatch,
)
from .gcomplex import (
    Chain,
    Cochain,
    GComplex,
    chain_equal,
    cnz_domains_s3,
    d,
    delta,
    equator_sphere_s3,
    halfspace_domains_s3,
    pair,
    z2z2_domains_s3,
)
from .mps import MPSFamily, MPSTensor, transfer_matrix
from .numerics import (
    angle_dist,
    branch_lift,
    dagger,
    dominant_eigenpair,
    polar_unitary,
    quantization_residual,
    wrap_angle,
)

COC_TOL = 1e-8
QUANT_TOL = 1e-6


# --------------------------------------------------------------------------
# finite group container


class GroupData:
    """Finite group with phi grading, on-site matrices and parameter isometries.

    Elements are labels; ``u`` maps labels to (anti)unitary matrices (the
    matrix part only; phi = -1 marks an extra complex conjugation), ``param``
    to isometries of the parameter space.  Either may be None for abstract
    groups (e.g. shift actions given by explicit permutations).
    """

    def __init__(self, labels, phi, table, u=None, param=None, identity="e"):
        self.labels = list(labels)
        self.phi = dict(phi)
        self._table = dict(table)
        self.u = dict(u or {})
        self.param = dict(param or {})
        self.identity = identity
        self._inv = {}
        for a in self.labels:
            for b in self.labels:
                if self._table[(a, b)] == identity and self._table[(b, a)] == identity:
                    self._inv[a] = b
                    break
        if set(self._inv) != set(self.labels):
            raise PreconditionViolated("multiplication table has no inverses")

    def mul(self, a, b):
        return self._table[(a, b)]

    def inv(self, a):
        return self._inv[a]

    def __len__(self):
        return len(self.labels)

    @classmethod
    def generate(cls, generators: dict, max_order: int = 64, rep_tol: float = 1e-12):
        """Close a set of named generators (u, phi, param) into a full group.

        Elements are identified by (phi, param, u) within 1e-8; products are
        named after their factors when they are new.  The twisted
        representation property u_g u_h^{phi_g} = u_{gh} is validated on all
        pairs to ``rep_tol``.
        """
        first_u = next(iter(generators.values()))[0]
        nu = first_u.shape[0]
        first_p = next(iter(generators.values()))[2]
        npar = first_p.shape[0]
        elems = [("e", np.eye(nu, dtype=complex), 1, np.eye(npar))]

        def find(u, phi, param):
            for (lbl, eu, ephi, epar) in elems:
                if ephi == phi and np.allclose(epar, param, atol=1e-8) and \
                        np.allclose(eu, u, atol=1e-8):
                    return lbl
            return None

        for name, (u, phi, param) in generators.items():
            u = np.asarray(u, dtype=complex)
            param = np.asarray(param, dtype=float)
            if find(u, phi, param) is None:
                elems.append((name, u, int(phi), param))
        changed = True
        while changed:
            changed = False
            current = list(elems)
            for (la, ua, pa, ma) in current:
                for (lb, ub, pb, mb) in current:
                    uab = ua @ (ub.conj() if pa < 0 else ub)
                    mab = ma @ mb
                    if find(uab, pa * pb, mab) is None:
                        if len(elems) >= max_order:
                            raise PreconditionViolated("group closure exceeded max_order")
                        elems.append((f"{la}*{lb}", uab, pa * pb, mab))
                        changed = True
        labels = [e[0] for e in elems]
        u = {e[0]: e[1] for e in elems}
        phi = {e[0]: e[2] for e in elems}
        param = {e[0]: e[3] for e in elems}
        table = {}
        worst = 0.0
        for (la, ua, pa, ma) in elems:
            for (lb, ub, pb, mb) in elems:
                uab = ua @ (ub.conj() if pa < 0 else ub)
                lab = find(uab, pa * pb, ma @ mb)
                if lab is None:
                    raise PreconditionViolated("closure is not closed; increase max_order")
                table[(la, lb)] = lab
                worst = max(worst, float(np.abs(uab - u[lab]).max()))
        if worst > rep_tol:
            raise PreconditionViolated(
                f"representation property residual {worst:.2e} exceeds {rep_tol}"
            )
        return cls(labels, phi, table, u=u, param=param)

    @classmethod
    def direct(cls, labels, phi, table, u=None, param=None, identity="e"):
        return cls(labels, phi, table, u=u, param=param, identity=identity)


def cyclic_group(K: int, prefix: str = "s") -> GroupData:
    """Z_K with labels e, s, s2, ... (abstract; attach permutations separately)."""
    labels = ["e"] + [f"{prefix}{k}" if k > 1 else prefix for k in range(1, K)]
    idx = {lbl: k for k, lbl in enumerate(labels)}
    table = {}
    for a, ka in idx.items():
        for b, kb in idx.items():
            table[(a, b)] = labels[(ka + kb) % K]
    return GroupData.direct(labels, {l: 1 for l in labels}, table)


def product_cyclic_group(K: int) -> GroupData:
    """Z_K x Z_K with labels 'a{i}b{j}' (identity 'e')."""
    def name(i, j):
        return "e" if (i, j) == (0, 0) else f"a{i}b{j}"

    labels = [name(i, j) for i in range(K) for j in range(K)]
    table = {}
    for i in range(K):
        for j in range(K):
            for k in range(K):
                for l in range(K):
                    table[(name(i, j), name(k, l))] = name((i + k) % K, (j + l) % K)
    return GroupData.direct(labels, {l: 1 for l in labels}, table)


# --------------------------------------------------------------------------
# the tower


def transform_mps(u: np.ndarray, phi: int, t: MPSTensor) -> MPSTensor:
    """Group action on a site tensor: B^i = sum_j u_ij (A^j)^phi."""
    A = t.A.conj() if phi < 0 else t.A
    if u.shape[0] != t.phys_dim:
        raise PreconditionViolated("representation dimension mismatch")
    return MPSTensor(np.einsum("ij,jab->iab", u, A), t.lam.copy())


@dataclass
class EquivariantData:
    fam: MPSFamily
    group: GroupData
    V: dict = field(default_factory=dict)        # (g, vertex) -> unitary
    a10: dict = field(default_factory=dict)      # (g, vertex) -> angle
    a11: dict = field(default_factory=dict)      # (g, sorted edge) -> angle
    a20: dict = field(default_factory=dict)      # (g, h, vertex) -> angle
    quality: dict = field(default_factory=dict)

    def a11_at(self, g, u: int, v: int) -> float:
        if u < v:
            return self.a11[(g, (u, v))]
        return -self.a11[(g, (v, u))]

    def a10_cochain(self) -> Cochain:
        f = Cochain(self.fam.cx, 1, 0, self.group)
        for (g, v), val in self.a10.items():
            f.set((g,), (v,), val)
        return f

    def a11_cochain(self) -> Cochain:
        f = Cochain(self.fam.cx, 1, 1, self.group)
        for (g, e), val in self.a11.items():
            f.set((g,), e, val)
        return f

    def a20_cochain(self) -> Cochain:
        f = Cochain(self.fam.cx, 2, 0, self.group)
        for (g, h, v), val in self.a20.items():
            f.set((g, h), (v,), val)
        return f


def build_equivariant(fam: MPSFamily, group: GroupData, equiv_tol: float = 1e-8,
                      prop_tol: float = 1e-6, pair_tol: float = 1e-6,
                      gap_tol: float = 1e-6, lam_tol: float = 1e-8) -> EquivariantData:
    """Extract V_g, a10, a11, a20 for the whole family.

    Requires the family's complex to carry the same group's action.  Raises
    EquivarianceViolated / SchmidtMismatch / NotProportionalToIdentity with
    the offending (element, simplex) slot named.
    """
    cx = fam.cx
    if cx.group is not group:
        missing = [g for g in group.labels if g not in cx.perms]
        if missing:
            raise PreconditionViolated(f"mesh action missing elements {missing}")
    eq = EquivariantData(fam=fam, group=group)
    eq.quality = {"min_abs_mu": 1.0, "max_unitarity_defect": 0.0,
                  "min_pair_overlap": 1.0, "max_prop_defect": 0.0}
    nv = cx.n_simplices(0)
    e = group.identity

    for v in range(nv):
        D = fam.tensors[v].bond_dim
        eq.V[(e, v)] = np.eye(D, dtype=complex)
        eq.a10[(e, v)] = 0.0
    for g in group.labels:
        if g == e:
            continue
        perm = cx.perms[g]
        ug, phig = group.u[g], group.phi[g]
        for v in range(nv):
            gv = int(perm[v])
            t, tg = fam.tensors[v], fam.tensors[gv]
            if t.bond_dim != tg.bond_dim or \
                    np.max(np.abs(t.lam - tg.lam)) > lam_tol:
                raise SchmidtMismatch(f"element {g!r}, vertex {v} -> {gv}")
            B = transform_mps(ug, phig, t)
            try:
                mu, vec = dominant_eigenpair(transfer_matrix(B, tg), gap_tol=gap_tol)
            except DegenerateDominantEigenvalue as exc:
                raise EquivarianceViolated(f"({g!r}, vertex {v}): {exc}") from exc
            if abs(abs(mu) - 1.0) > equiv_tol:
                raise EquivarianceViolated(
                    f"({g!r}, vertex {v}): |mu| = {abs(mu):.8f}"
                )
            D = t.bond_dim
            V0 = dagger(vec.reshape(D, D)) * np.sqrt(D)
            V, defect = polar_unitary(V0)
            if np.linalg.norm(V @ np.diag(t.lam) - np.diag(t.lam) @ V) > 1e-8:
                raise EquivarianceViolated(
                    f"({g!r}, vertex {v}): V does not commute with the Schmidt diagonal"
                )
            eq.V[(g, v)] = V
            eq.a10[(g, v)] = float(-np.angle(mu))
            eq.quality["min_abs_mu"] = min(eq.quality["min_abs_mu"], abs(mu))
            eq.quality["max_unitarity_defect"] = max(
                eq.quality["max_unitarity_defect"], defect
            )

    for g in group.labels:
        perm = cx.perms[g]
        phig = group.phi[g]
        for edge in cx.simplices[1]:
            if g == e:
                eq.a11[(g, edge)] = 0.0
                continue
            u, v = edge
            X = fam.X(u, v)
            L = eq.V[(g, u)] @ (X.conj() if phig < 0 else X) @ dagger(eq.V[(g, v)])
            Xg = fam.X(int(perm[u]), int(perm[v]))
            ip = np.trace(dagger(Xg) @ L)
            if abs(abs(ip) - 1.0) > pair_tol:
                raise EquivarianceViolated(
                    f"({g!r}, edge {edge}): transported overlap matrix misaligned "
                    f"(|ip| = {abs(ip):.8f})"
                )
            eq.quality["min_pair_overlap"] = min(eq.quality["min_pair_overlap"], abs(ip))
            eq.a11[(g, edge)] = float(np.angle(ip))

    for g in group.labels:
        for h in group.labels:
            gh = group.mul(g, h)
            perm_h = cx.perms[h]
            phig = group.phi[g]
            for v in range(nv):
                if g == e or h == e:
                    eq.a20[(g, h, v)] = 0.0
                    continue
                Vh = eq.V[(h, v)]
                W = eq.V[(g, int(perm_h[v]))] @ (Vh.conj() if phig < 0 else Vh)
                Z = W @ dagger(eq.V[(gh, v)])
                D = Z.shape[0]
                tr = np.trace(Z) / D
                theta = float(np.angle(tr))
                defect = float(np.linalg.norm(Z - np.exp(1j * theta) * np.eye(D)))
                if defect > prop_tol:
                    raise NotProportionalToIdentity(
                        f"({g!r}, {h!r}, vertex {v}): defect {defect:.2e}"
                    )
                eq.quality["max_prop_defect"] = max(
                    eq.quality["max_prop_defect"], defect
                )
                eq.a20[(g, h, v)] = theta
    return eq


def cocycle_residuals(eq: EquivariantData) -> dict:
    """The five cocycle residuals of the tower, as max angle distances.

    delta a10 = 0, delta a01 + d a10 = 0, delta a02 - d a11 = 0,
    delta a11 + d a20 = 0, delta a20 = 0.
    """
    fam, group = eq.fam, eq.group
    a01 = fam.a01_cochain(group)
    a02 = fam.a02_cochain(group)
    a10 = eq.a10_cochain()
    a11 = eq.a11_cochain()
    a20 = eq.a20_cochain()
    return {
        "delta_a10": delta(a10).max_abs(),
        "delta_a01_plus_d_a10": (delta(a01) + d(a10)).max_abs(),
        "delta_a02_minus_d_a11": (delta(a02) - d(a11)).max_abs(),
        "delta_a11_plus_d_a20": (delta(a11) + d(a20)).max_abs(),
        "delta_a20": delta(a20).max_abs(),
    }


# --------------------------------------------------------------------------
# SPT invariants at stabilized vertices


def _check_stabilized(eq, tau, *labels):
    for g in labels:
        if int(eq.fam.cx.perms[g][tau]) != tau:
            raise NotStabilized(f"{g!r} moves vertex {tau}")


def mu_t(eq: EquivariantData, tau: int, g, h,
         quantization_tol: float | None = QUANT_TOL) -> float:
    """Torus SPT invariant a20_{g,h} - a20_{h,g} for commuting unitaries."""
    grp = eq.group
    if grp.phi[g] != 1 or grp.phi[h] != 1:
        raise PreconditionViolated("mu_t needs two unitary elements")
    if grp.mul(g, h) != grp.mul(h, g):
        raise PreconditionViolated("mu_t needs commuting elements")
    _check_stabilized(eq, tau, g, h)
    val = wrap_angle(eq.a20[(g, h, tau)] - eq.a20[(h, g, tau)])
    return _assert_z2(val, quantization_tol, "mu_t")


def mu_rp(eq: EquivariantData, tau: int, a,
          quantization_tol: float | None = QUANT_TOL) -> float:
    """Real-projective-plane SPT invariant a20_{a,a} for an antiunitary involution."""
    grp = eq.group
    if grp.phi[a] != -1 or grp.mul(a, a) != grp.identity:
        raise PreconditionViolated("mu_rp needs an antiunitary involution")
    _check_stabilized(eq, tau, a)
    val = wrap_angle(eq.a20[(a, a, tau)])
    return _assert_z2(val, quantization_tol, "mu_rp")


def mu_kb(eq: EquivariantData, tau: int, a, g,
          quantization_tol: float | None = QUANT_TOL) -> float:
    """Klein-bottle SPT invariant for antiunitary a and unitary g with a g^-1 = g a."""
    grp = eq.group
    if grp.phi[a] != -1 or grp.phi[g] != 1:
        raise PreconditionViolated("mu_kb needs antiunitary a, unitary g")
    ginv = grp.inv(g)
    if grp.mul(a, ginv) != grp.mul(g, a):
        raise PreconditionViolated("mu_kb needs a g^-1 = g a")
    _check_stabilized(eq, tau, a, g)
    val = wrap_angle(
        eq.a20[(a, ginv, tau)] + eq.a20[(g, ginv, tau)] - eq.a20[(g, a, tau)]
    )
    return _assert_z2(val, quantization_tol, "mu_kb")


def _assert_z2(val: float, tol, name: str) -> float:
    if tol is not None:
        res = quantization_residual(val)
        if res > tol:
            raise NotQuantized(f"{name} = {val:.8f} is {res:.2e} from {{0, pi}}")
    return val


# --------------------------------------------------------------------------
# pumps and quantized higher Berry phases


def pump_eta(eq: EquivariantData, g, loop: Chain,
             flat_tol: float | None = COC_TOL) -> float:
    """Thouless pump eta_g = (a11_g, loop) for g stabilizing the loop pointwise.

    Flatness of a11_g is checked on triangles all of whose vertices are
    g-fixed (vacuous when the stabilized subspace is one-dimensional).
    """
    if eq.group.phi[g] != 1:
        raise PreconditionViolated("pump needs a unitary element")
    if not loop.boundary().is_zero():
        raise NotACycle("pump loop must be closed")
    perm = eq.fam.cx.perms[g]
    verts = {v for s, _ in loop.items() for v in s}
    moved = [v for v in verts if int(perm[v]) != v]
    if moved:
        raise NotStabilized(f"{g!r} moves loop vertices {moved[:4]}")
    if flat_tol is not None:
        fixed = {v for v in range(eq.fam.cx.n_simplices(0)) if int(perm[v]) == v}
        for tri in eq.fam.cx.simplices.get(2, ()):
            if all(v in fixed for v in tri):
                u, v, w = tri
                js = eq.a11_at(g, v, w) - eq.a11_at(g, u, w) + eq.a11_at(g, u, v)
                if abs(branch_lift(js)) > flat_tol:
                    raise NotQuantized(
                        f"a11_{g!r} not flat on stabilized triangle {tri}"
                    )
    return wrap_angle(sum(c * eq.a11[(g, s)] for s, c in loop.items()))


def pump_fixed_point(eq: EquivariantData, g, h, C: Chain,
                     quantization_tol: float = QUANT_TOL) -> float:
    """Pump invariant on the loop C - hC from SPT invariants at the arc ends."""
    grp = eq.group
    if grp.phi[h] != 1:
        raise PreconditionViolated("h must be unitary")
    if grp.mul(g, h) != grp.mul(h, g):
        raise PreconditionViolated("g and h must commute")
    bc = C.boundary()
    if len(bc.data) != 2:
        raise BadDecomposition("arc must have two boundary points")
    P = next(v[0] for v, c in bc.data.items() if c == -1)
    Q = next(v[0] for v, c in bc.data.items() if c == 1)
    val = wrap_angle(mu_t(eq, Q, g, h, None) - mu_t(eq, P, g, h, None))
    loop = C - C.transform(h)
    eta = pump_eta(eq, g, loop, flat_tol=None)
    if angle_dist(val, eta) > quantization_tol:
        raise NotQuantized(
            f"fixed-point pump {val:.8f} vs direct eta {eta:.8f}"
        )
    return val


def gamma2_fixed_point(fam: MPSFamily, eq: EquivariantData, b,
                       quantization_tol: float = QUANT_TOL) -> float:
    """Quantized higher Berry phase of the {n3 = 0} sphere from mu_rp at the
    two b-fixed points, checked against the direct triangle sum."""
    grp = eq.group
    if grp.phi[b] != -1 or grp.mul(b, b) != grp.identity:
        raise PreconditionViolated("b must be an antiunitary involution")
    cx = fam.cx
    sphere = equator_sphere_s3(cx)
    D = sphere.restrict(lambda x: x[2] > 1e-9)
    if not chain_equal(sphere, D + D.transform(b)):
        raise BadDecomposition("sphere != D + bD for this action")
    BD = D.boundary()
    C = BD.restrict(lambda x: x[1] > 1e-9)
    if not chain_equal(BD, C - C.transform(b)):
        raise BadDecomposition("dD != C - bC for this action")
    bc = C.boundary()
    P = next(v[0] for v, c in bc.data.items() if c == -1)
    Q = next(v[0] for v, c in bc.data.items() if c == 1)
    val = wrap_angle(mu_rp(eq, P, b, None) - mu_rp(eq, Q, b, None))
    direct = mpsmod.gamma2(fam, sphere, quantization_tol=quantization_tol)
    if angle_dist(val, direct) > quantization_tol:
        raise NotQuantized(f"fixed-point gamma2 {val:.8f} vs direct {direct:.8f}")
    return val


# --------------------------------------------------------------------------
# DDKS relation suite


@dataclass
class RelationResult:
    name: str
    value: float
    expected: float
    residual: float
    nu3: int


def _relation(name, value, expected, nu3, tol) -> RelationResult:
    res = angle_dist(value, expected)
    if res > tol:
        raise NotQuantized(f"{name}: value {value:.8f} vs expected "
                           f"{wrap_angle(expected):.8f} (residual {res:.2e})")
    return RelationResult(name, wrap_angle(value), wrap_angle(expected), res, nu3)


def _nu3(fam: MPSFamily, nu3=None) -> int:
    if nu3 is None:
        nu3, _, _ = mpsmod.ddks(fam, fam.cx.top_chain())
    return nu3


def ddks_parity_berry(fam: MPSFamily, eq: EquivariantData, nu3=None,
                      quantization_tol: float = QUANT_TOL) -> RelationResult:
    """(a02, boundary of upper half of S^3) must equal pi nu3 mod 2pi."""
    nu3 = _nu3(fam, nu3)
    sphere = equator_sphere_s3(fam.cx)
    val = wrap_angle(sum(c * fam.a02(s) for s, c in sphere.items()))
    return _relation("ddks_parity_berry", val, np.pi * nu3, nu3, quantization_tol)


def ddks_mod_n_pump(fam: MPSFamily, eq: EquivariantData, g, n: int, nu3=None,
                    quantization_tol: float = QUANT_TOL) -> RelationResult:
    """Pump of the order-n rotation g around the invariant circle vs 2 pi nu3 / n."""
    nu3 = _nu3(fam, nu3)
    doms = cnz_domains_s3(fam.cx, g, n)
    eta = pump_eta(eq, g, doms["circle"])
    return _relation(f"ddks_mod_{n}_pump", eta, 2 * np.pi * nu3 / n, nu3,
                     quantization_tol)


def ddks_parity_t(fam: MPSFamily, eq: EquivariantData, t_label="T", nu3=None,
                  quantization_tol: float = QUANT_TOL) -> RelationResult:
    """mu_rp_T(P+) - mu_rp_T(P-) must equal pi nu3 mod 2pi."""
    nu3 = _nu3(fam, nu3)
    cx = fam.cx
    p_plus = cx.vertex_at([1, 0, 0, 0])
    p_minus = cx.vertex_at([-1, 0, 0, 0])
    val = wrap_angle(mu_rp(eq, p_plus, t_label, None) - mu_rp(eq, p_minus, t_label, None))
    return _relation("ddks_parity_t", val, np.pi * nu3, nu3, quantization_tol)


def ddks_mod4_z2z2(fam: MPSFamily, eq: EquivariantData, x="C2x", y="C2y", nu3=None,
                   quantization_tol: float = QUANT_TOL) -> RelationResult:
    """Gauge-invariant three-arc + endpoint combination vs (pi/2) nu3.

    With the verified chain identities of ``z2z2_domains_s3`` the exact
    telescoping of (d a02, D3) through the cocycle tower reads

        -(a11_x, D1_p00) - (a11_y, D1_0p0) + (a11_xy, D1_00p)
                                           - (a20_{y,x}, boundary of D1_00p),

    using that x and y act identically on the {n1 = n2 = 0} circle.
    """
    nu3 = _nu3(fam, nu3)
    doms = z2z2_domains_s3(fam.cx, x, y)
    xy = eq.group.mul(x, y)
    perm_x, perm_y = fam.cx.perms[x], fam.cx.perms[y]
    for s, _ in doms["D1_00p"].items():
        if any(perm_x[v] != perm_y[v] for v in s):
            raise BadDecomposition("x and y act differently on the pole circle")

    def line(g, chain):
        return sum(c * eq.a11[(g, s)] for s, c in chain.items())

    endpoints = doms["D1_00p"].boundary()
    val = wrap_angle(
        -line(x, doms["D1_p00"]) - line(y, doms["D1_0p0"]) + line(xy, doms["D1_00p"])
        - sum(c * eq.a20[(y, x, v[0])] for v, c in endpoints.data.items())
    )
    return _relation("ddks_mod4_z2z2", val, 0.5 * np.pi * nu3, nu3, quantization_tol)


def ddks_parity_z2z2(fam: MPSFamily, eq: EquivariantData, x="C2x", y="C2y", nu3=None,
                     quantization_tol: float = QUANT_TOL) -> RelationResult:
    """mu_t_{x,y}(P+) - mu_t_{x,y}(P-) must equal pi nu3 mod 2pi."""
    nu3 = _nu3(fam, nu3)
    cx = fam.cx
    p_plus = cx.vertex_at([1, 0, 0, 0])
    p_minus = cx.vertex_at([-1, 0, 0, 0])
    val = wrap_angle(mu_t(eq, p_plus, x, y, None) - mu_t(eq, p_minus, x, y, None))
    return _relation("ddks_parity_z2z2", val, np.pi * nu3, nu3, quantization_tol)


# --------------------------------------------------------------------------
# free-action invariants (cochain-level cores + family wrappers)


def xi_s3_cochains(cx: GComplex, a02: Cochain, a11: Cochain, a20: Cochain,
                   sigma, flux_guard: float = np.pi,
                   quantization_tol: float = QUANT_TOL) -> float:
    """Z2 invariant of a free antiunitary antipodal action on S^3.

    xi = (1/2)(F3, D3) - (a02, D2) - (a11_sigma, D1) - a20_{sigma,sigma}(P+),
    with the halfspace domain tower of the sigma action.  Quantization to
    {0, pi} is asserted.
    """
    grp = a11.group
    if grp.phi[sigma] != -1 or grp.mul(sigma, sigma) != grp.identity:
        raise PreconditionViolated("sigma must be an antiunitary involution")
    perm = cx.perms[sigma]
    if np.any(perm == np.arange(len(perm))):
        raise NotFree("sigma has a fixed vertex")
    doms = halfspace_domains_s3(cx, sigma)
    if doms.signs != {"s2": -1, "s1": 1}:
        raise BadDecomposition(
            "action does not satisfy dD3 = D2 - sigma D2, dD2 = D1 + sigma D1"
        )
    fsum = 0.0
    for s, c in doms["D3"].items():
        raw = 0.0
        for j in range(4):
            raw += ((-1) ** j) * a02.ev((), s[:j] + s[j + 1:])
        f = branch_lift(c * raw)
        if abs(f) > flux_guard:
            raise FluxGuardExceeded(f"|F3| = {abs(f):.3f} on {s}")
        fsum += f
    val = wrap_angle(
        0.5 * fsum
        - pair(a02, (), doms["D2"])
        - pair(a11, (sigma,), doms["D1"])
        - a20.ev((sigma, sigma), (doms["P+"],))
    )
    res = quantization_residual(val)
    if res > quantization_tol:
        raise NotQuantized(f"xi(S3) = {val:.8f} is {res:.2e} from {{0, pi}}")
    return val


def xi_s3(fam: MPSFamily, eq: EquivariantData, sigma, **kw) -> float:
    return xi_s3_cochains(
        fam.cx, fam.a02_cochain(eq.group), eq.a11_cochain(), eq.a20_cochain(),
        sigma, **kw,
    )


def free_cylinder_gamma2(cx: GComplex, a02: Cochain, a11: Cochain, sigma1,
                         strip: Chain, base: Chain) -> float:
    """Gauge-invariant higher Berry phase on one period of a free shift:
    (a02, strip) + (a11_sigma1, base), where the strip's far boundary is the
    sigma1 image of its base loop."""
    if a11.group.phi[sigma1] != 1:
        raise PreconditionViolated("sigma1 must be unitary")
    if not chain_equal(strip.boundary(), base.transform(sigma1) - base):
        raise BadDecomposition("strip boundary != sigma1(base) - base")
    return wrap_angle(pair(a02, (), strip) + pair(a11, (sigma1,), base))


def free_torus_gamma2(cx: GComplex, a02: Cochain, a11: Cochain, a20: Cochain,
                      sigma1, sigma2, plaquette: Chain, bottom: Chain,
                      left: Chain, corner: int) -> float:
    """Gauge-invariant higher Berry phase on the unit plaquette of two
    commuting free shifts."""
    grp = a11.group
    if grp.phi[sigma1] != 1 or grp.phi[sigma2] != 1:
        raise PreconditionViolated("shifts must be unitary")
    if grp.mul(sigma1, sigma2) != grp.mul(sigma2, sigma1):
        raise PreconditionViolated("shifts must commute")
    expected = bottom + left.transform(sigma1) - bottom.transform(sigma2) - left
    if not chain_equal(plaquette.boundary(), expected):
        raise BadDecomposition("plaquette boundary does not match its shifted edges")
    return wrap_angle(
        pair(a02, (), plaquette)
        + pair(a11, (sigma1,), bottom)
        - pair(a11, (sigma2,), left)
        + a20.ev((sigma1, sigma2), (corner,))
        - a20.ev((sigma2, sigma1), (corner,))
    )


# --------------------------------------------------------------------------
# soliton wrapper


def soliton_charge(fam: MPSFamily, loop_vertices, g, eq_group: GroupData) -> float:
    """Charge of the loop state along mesh vertices stabilized by unitary g."""
    if eq_group.phi[g] != 1:
        raise PreconditionViolated("soliton charge needs a unitary element")
    perm = fam.cx.perms[g]
    moved = [v for v in loop_vertices if int(perm[v]) != v]
    if moved:
        raise NotStabilized(f"{g!r} moves loop vertices {moved[:4]}")
    tensors = [fam.tensors[v] for v in loop_vertices]
    return mpsmod.soliton_charge(tensors, eq_group.u[g], gap_tol=fam.gap_tol)
