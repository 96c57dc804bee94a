"""Injective MPS machinery: canonical forms, overlap matrices, higher Berry data.

A translation-invariant MPS is a set of n matrices A^i of bond dimension D.
Everything here works in the right-canonical gauge

    sum_i A^i A^i+ = 1,         sum_i A^i+ L^2 A^i = L^2,

with L the diagonal matrix of descending Schmidt values, Tr L^2 = 1.

Edge data between two vertices is the dominant eigenpair (mu, X) of the mixed
transfer matrix T(X) = sum_i A_0^i X A_1^i+.  The stored overlap matrix X is
Frobenius-normalized and phase-canonicalized; the reversed edge is *defined*
as the Hermitian conjugate, which realizes the convention mu(-e) = mu(e)*,
X(-e) = X(e)+ exactly.

Sign convention: the edge Berry connection is a01 = -arg(mu), which for
bond-dimension-1 (product) families reduces to the pure-state connection
arg<psi(t0)|psi(t1)> per site.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import (
    CanonicalizationFailed,
    DegenerateDominantEigenvalue,
    FluxGuardExceeded,
    GaugeNotBlockDiagonal,
    MeshMismatch,
    NotACycle,
    NotCanonical,
    NotClose,
    NotInjective,
    NotNormalizable,
    NotQuantized,
    SchemaError,
    VanishingNorm,
    VanishingWilsonLoop,
)
from .gcomplex import Chain, Cochain, GComplex, sort_parity
from .numerics import branch_lift, dagger, dominant_eigenpair, wrap_angle

CANON_TOL = 1e-10
TRUNC_TOL = 1e-12
DEFAULT_GAP_TOL = 1e-6
FLUX_GUARD = np.pi / 2
WILSON_TOL = 1e-10


@dataclass
class MPSTensor:
    """Right-canonical site tensor: A is (n, D, D), lam the Schmidt diagonal."""

    A: np.ndarray
    lam: np.ndarray

    @property
    def phys_dim(self) -> int:
        return self.A.shape[0]

    @property
    def bond_dim(self) -> int:
        return self.A.shape[1]


def canonical_residuals(t: MPSTensor):
    """(right identity, Schmidt fixed point, Tr L^2 - 1) residuals."""
    D = t.bond_dim
    r1 = np.linalg.norm(
        np.einsum("iab,icb->ac", t.A, t.A.conj()) - np.eye(D)
    )
    lam2 = np.diag(t.lam ** 2)
    r2 = np.linalg.norm(
        np.einsum("iab,bc,icd->ad", t.A.conj().transpose(0, 2, 1), lam2, t.A)
        - lam2
    )
    r3 = abs(np.sum(t.lam ** 2) - 1.0)
    return float(r1), float(r2), float(r3)


def validate_canonical(t: MPSTensor, canon_tol: float = CANON_TOL) -> None:
    r1, r2, r3 = canonical_residuals(t)
    if max(r1, r2, r3) > canon_tol:
        raise NotCanonical(
            f"canonical residuals ({r1:.2e}, {r2:.2e}, {r3:.2e}) exceed {canon_tol}"
        )
    if np.any(np.diff(t.lam) > 1e-12) or np.any(t.lam <= 0):
        raise NotCanonical("Schmidt values must be positive and descending")


def transfer_matrix(t0: MPSTensor, t1: MPSTensor | None = None) -> np.ndarray:
    """Matrix of X -> sum_i A0^i X A1^i+ on row-major vec(X)."""
    t1 = t0 if t1 is None else t1
    if t0.phys_dim != t1.phys_dim:
        raise NotClose("physical dimensions differ")
    M = np.zeros((t0.bond_dim * t1.bond_dim,) * 2, dtype=complex)
    for i in range(t0.phys_dim):
        M += np.kron(t0.A[i], t1.A[i].conj())
    return M


def _hermitize_fixed_point(vec: np.ndarray, D: int) -> np.ndarray:
    X = vec.reshape(D, D)
    tr = np.trace(X)
    if abs(tr) > 1e-14:
        X = X * (tr.conjugate() / abs(tr))
    return 0.5 * (X + dagger(X))


def right_canonicalize(raw: np.ndarray, trunc_tol: float = TRUNC_TOL) -> MPSTensor:
    """Bring a raw site tensor (n, D, D) to right-canonical form.

    Schmidt values below trunc_tol are removed (reducing D).  Raises
    NotInjective when the transfer matrix has no isolated dominant eigenvalue
    and NotNormalizable when it vanishes.
    """
    A = np.asarray(raw, dtype=complex)
    if A.ndim == 1:  # plain state vector: D = 1 product tensor
        A = A.reshape(-1, 1, 1)
    n, D, _ = A.shape
    if D == 1:
        nrm = np.linalg.norm(A.ravel())
        if nrm == 0.0:
            raise NotNormalizable("zero tensor")
        return MPSTensor(A / nrm, np.array([1.0]))
    t = MPSTensor(A, np.full(D, 1.0 / np.sqrt(D)))
    try:
        mu, vec = dominant_eigenpair(transfer_matrix(t), gap_tol=1e-12)
    except DegenerateDominantEigenvalue as exc:
        raise NotInjective(f"degenerate transfer spectrum: {exc}") from exc
    if mu.real <= 0 or abs(mu.imag) > 1e-9 * abs(mu):
        raise NotNormalizable(f"dominant transfer eigenvalue {mu} not positive")
    A = A / np.sqrt(mu.real)
    X = _hermitize_fixed_point(vec, D)
    w, U = np.linalg.eigh(X)
    if w.max() <= 0:
        w, U = -w[::-1], U[:, ::-1]
    keep = w > trunc_tol * w.max()
    Z = U[:, keep] * np.sqrt(w[keep])
    Zinv = np.linalg.pinv(Z)
    A = np.einsum("ab,ibc,cd->iad", Zinv, A, Z)
    Dk = A.shape[1]
    # left fixed point of the now right-normalized tensor gives L^2
    tk = MPSTensor(A, np.full(Dk, 1.0 / np.sqrt(Dk)))
    muL, vecL = dominant_eigenpair(transfer_matrix(tk).conj().T, gap_tol=1e-12)
    Y = _hermitize_fixed_point(vecL, Dk)
    wy, Uy = np.linalg.eigh(Y)
    if wy.max() <= 0:
        wy, Uy = -wy[::-1], Uy[:, ::-1]
    order = np.argsort(-wy, kind="stable")
    wy, Uy = wy[order], Uy[:, order]
    keep = wy > trunc_tol * wy.max()
    wy, Uy = wy[keep], Uy[:, keep]
    A = np.einsum("ab,ibc,cd->iad", dagger(Uy), A, Uy)
    lam = np.sqrt(wy / wy.sum())
    out = MPSTensor(A, lam)
    r1, _, _ = canonical_residuals(out)
    if r1 > 1e-8:
        # truncation broke right-normalization; one more pass restores it
        out = right_canonicalize(out.A, trunc_tol)
    validate_canonical(out, 1e-8)
    return out


def injectivity_check(t: MPSTensor, gap_tol: float = DEFAULT_GAP_TOL,
                      eig_tol: float = 1e-8) -> dict:
    """Verify the transfer matrix has an isolated dominant eigenvalue 1 with
    fixed point proportional to the identity.  Returns a quality report."""
    validate_canonical(t)
    M = transfer_matrix(t)
    try:
        mu, vec = dominant_eigenpair(M, gap_tol=gap_tol)
    except DegenerateDominantEigenvalue as exc:
        raise NotInjective(str(exc)) from exc
    if abs(mu - 1.0) > eig_tol:
        raise NotInjective(f"dominant transfer eigenvalue {mu} != 1")
    D = t.bond_dim
    overlap = abs(np.vdot(np.eye(D).ravel() / np.sqrt(D), vec))
    if overlap < 1.0 - 1e-8:
        raise NotInjective("dominant eigenvector is not the identity fixed point")
    return {
        "mu": mu,
        "gap_ratio": numerics.eigen_gap_ratio(M),
        "identity_overlap": float(overlap),
    }


def apply_gauge(t: MPSTensor, theta: float, W: np.ndarray) -> MPSTensor:
    """Vertex gauge transformation A^i -> e^{i theta} W+ A^i W, [W, L] = 0."""
    W = np.asarray(W, dtype=complex)
    if np.linalg.norm(W @ np.diag(t.lam) - np.diag(t.lam) @ W) > 1e-10:
        raise GaugeNotBlockDiagonal("W does not commute with the Schmidt diagonal")
    A = np.exp(1j * theta) * np.einsum("ab,ibc,cd->iad", dagger(W), t.A, W)
    return MPSTensor(A, t.lam.copy())


def to_left_canonical(t: MPSTensor) -> np.ndarray:
    """Left-canonical matrices B^i = L A^i L^{-1} (test helper only).

    Implemented with elementwise division by the Schmidt values rather than an
    explicit inverse; still ill-conditioned when Schmidt values are tiny, so
    production code sticks to the right-canonical form.
    """
    return (t.lam[None, :, None] * t.A) / t.lam[None, None, :]


@dataclass
class EdgeOverlap:
    """Dominant eigendata of an edge's mixed transfer matrix."""

    mu: complex
    X: np.ndarray

    @property
    def a01(self) -> float:
        """Edge Berry connection; equals arg<psi0|psi1> per site for D=1."""
        return float(-np.angle(self.mu))


def edge_overlap(t0: MPSTensor, t1: MPSTensor,
                 gap_tol: float = DEFAULT_GAP_TOL) -> EdgeOverlap:
    """Overlap matrix between two injective canonical tensors ("close" pair)."""
    M = transfer_matrix(t0, t1)
    try:
        mu, vec = dominant_eigenpair(M, gap_tol=gap_tol)
    except DegenerateDominantEigenvalue as exc:
        raise NotClose(str(exc)) from exc
    X = vec.reshape(t0.bond_dim, t1.bond_dim)
    return EdgeOverlap(mu=mu, X=X)


def wilson_triangle(t0: MPSTensor, t1: MPSTensor, t2: MPSTensor,
                    X01: np.ndarray, X12: np.ndarray, X20: np.ndarray,
                    wilson_tol: float = WILSON_TOL) -> float:
    """Higher Berry connection of one triangle: the phase of the
    Schmidt-weighted Wilson loop Tr[L0^{2/3} X01 L1^{2/3} X12 L2^{2/3} X20]."""
    w0 = t0.lam ** (2.0 / 3.0)
    w1 = t1.lam ** (2.0 / 3.0)
    w2 = t2.lam ** (2.0 / 3.0)
    M = (w0[:, None] * X01) @ (w1[:, None] * X12) @ (w2[:, None] * X20)
    tr = np.trace(M)
    if abs(tr) < wilson_tol:
        raise VanishingWilsonLoop(f"|trace| = {abs(tr):.2e}")
    return float(np.angle(tr))


class MPSFamily:
    """Injective MPS per vertex of a G-complex plus all derived edge/triangle data.

    Frozen after construction; edge and triangle tables are keyed by the
    ascending-sorted simplex with orientation handled on access.
    """

    def __init__(self, cx: GComplex, tensors, gap_tol: float = DEFAULT_GAP_TOL,
                 wilson_tol: float = WILSON_TOL, threads: int = 1):
        if len(tensors) != cx.n_simplices(0):
            raise MeshMismatch(
                f"{len(tensors)} tensors for {cx.n_simplices(0)} vertices"
            )
        self.cx = cx
        self.tensors = list(tensors)
        self.gap_tol = gap_tol
        self.edges = {}
        self.tri_a02 = {}
        self.quality = {"min_abs_mu": 1.0, "max_gap_ratio": 0.0}

        def edge_job(e):
            u, v = e
            try:
                ov = edge_overlap(self.tensors[u], self.tensors[v], gap_tol)
            except NotClose as exc:
                raise NotClose(f"edge {e}: {exc}") from exc
            return e, ov

        edge_list = cx.simplices.get(1, [])
        for e, ov in _run_jobs(edge_job, edge_list, threads):
            self.edges[e] = ov
            self.quality["min_abs_mu"] = min(self.quality["min_abs_mu"], abs(ov.mu))

        def tri_job(s):
            u, v, w = s
            a02 = wilson_triangle(
                self.tensors[u], self.tensors[v], self.tensors[w],
                self.X(u, v), self.X(v, w), self.X(w, u), wilson_tol,
            )
            return s, a02

        for s, a02 in _run_jobs(tri_job, cx.simplices.get(2, []), threads):
            self.tri_a02[s] = a02

    # -- oriented accessors -----------------------------------------------

    def X(self, u: int, v: int) -> np.ndarray:
        if u < v:
            return self.edges[(u, v)].X
        return dagger(self.edges[(v, u)].X)

    def mu(self, u: int, v: int) -> complex:
        if u < v:
            return self.edges[(u, v)].mu
        return self.edges[(v, u)].mu.conjugate()

    def a01(self, u: int, v: int) -> float:
        return float(-np.angle(self.mu(u, v)))

    def a02(self, tup) -> float:
        stup, sign = sort_parity(tuple(tup))
        return sign * self.tri_a02[stup]

    # -- cochain exports ----------------------------------------------------

    def a01_cochain(self, group=None) -> Cochain:
        f = Cochain(self.cx, 0, 1, group)
        for (u, v) in self.cx.simplices[1]:
            f.set((), (u, v), self.a01(u, v))
        return f

    def a02_cochain(self, group=None) -> Cochain:
        f = Cochain(self.cx, 0, 2, group)
        for s in self.cx.simplices[2]:
            f.set((), s, self.tri_a02[s])
        return f

    def flux2(self, tri) -> float:
        """Berry flux through a triangle, lifted to (-pi, pi]."""
        u, v, w = tri
        return branch_lift(self.a01(v, w) - self.a01(u, w) + self.a01(u, v))

    def flux3(self, tet) -> float:
        """Higher Berry flux through a tetrahedron, lifted to (-pi, pi]."""
        raw = 0.0
        for j in range(4):
            face = tet[:j] + tet[j + 1:]
            raw += ((-1) ** j) * self.a02(face)
        return branch_lift(raw)


def _run_jobs(fn, items, threads):
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# --------------------------------------------------------------------------
# invariants from the family alone


def _flux_sum(fam: MPSFamily, chain: Chain, flux_fn, flux_guard: float):
    if not chain.boundary().is_zero():
        raise NotACycle("integration chain has nonempty boundary")
    total = 0.0
    worst = 0.0
    for s, c in chain.items():
        if abs(c) != 1:
            raise NotACycle(f"chain coefficient {c} on {s}; expected +-1")
        f = branch_lift(c * _raw_d(fam, s, flux_fn))
        if abs(f) > flux_guard:
            raise FluxGuardExceeded(
                f"|flux| = {abs(f):.3f} > {flux_guard:.3f} on simplex {s}"
            )
        worst = max(worst, abs(f))
        total += f
    return total, worst


def _raw_d(fam: MPSFamily, s, flux_fn):
    if flux_fn == "a01":
        u, v, w = s
        return fam.a01(v, w) - fam.a01(u, w) + fam.a01(u, v)
    raw = 0.0
    for j in range(4):
        face = s[:j] + s[j + 1:]
        raw += ((-1) ** j) * fam.a02(face)
    return raw


def chern_from_a01(fam: MPSFamily, surface: Chain, flux_guard: float = FLUX_GUARD):
    """Chern number from the translation-induced Berry connection."""
    total, worst = _flux_sum(fam, surface, "a01", flux_guard)
    nu = int(np.rint(total / (2 * np.pi)))
    return nu, abs(total / (2 * np.pi) - nu), worst


def ddks(fam: MPSFamily, volume: Chain, flux_guard: float = FLUX_GUARD):
    """DDKS number: branch-lifted higher Berry flux summed over a 3-cycle.

    Returns (integer, rounding residual, max per-tet |flux|)."""
    total, worst = _flux_sum(fam, volume, "a02", flux_guard)
    nu = int(np.rint(total / (2 * np.pi)))
    return nu, abs(total / (2 * np.pi) - nu), worst


def gamma1(fam: MPSFamily, loop: Chain) -> float:
    """Ordinary Berry phase of a 1-cycle (mod 2pi)."""
    if not loop.boundary().is_zero():
        raise NotACycle("loop is not closed")
    return wrap_angle(sum(c * fam.a01(*s) for s, c in loop.items()))


def gamma2(fam: MPSFamily, surface: Chain, quantization_tol: float | None = None) -> float:
    """Higher Berry phase of a 2-cycle (mod 2pi).

    Pass ``quantization_tol`` when an orientation-compatible antiunitary
    stabilizer exists, to assert the value lands in {0, pi}.
    """
    if not surface.boundary().is_zero():
        raise NotACycle("surface is not closed")
    val = wrap_angle(sum(c * fam.a02(s) for s, c in surface.items()))
    if quantization_tol is not None:
        res = numerics.quantization_residual(val)
        if res > quantization_tol:
            raise NotQuantized(f"gamma2 = {val:.6f} is {res:.2e} from {{0, pi}}")
    return val


# --------------------------------------------------------------------------
# soliton contraction


def soliton_charge(tensors, u_g: np.ndarray, gap_tol: float = DEFAULT_GAP_TOL) -> float:
    """Symmetry charge of the loop state built from site tensors and overlap
    matrices, relative to the uniform state at the first loop point.

    The loop state |l> = sum tr[A(t1) X(t1,t2) ... A(tN) X(tN,t1)] |i1..iN| is
    never materialized: <l|g|l> is contracted from per-site transfer blocks
    with u_g inserted.  Returns arg<l|g|l> - arg<t1|g|t1> in [0, 2pi)."""
    N = len(tensors)
    Xs = [edge_overlap(tensors[x], tensors[(x + 1) % N], gap_tol).X for x in range(N)]

    def site_block(t, X, u):
        AX = np.einsum("iab,bc->iac", t.A, X)
        blk = 0.0j
        for i in range(t.phys_dim):
            for j in range(t.phys_dim):
                if u[i, j] != 0:
                    blk = blk + u[i, j] * np.kron(AX[j], AX[i].conj())
        return blk

    ident = np.eye(tensors[0].phys_dim)

    def contract(u):
        M = site_block(tensors[0], Xs[0], u)
        for x in range(1, N):
            M = M @ site_block(tensors[x], Xs[x], u)
        return np.trace(M)

    num = contract(np.asarray(u_g, dtype=complex))
    nrm = contract(ident)
    if abs(nrm) < 1e-300 or abs(num) < 1e-300:
        raise VanishingNorm("loop state contraction vanished")
    t1 = tensors[0]
    ref_blk = 0.0j
    for i in range(t1.phys_dim):
        for j in range(t1.phys_dim):
            if u_g[i, j] != 0:
                ref_blk = ref_blk + u_g[i, j] * np.kron(t1.A[j], t1.A[i].conj())
    ref = np.trace(np.linalg.matrix_power(ref_blk, N))
    if abs(ref) < 1e-300:
        raise VanishingNorm("reference state charge vanished")
    return wrap_angle(np.angle(num) - np.angle(ref))


# --------------------------------------------------------------------------
# family file format

FAMILY_SCHEMA_VERSION = 1


def family_to_json(fam: MPSFamily) -> dict:
    verts = []
    for t in fam.tensors:
        verts.append({
            "n": t.phys_dim,
            "D": t.bond_dim,
            "lambda": [float(x) for x in t.lam],
            "tensors": [
                [[[float(z.real), float(z.imag)] for z in row] for row in mat]
                for mat in t.A
            ],
        })
    return {
        "schema_version": FAMILY_SCHEMA_VERSION,
        "mesh": {"dim": fam.cx.dim, **fam.cx.meta},
        "vertices": verts,
    }


def family_from_json(doc: dict, cx: GComplex, gap_tol: float = DEFAULT_GAP_TOL,
                     threads: int = 1) -> MPSFamily:
    """Load, re-canonicalize and validate a family file against a mesh."""
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise SchemaError("family file must be an object with a 'vertices' list")
    if doc.get("schema_version") != FAMILY_SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
    mesh = doc.get("mesh", {})
    if mesh.get("dim") != cx.dim:
        raise MeshMismatch(f"family mesh dim {mesh.get('dim')} != complex dim {cx.dim}")
    verts = doc["vertices"]
    if len(verts) != cx.n_simplices(0):
        raise MeshMismatch(
            f"family has {len(verts)} vertices, mesh has {cx.n_simplices(0)}"
        )
    tensors = []
    for vi, rec in enumerate(verts):
        try:
            A = np.array(
                [[[complex(re, im) for (re, im) in row] for row in mat]
                 for mat in rec["tensors"]],
                dtype=complex,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"vertex {vi}: malformed tensor data ({exc})") from exc
        try:
            t = right_canonicalize(A)
            injectivity_check(t, gap_tol=gap_tol)
        except NotInjective as exc:
            raise NotInjective(f"vertex {vi}: {exc}") from exc
        except (NotNormalizable, NotCanonical) as exc:
            raise CanonicalizationFailed(f"vertex {vi}: {exc}") from exc
        tensors.append(t)
    return MPSFamily(cx, tensors, gap_tol=gap_tol, threads=threads)


def save_family(fam: MPSFamily, path) -> None:
    with open(path, "w") as fh:
        json.dump(family_to_json(fam), fh, sort_keys=True)


def load_family(path, cx: GComplex, **kw) -> MPSFamily:
    with open(path) as fh:
        return family_from_json(json.load(fh), cx, **kw)
