"""Exactly solvable dimerized two-spin-per-site chain and its symmetry data.

The chain carries two spin-S operators s^L, s^R on every site.  At a unit
4-vector n = (n0, n1, n2, n3) the Hamiltonian is a staggered field
(n1, n2, n3) . (s^R - s^L) plus a dimerized exchange of strength |n0| that
couples (s^L_j, s^R_j) for n0 <= 0 and (s^R_j, s^L_{j+1}) for n0 >= 0.  The
ground state is an exact product of two-spin pair states, so the vertex MPS
is available in closed form: a D = 1 product tensor on the intra-dimer side,
and the Schmidt decomposition of the inter-bond pair state on the other side.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateGroundState, UnknownName, WrongSector
from .mps import MPSTensor
from .numerics import canonical_phase, svd

GAP_TOL = 1e-10


def spin_ops(two_s: int):
    """Spin-S operators (Sx, Sy, Sz) for 2S = two_s, m-descending basis."""
    if two_s < 1:
        raise ValueError("two_s must be >= 1")
    S = two_s / 2.0
    dim = two_s + 1
    m = S - np.arange(dim)
    Sz = np.diag(m).astype(complex)
    Sp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        Sp[k - 1, k] = np.sqrt(S * (S + 1) - m[k] * (m[k] + 1))
    Sx = 0.5 * (Sp + Sp.conj().T)
    Sy = -0.5j * (Sp - Sp.conj().T)
    return Sx, Sy, Sz


def as_point(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (4,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError(f"model point must be a unit 4-vector, got {n}")
    return n


def pair_hamiltonian(n, two_s: int, bond: str) -> np.ndarray:
    """Two-spin Hamiltonian of the designated bond at parameter point n.

    bond="intra": pair (s^L_j, s^R_j), requires n0 <= 0;
    bond="inter": pair (s^R_j, s^L_{j+1}), requires n0 >= 0.
    The staggered field gives -n.s on the L spin and +n.s on the R spin.
    """
    n = as_point(n)
    ops = spin_ops(two_s)
    dim = two_s + 1
    eye = np.eye(dim)
    exchange = sum(np.kron(s, s) for s in ops)
    f = n[1] * ops[0] + n[2] * ops[1] + n[3] * ops[2]
    if bond == "intra":
        if n[0] > 1e-12:
            raise WrongSector("intra-dimer bond only applies for n0 <= 0")
        return np.kron(-f, eye) + np.kron(eye, f) + abs(n[0]) * exchange
    if bond == "inter":
        if n[0] < -1e-12:
            raise WrongSector("inter-dimer bond only applies for n0 >= 0")
        return np.kron(f, eye) + np.kron(eye, -f) + abs(n[0]) * exchange
    raise UnknownName(f"bond {bond!r}")


def pair_ground_state(n, two_s: int, bond: str):
    """Lowest eigenvector of the pair Hamiltonian with its gap."""
    h = pair_hamiltonian(n, two_s, bond)
    w, v = np.linalg.eigh(h)
    gap = float(w[1] - w[0])
    if gap < GAP_TOL:
        raise DegenerateGroundState(f"pair gap {gap:.2e} at n = {n}")
    return float(w[0]), canonical_phase(v[:, 0]), gap


def ground_mps(n, two_s: int, trunc_tol: float = 1e-12) -> MPSTensor:
    """Closed-form right-canonical ground-state MPS at parameter point n.

    n0 <= 0: the per-site pair state as a D = 1 product tensor.
    n0 >= 0: the inter-bond pair state phi = sum_a lam_a |r_a>|l_a> gives
    A^{(iL, iR)}_{ab} = l_a(iL) lam_b r_b(iR), which satisfies the
    right-canonical identities with Schmidt diagonal lam exactly.
    Points on n0 = 0 use the D = 1 branch (both branches coincide there).
    """
    n = as_point(n)
    dim = two_s + 1
    if n[0] <= 0:
        _, psi, _ = pair_ground_state(n, two_s, "intra")
        return MPSTensor(psi.reshape(dim * dim, 1, 1), np.array([1.0]))
    _, phi, _ = pair_ground_state(n, two_s, "inter")
    M = phi.reshape(dim, dim)  # indices (iR_j, iL_{j+1})
    U, s, V = svd(M)
    keep = s > trunc_tol
    U, s, V = U[:, keep], s[keep], V[:, keep]
    s = s / np.sqrt(np.sum(s ** 2))
    Vh = V.conj().T
    A = np.einsum("aL,Rb->LRab", Vh, U * s[None, :]).reshape(dim * dim, len(s), len(s))
    return MPSTensor(A, s.copy())


_PARAM = {
    "T": np.diag([1, -1, -1, -1]),
    "C2x": np.diag([1, 1, -1, -1]),
    "C2y": np.diag([1, -1, 1, -1]),
    "C2z": np.diag([1, -1, -1, 1]),
    "C2zT": np.diag([1, 1, 1, -1]),
    "Q4z": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, -1, 0, 0], [0, 0, 0, 1]]),
}


def group_rep(name: str, two_s: int):
    """On-site representation of a named symmetry: (u, phi, 4x4 parameter map).

    u acts on the doubled site (two spins), where all the pi-rotations and
    time reversal compose linearly (the per-spin projective signs square away).
    """
    Sx, Sy, Sz = spin_ops(two_s)

    def onsite(gen):
        r = expm(1j * gen)
        return np.kron(r, r)

    if name == "T":
        return onsite(np.pi * Sy), -1, _PARAM["T"]
    if name == "C2x":
        return onsite(np.pi * Sx), 1, _PARAM["C2x"]
    if name == "C2y":
        return onsite(np.pi * Sy), 1, _PARAM["C2y"]
    if name == "C2z":
        return onsite(np.pi * Sz), 1, _PARAM["C2z"]
    if name == "C2zT":
        u = onsite(np.pi * Sz) @ onsite(np.pi * Sy)
        return u, -1, _PARAM["C2zT"]
    if name == "Q4z":
        return onsite(0.5 * np.pi * Sz), 1, _PARAM["Q4z"]
    raise UnknownName(f"unknown symmetry name {name!r}")


def model_tensors(cx, two_s: int):
    """Ground-state MPS at every vertex of an S^3 mesh."""
    return [ground_mps(v, two_s) for v in cx.vertices]


def circle_points(count: int, offset: float = 0.0) -> np.ndarray:
    """Evenly spaced points on the C2x-invariant circle {n2 = n3 = 0}."""
    ang = offset + 2 * np.pi * np.arange(count) / count
    pts = np.zeros((count, 4))
    pts[:, 0] = np.cos(ang)
    pts[:, 1] = np.sin(ang)
    return pts
