"""Dense complex linear-algebra kernels and angle utilities.

All matrices in this project are tiny (at most a few hundred entries), so
every eigenproblem is solved by a full dense decomposition: at this scale
determinism and simplicity beat asymptotics.  The one global convention that
the rest of the library leans on is the eigenvector phase canonicalization
implemented in :func:`canonical_phase`.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDominantEigenvalue, NonFinite

TWO_PI = 2.0 * np.pi

DEFAULT_GAP_TOL = 1e-6


def _check_finite(M: np.ndarray, what: str = "matrix") -> None:
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise NonFinite(f"{what} contains non-finite entries")


def wrap_angle(theta):
    """Reduce an angle (or array of angles) to the canonical branch [0, 2pi)."""
    return np.mod(theta, TWO_PI)


def branch_lift(theta):
    """Lift an angle mod 2pi to the branch (-pi, pi].

    The lift satisfies branch_lift(a) == a (mod 2pi) and is odd except at the
    branch point, where the value pi is chosen (the branch is half-open at -pi).
    """
    lifted = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    lifted = np.where(lifted > np.pi, lifted - TWO_PI, lifted)
    if lifted.ndim == 0:
        return float(lifted)
    return lifted


def angle_dist(a, b=0.0) -> float:
    """Distance between two angles modulo 2pi."""
    return float(np.abs(branch_lift(np.asarray(a, dtype=float) - b)).max())


def quantization_residual(theta: float, allowed=(0.0, np.pi)) -> float:
    """Distance (mod 2pi) from ``theta`` to the nearest allowed value."""
    return min(angle_dist(theta, v) for v in allowed)


def nearest_allowed(theta: float, allowed=(0.0, np.pi)) -> float:
    return min(allowed, key=lambda v: angle_dist(theta, v))


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Fix the overall phase of a complex vector/matrix deterministically.

    The entry of largest modulus (lowest flat index on ties, which is what
    argmax returns) is made real positive.  Every module relies on this single
    convention for reproducible intermediate data; all reported invariants are
    insensitive to it.
    """
    flat = v.ravel()
    idx = int(np.argmax(np.abs(flat)))
    a = flat[idx]
    r = np.abs(a)
    if r == 0.0:
        return v
    out = v * (a.conjugate() / r)
    out_flat = out.ravel()
    out_flat[idx] = out_flat[idx].real
    return out


def dominant_eigenpair(M: np.ndarray, gap_tol: float = DEFAULT_GAP_TOL):
    """Eigenpair of the eigenvalue of strictly largest modulus.

    Returns (eigenvalue, eigenvector) with the eigenvector normalized to unit
    2-norm and phase-canonicalized.  Raises DegenerateDominantEigenvalue when
    the two largest moduli satisfy |mu2|/|mu1| > 1 - gap_tol.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonFinite(f"expected a square matrix, got shape {M.shape}")
    _check_finite(M)
    w, V = np.linalg.eig(M)
    moduli = np.abs(w)
    order = np.argsort(-moduli, kind="stable")
    i0 = order[0]
    if moduli[i0] == 0.0:
        raise DegenerateDominantEigenvalue("matrix is nilpotent to working precision")
    if len(w) > 1:
        ratio = moduli[order[1]] / moduli[i0]
        if ratio > 1.0 - gap_tol:
            raise DegenerateDominantEigenvalue(
                f"dominant eigenvalue modulus gap too small (ratio {ratio:.3e})"
            )
    vec = V[:, i0]
    vec = vec / np.linalg.norm(vec)
    vec = canonical_phase(vec)
    return complex(w[i0]), vec


def eigen_gap_ratio(M: np.ndarray) -> float:
    """|mu2|/|mu1| of the two largest eigenvalue moduli (0.0 for 1x1)."""
    w = np.linalg.eigvals(np.asarray(M, dtype=complex))
    moduli = np.sort(np.abs(w))[::-1]
    if len(moduli) < 2 or moduli[0] == 0.0:
        return 0.0
    return float(moduli[1] / moduli[0])


def svd(M: np.ndarray):
    """Thin SVD M = U diag(sigma) V^dagger with sigma descending."""
    M = np.asarray(M, dtype=complex)
    _check_finite(M)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    return U, s, Vh.conj().T


def polar_unitary(M: np.ndarray):
    """Nearest unitary to M (polar factor) and the defect ||M - U||_F."""
    U, s, Vh = np.linalg.svd(M)
    W = U @ Vh
    defect = float(np.linalg.norm(M - W * np.mean(s)))
    return W, defect


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T
