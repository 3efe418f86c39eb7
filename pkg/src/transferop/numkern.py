"""Dense linear-algebra kernels shared by all estimators.

Thin wrappers around LAPACK (through numpy/scipy) that pin down the
conventions the rest of the library relies on: relative rank truncation,
eigenvalue ordering, and eigenvector normalization. All functions are pure
and deterministic for identical inputs within one build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

#: Default multiplier on the largest singular value (or eigenvalue of a PSD
#: matrix) below which directions are treated as numerically rank deficient.
DEFAULT_REL_TOL = 1e-12

#: Magnitude below which imaginary parts may be discarded by callers.
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SvdResult:
    """Reduced singular value decomposition, truncated to numerical rank.

    Attributes
    ----------
    U : (d, r) ndarray
        Left singular vectors, orthonormal columns.
    sigma : (r,) ndarray
        Singular values, strictly positive and non-increasing.
    V : (m, r) ndarray
        Right singular vectors, orthonormal columns.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.size)


@dataclass(frozen=True)
class EigResult:
    """Dense eigendecomposition sorted by descending eigenvalue modulus.

    Ties in modulus are broken by descending real part, then descending
    imaginary part, so conjugate pairs appear in a fixed order. Eigenvalues
    are always stored as complex numbers; callers who expect a real spectrum
    downcast with an explicit tolerance.

    Attributes
    ----------
    values : (n,) complex ndarray
        Eigenvalues.
    vectors : (k, n) complex ndarray
        Right eigenvectors as columns, unit 2-norm, first nonzero component
        rotated to be positive real.
    left_vectors : (k, n) complex ndarray or None
        When requested, column ``u_l`` satisfies ``u_l^T M = values[l] u_l^T``.
    """

    values: np.ndarray
    vectors: np.ndarray
    left_vectors: np.ndarray | None = None


def _sort_order(values: np.ndarray) -> np.ndarray:
    """Indices sorting eigenvalues by (|lambda| desc, Re desc, Im desc)."""
    return np.lexsort((-values.imag, -values.real, -np.abs(values)))


def _normalize_columns(V: np.ndarray) -> np.ndarray:
    """Unit 2-norm columns with the first nonzero component positive real.

    The phase/sign convention removes the scaling freedom LAPACK leaves
    open, which makes repeated runs comparable componentwise.
    """
    V = np.array(V, dtype=complex)
    for j in range(V.shape[1]):
        col = V[:, j]
        norm = np.linalg.norm(col)
        if norm == 0.0:
            continue
        col = col / norm
        mags = np.abs(col)
        lead = np.argmax(mags > 1e-12 * mags.max()) if mags.max() > 0 else 0
        pivot = col[lead]
        if pivot != 0:
            col = col * (np.conj(pivot) / abs(pivot))
        # rotation can leave a negligible imaginary residue on the pivot
        V[:, j] = col
    return V


def reduced_svd(A: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> SvdResult:
    """Reduced SVD of ``A`` with relative truncation of singular values.

    Singular values below ``rel_tol * sigma_max`` are discarded together
    with their singular vectors. An all-zero matrix yields a rank-zero
    result with empty factors.

    Parameters
    ----------
    A : (d, m) ndarray
        Non-empty real matrix.
    rel_tol : float
        Relative truncation threshold, in (0, 1).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > rel_tol * s[0]))
    return SvdResult(U=U[:, :keep], sigma=s[:keep], V=Vt[:keep].T)


def pinv(A: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse computed via the truncated reduced SVD."""
    res = reduced_svd(A, rel_tol)
    if res.rank == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    return (res.V / res.sigma) @ res.U.T


def eig_dense(M: np.ndarray, want_left: bool = False) -> EigResult:
    """Dense (possibly complex) eigendecomposition of a square matrix.

    Parameters
    ----------
    M : (k, k) ndarray
        Square matrix.
    want_left : bool
        Also return left eigenvectors ``u`` with ``u^T M = lambda u^T``.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if want_left:
        values, vl, vr = scipy.linalg.eig(M, left=True, right=True)
        # scipy returns u with u^H M = lambda u^H; conjugate to get the
        # transpose convention u^T M = lambda u^T
        left = np.conj(vl)
    else:
        values, vr = scipy.linalg.eig(M)
        left = None
    order = _sort_order(values)
    values = values[order]
    vectors = _normalize_columns(vr[:, order])
    if left is not None:
        left = _normalize_columns(left[:, order])
    return EigResult(values=values, vectors=vectors, left_vectors=left)


def generalized_sym_eig(
    C_tau: np.ndarray, C0: np.ndarray, rel_tol: float = DEFAULT_REL_TOL
) -> EigResult:
    """Solve ``C_tau a = lambda C0 a`` for symmetric PSD ``C0`` by whitening.

    ``C0`` is diagonalized and inverted on its numerically retained rank
    subspace; the problem is solved for the whitened matrix
    ``C0^{-1/2} C_tau C0^{-1/2}`` and eigenvectors are mapped back through
    ``C0^{-1/2}``. Directions below the rank cutoff are excluded, so the
    result carries at most rank(``C0``) eigenpairs.

    Raises
    ------
    ValueError
        If ``C0`` has an eigenvalue below ``-1e-10`` relative to its
        spectral scale (not positive semidefinite), or shapes mismatch.
    """
    C0 = np.asarray(C0, dtype=float)
    C_tau = np.asarray(C_tau, dtype=float)
    if C0.ndim != 2 or C0.shape[0] != C0.shape[1]:
        raise ValueError(f"C0 must be square, got shape {C0.shape}")
    if C_tau.shape != C0.shape:
        raise ValueError(
            f"C_tau shape {C_tau.shape} does not match C0 shape {C0.shape}"
        )
    C0s = 0.5 * (C0 + C0.T)
    s, Q = scipy.linalg.eigh(C0s)
    s = s[::-1]
    Q = Q[:, ::-1]
    scale = max(1.0, float(s[0]) if s.size else 0.0)
    if s.size and s[-1] < -1e-10 * scale:
        raise ValueError(
            f"C0 is not positive semidefinite: smallest eigenvalue {s[-1]:.3e}"
        )
    keep = s > (rel_tol * s[0] if s.size and s[0] > 0 else np.inf)
    r = int(np.count_nonzero(keep))
    if r == 0:
        empty = np.zeros((C0.shape[0], 0), dtype=complex)
        return EigResult(values=np.zeros(0, dtype=complex), vectors=empty)
    W = Q[:, :r] / np.sqrt(s[:r])
    Mt = W.T @ C_tau @ W
    sym_scale = np.linalg.norm(Mt)
    if sym_scale == 0.0 or np.linalg.norm(Mt - Mt.T) <= 1e-12 * sym_scale:
        vals, vecs = scipy.linalg.eigh(0.5 * (Mt + Mt.T))
        values = vals.astype(complex)
        inner = vecs.astype(complex)
    else:
        res = eig_dense(Mt)
        values, inner = res.values, res.vectors
    order = _sort_order(values)
    values = values[order]
    vectors = _normalize_columns(W.astype(complex) @ inner[:, order])
    return EigResult(values=values, vectors=vectors)
