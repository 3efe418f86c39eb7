"""Operator-approximation matrices and their spectra.

All estimators here reduce to one of two k x k matrices built from
(possibly transformed) snapshot data: ``C0^+ C_tau`` acting on coefficient
vectors of observables, or its transpose ``C_tau^T C0^+`` obtained from the
least-squares fit ``min ||Psi_Y - M Psi_X||_F``. TICA and DMD are the
linear-dictionary special cases, VAC and EDMD the general ones, and an
indicator dictionary turns the same machinery into a Markov state model.

Coefficient convention: an eigenfunction is evaluated as
``phi_l(x) = vectors[:, l]^T psi(x)`` with the stored (possibly complex)
coefficient columns. The mode matrix ``eta`` then satisfies
``В psi(x) = eta @ phi(x)`` exactly for the same decomposition.
"""

from __future__ import annotations

import itertools
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import numkern
from .basis import (
    Dictionary,
    FeatureMatrices,
    IdentityDictionary,
    full_state_matrix,
)
from .data import DataPairs
from .numkern import DEFAULT_REL_TOL

#: Adjacent eigenvalues closer than this are reported as degenerate.
DEGENERACY_TOL = 1e-8

KIND_TICA = "tica"
KIND_DMD = "dmd"
KIND_VAC = "vac"
KIND_EDMD_KOOPMAN = "edmd_koopman"
KIND_EDMD_PF = "edmd_perron_frobenius"
KIND_MSM = "msm"


@dataclass(frozen=True)
class CovariancePair:
    """Instantaneous and time-lagged covariance estimates.

    Plain estimators: ``C0 = Psi_X Psi_X^T / (m-1)`` and
    ``C_tau = Psi_X Psi_Y^T / (m-1)``. The symmetrized variants average the
    data with its time reversal, which forces a real spectrum downstream at
    the price of an estimator bias off equilibrium.
    """

    C0: np.ndarray
    C_tau: np.ndarray
    m: int
    symmetrized: bool
    lag_time: float | None = None
    dictionary: Dictionary | None = None


@dataclass(frozen=True)
class OperatorApprox:
    """A finite-dimensional operator matrix tied to its dictionary."""

    M: np.ndarray
    kind: str
    dictionary: Dictionary | None
    lag_time: float | None
    m: int | None = None
    source_id: str = field(default_factory=lambda: uuid.uuid4().hex)


@dataclass(frozen=True)
class SpectralResult:
    """Eigenvalues with coefficient vectors and evaluable eigenfunctions.

    ``eigenvalues`` are complex, sorted by descending modulus unless the
    producing estimator documents another order (VAC sorts its real
    spectrum by descending value). Column ``l`` of ``vectors`` holds the
    coefficients of the l-th eigenfunction in the dictionary.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    kind: str
    lag_time: float | None = None
    dictionary: Dictionary | None = None
    m: int | None = None
    degenerate: bool = False
    conditioning_warning: bool = False
    undefined_modes: tuple[int, ...] = ()
    source_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def eigenfunction(self, ell: int):
        """Callable evaluating eigenfunction ``ell`` (0-based) pointwise.

        Accepts a single point or an (n, d) batch of points as rows.
        """
        if self.dictionary is None:
            raise ValueError("result carries no dictionary; eigenfunctions not evaluable")
        coeff = self.vectors[:, ell]
        dictionary = self.dictionary

        def phi(x):
            x = np.asarray(x, dtype=float)
            if x.ndim <= 1:
                return complex(coeff @ dictionary(x))
            return coeff @ dictionary.transform(x.T)

        return phi

    def real_eigenvalues(self, tol: float = numkern.IMAG_TOL) -> np.ndarray:
        """Downcast to a real spectrum, rejecting large imaginary parts."""
        worst = float(np.max(np.abs(self.eigenvalues.imag), initial=0.0))
        if worst > tol * max(1.0, float(np.max(np.abs(self.eigenvalues), initial=0.0))):
            raise ValueError(f"spectrum is not real: max |imag| = {worst:.3e}")
        return self.eigenvalues.real.copy()


@dataclass(frozen=True)
class KoopmanModes:
    """Mode vectors pairing with eigenfunctions for state reconstruction.

    ``eta[:, l]`` is the mode of eigenvalue ``eigenvalues[l]``; together
    with the eigenfunction values it reconstructs the full-state
    observable, ``x = sum_l phi_l(x) eta_l``.
    """

    Xi: np.ndarray
    B: np.ndarray
    eta: np.ndarray
    eigenvalues: np.ndarray
    source_id: str


def covariances(fm: FeatureMatrices, symmetrize: bool = False) -> CovariancePair:
    """Covariance estimates of transformed data, plain or symmetrized."""
    if fm.m < 2:
        raise ValueError(f"need at least 2 sample pairs, got {fm.m}")
    X, Y = fm.psi_X, fm.psi_Y
    if symmetrize:
        denom = 2.0 * (fm.m - 1)
        C0 = (X @ X.T + Y @ Y.T) / denom
        C_tau = (X @ Y.T + Y @ X.T) / denom
    else:
        denom = float(fm.m - 1)
        C0 = (X @ X.T) / denom
        C_tau = (X @ Y.T) / denom
    C0 = 0.5 * (C0 + C0.T)  # remove floating-point asymmetry
    if symmetrize:
        C_tau = 0.5 * (C_tau + C_tau.T)
    return CovariancePair(
        C0=C0,
        C_tau=C_tau,
        m=fm.m,
        symmetrized=symmetrize,
        lag_time=fm.lag_time,
        dictionary=fm.dictionary,
    )


def _matrices_of(data) -> tuple[np.ndarray, np.ndarray, float, Dictionary | None]:
    """Accept raw DataPairs or FeatureMatrices interchangeably."""
    if isinstance(data, FeatureMatrices):
        return data.psi_X, data.psi_Y, data.lag_time, data.dictionary
    if isinstance(data, DataPairs):
        return data.X, data.Y, data.lag_time, IdentityDictionary(data.d)
    raise TypeError(f"expected DataPairs or FeatureMatrices, got {type(data).__name__}")


def tica_amuse(data, rel_tol: float = DEFAULT_REL_TOL) -> SpectralResult:
    """TICA through SVD whitening of the first snapshot block.

    Steps: reduced SVD ``X = U S V^T``; whitened blocks
    ``Xw = S^{-1} U^T X`` and ``Yw = S^{-1} U^T Y``; eigendecomposition of
    ``Xw Yw^T``; coefficient vectors ``xi_l = U S^{-1} w_l``. The returned
    pairs solve ``C_tau xi = lambda C0 xi`` on the numerically retained
    rank subspace of ``X``.

    ``data`` may be raw pairs (linear basis) or feature matrices.
    """
    X, Y, lag_time, dictionary = _matrices_of(data)
    if X.shape[1] < 2:
        raise ValueError(f"need at least 2 sample pairs, got {X.shape[1]}")
    svd = numkern.reduced_svd(X, rel_tol)
    if svd.rank == 0:
        raise ValueError("snapshot matrix X has rank zero")
    Xw = (svd.U / svd.sigma).T @ X
    Yw = (svd.U / svd.sigma).T @ Y
    res = numkern.eig_dense(Xw @ Yw.T)
    vectors = numkern._normalize_columns((svd.U / svd.sigma) @ res.vectors)
    return SpectralResult(
        eigenvalues=res.values,
        vectors=vectors,
        kind=KIND_TICA,
        lag_time=lag_time,
        dictionary=dictionary,
        m=X.shape[1],
        degenerate=_has_degeneracy(res.values),
    )


def tica_direct(cov: CovariancePair, rel_tol: float = DEFAULT_REL_TOL) -> SpectralResult:
    """Eigendecomposition of ``C0^+ C_tau`` on the range of ``C0``.

    Directions below the rank cutoff of ``C0`` carry no variance and are
    excluded from the spectrum, matching the whitening route.
    """
    s, Q = np.linalg.eigh(0.5 * (cov.C0 + cov.C0.T))
    s, Q = s[::-1], Q[:, ::-1]
    keep = s > (rel_tol * s[0] if s.size and s[0] > 0 else np.inf)
    r = int(np.count_nonzero(keep))
    if r == 0:
        raise ValueError("C0 has rank zero")
    Qr = Q[:, :r]
    reduced = (Qr / s[:r]).T @ cov.C_tau @ Qr
    res = numkern.eig_dense(reduced)
    vectors = numkern._normalize_columns(Qr.astype(complex) @ res.vectors)
    return SpectralResult(
        eigenvalues=res.values,
        vectors=vectors,
        kind=KIND_TICA,
        lag_time=cov.lag_time,
        dictionary=cov.dictionary,
        m=cov.m,
        degenerate=_has_degeneracy(res.values),
    )


def dmd(data, variant: str = "standard", rel_tol: float = DEFAULT_REL_TOL) -> SpectralResult:
    """Eigenvalues and modes of the least-squares propagator ``Y X^+``.

    Works on the reduced SVD of ``X`` without forming the full matrix:
    eigenpairs of ``U^T Y V S^{-1}`` give the eigenvalues; the modes are
    ``U w_l`` (``variant="standard"``) or ``Y V S^{-1} w_l / lambda_l``
    (``variant="exact"``). Exact modes of eigenvalue zero are undefined and
    reported through ``undefined_modes`` with a zero column.
    """
    if variant not in ("standard", "exact"):
        raise ValueError(f"unknown DMD variant {variant!r}")
    X, Y, lag_time, dictionary = _matrices_of(data)
    if X.shape[1] < 1:
        raise ValueError("need at least 1 sample pair")
    svd = numkern.reduced_svd(X, rel_tol)
    if svd.rank == 0:
        raise ValueError("snapshot matrix X has rank zero")
    reduced = svd.U.T @ Y @ (svd.V / svd.sigma)
    res = numkern.eig_dense(reduced)
    undefined: tuple[int, ...] = ()
    if variant == "standard":
        modes = svd.U @ res.vectors
    else:
        lam_scale = float(np.max(np.abs(res.values), initial=0.0))
        raw = (Y @ (svd.V / svd.sigma)).astype(complex) @ res.vectors
        modes = np.zeros_like(raw)
        bad = []
        for j, lam in enumerate(res.values):
            if abs(lam) <= 1e-14 * max(lam_scale, 1.0):
                bad.append(j)
            else:
                modes[:, j] = raw[:, j] / lam
        undefined = tuple(bad)
    modes = numkern._normalize_columns(modes)
    return SpectralResult(
        eigenvalues=res.values,
        vectors=modes,
        kind=KIND_DMD,
        lag_time=lag_time,
        dictionary=dictionary,
        m=X.shape[1],
        degenerate=_has_degeneracy(res.values),
        undefined_modes=undefined,
    )


def vac(cov: CovariancePair, rel_tol: float = DEFAULT_REL_TOL) -> SpectralResult:
    """Generalized eigenproblem ``C_tau a = lambda C0 a`` of the pencil.

    Intended for reversible data with symmetrized covariances, where the
    spectrum is real; it is then sorted by descending value and each
    coefficient vector is scaled to ``a^T C0 a = 1``, the empirical unit
    norm with respect to the sampled density. Complex eigenvalues (possible
    with plain covariances on non-reversible data) are kept as computed in
    modulus order.
    """
    res = numkern.generalized_sym_eig(cov.C_tau, cov.C0, rel_tol)
    values, vectors = res.values, res.vectors
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    if values.size and np.max(np.abs(values.imag)) <= numkern.IMAG_TOL * scale:
        values = values.real.astype(complex)
        order = np.argsort(-values.real, kind="stable")
        values = values[order]
        vectors = vectors[:, order]
    norms = np.einsum("il,ij,jl->l", vectors.conj(), cov.C0.astype(complex), vectors)
    good = np.abs(norms) > 0
    vectors = np.where(good, vectors / np.sqrt(np.where(good, norms, 1.0)), vectors)
    return SpectralResult(
        eigenvalues=values,
        vectors=vectors,
        kind=KIND_VAC,
        lag_time=cov.lag_time,
        dictionary=cov.dictionary,
        m=cov.m,
        degenerate=_has_degeneracy(values),
    )


def edmd(
    fm: FeatureMatrices, operator: str = "koopman", rel_tol: float = DEFAULT_REL_TOL
) -> OperatorApprox:
    """Least-squares operator matrix on the dictionary features.

    ``operator="koopman"`` fits ``M = Psi_Y Psi_X^+ = C_tau^T C0^+``, whose
    left eigenvectors carry the eigenfunctions of the observable-evolution
    operator. ``operator="perron_frobenius"`` builds ``C_tau C0^+`` instead,
    approximating the density propagator with respect to the distribution
    underlying the data.
    """
    if operator not in ("koopman", "perron_frobenius"):
        raise ValueError(f"unknown operator {operator!r}")
    cov = covariances(fm, symmetrize=False)
    C0_inv = numkern.pinv(cov.C0, rel_tol)
    if not np.any(cov.C0):
        raise ValueError("feature matrix Psi_X has rank zero")
    if operator == "koopman":
        M = cov.C_tau.T @ C0_inv
        kind = KIND_EDMD_KOOPMAN
    else:
        M = cov.C_tau @ C0_inv
        kind = KIND_EDMD_PF
    return OperatorApprox(M=M, kind=kind, dictionary=fm.dictionary, lag_time=fm.lag_time, m=fm.m)


def eigenfunctions(op: OperatorApprox) -> SpectralResult:
    """Spectral decomposition of an operator matrix, kind-aware.

    For the Koopman least-squares matrix the eigenfunction coefficients are
    its left eigenvectors, computed as right eigenvectors of the transposed
    matrix; all other kinds use right eigenvectors directly. A defective or
    ill-conditioned eigenbasis is returned best-effort with
    ``conditioning_warning`` set.
    """
    M = op.M if op.kind != KIND_EDMD_KOOPMAN else op.M.T
    res = numkern.eig_dense(M)
    warn = False
    if res.vectors.shape[1] and res.vectors.shape[0] == res.vectors.shape[1]:
        cond = np.linalg.cond(res.vectors)
        warn = not np.isfinite(cond) or cond > 1e12
    return SpectralResult(
        eigenvalues=res.values,
        vectors=res.vectors,
        kind=op.kind,
        lag_time=op.lag_time,
        dictionary=op.dictionary,
        m=op.m,
        degenerate=_has_degeneracy(res.values),
        conditioning_warning=warn,
        source_id=op.source_id,
    )


def koopman_modes(op: OperatorApprox, B: np.ndarray | None = None) -> KoopmanModes:
    """Mode matrix ``eta`` solving ``B psi(x) = eta phi(x)`` exactly.

    ``B`` expresses the full-state observable in the dictionary; when
    omitted it is derived from the dictionary, which must represent the
    coordinate functions exactly. Requires a complete basis of
    eigenfunction coefficients (``Xi`` invertible).
    """
    if op.kind != KIND_EDMD_KOOPMAN:
        raise ValueError(f"modes require a koopman operator matrix, got kind {op.kind!r}")
    if B is None:
        if op.dictionary is None:
            raise ValueError("no B given and the operator carries no dictionary")
        B = full_state_matrix(op.dictionary)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    spec = eigenfunctions(op)
    Xi = spec.vectors
    if Xi.shape[0] != Xi.shape[1]:
        raise ValueError("eigenvector matrix is not square")
    cond = np.linalg.cond(Xi)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            f"eigenvector matrix is numerically singular (condition estimate {cond:.3e})"
        )
    eta = np.linalg.solve(Xi, B.T.astype(complex)).T
    return KoopmanModes(
        Xi=Xi, B=B, eta=eta, eigenvalues=spec.eigenvalues, source_id=op.source_id
    )


def spectral_result_to_config(spec: SpectralResult) -> dict:
    """JSON-serializable form: eigenvalues and vectors as [re, im] pairs."""
    from .basis import dictionary_to_config

    return {
        "kind": spec.kind,
        "lag_time": spec.lag_time,
        "m": spec.m,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in spec.eigenvalues],
        "vectors": [
            [[float(v.real), float(v.imag)] for v in spec.vectors[:, j]]
            for j in range(spec.vectors.shape[1])
        ],
        "degenerate": spec.degenerate,
        "conditioning_warning": spec.conditioning_warning,
        "undefined_modes": list(spec.undefined_modes),
        "dictionary": None if spec.dictionary is None else dictionary_to_config(spec.dictionary),
    }


def koopman_modes_to_config(modes: KoopmanModes) -> dict:
    """JSON-serializable form of a mode decomposition."""

    def c2(M):
        return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M, dtype=complex)]

    return {
        "eigenvalues": [[float(v.real), float(v.imag)] for v in modes.eigenvalues],
        "Xi": c2(modes.Xi),
        "B": np.asarray(modes.B, dtype=float).tolist(),
        "eta": c2(modes.eta),
    }


def _has_degeneracy(values: np.ndarray) -> bool:
    """Any pair of eigenvalues closer than the degeneracy tolerance."""
    n = values.size
    if n < 2:
        return False
    if n <= 2000:
        diff = np.abs(values[:, None] - values[None, :])
        diff[np.diag_indices(n)] = np.inf
        return bool(diff.min() < DEGENERACY_TOL)
    pairs = itertools.combinations(range(0, n, max(1, n // 2000)), 2)
    return any(abs(values[i] - values[j]) < DEGENERACY_TOL for i, j in pairs)
