"""Dictionaries of basis functions and their evaluation on snapshot data.

A dictionary maps a d-dimensional state to a k-vector of feature values.
Evaluating it on a pair set produces the transformed matrices ``psi_X``
and ``psi_Y`` that the general estimators operate on. Available families:
plain identity, mean-centered identity, multivariate monomials, indicator
functions on a box grid, and Gaussian radial basis functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataPairs


class DomainError(ValueError):
    """A point fell outside the domain an indicator grid partitions."""


class UnrepresentableError(ValueError):
    """The dictionary cannot express the requested function exactly."""


class Dictionary:
    """Base class: a fixed set of k scalar functions of a d-vector."""

    kind: str = ""
    d: int
    k: int

    def transform(self, P: np.ndarray) -> np.ndarray:
        """Evaluate all k functions on points given as columns of ``P``.

        Parameters
        ----------
        P : (d, m) ndarray

        Returns
        -------
        (k, m) ndarray
        """
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        """Feature vector of a single point."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return self.transform(x[:, None])[:, 0]


class IdentityDictionary(Dictionary):
    """psi(x) = x."""

    kind = "identity"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        self.d = d
        self.k = d

    def transform(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        _check_dim(self, P)
        return P.copy()


class CenteredIdentityDictionary(Dictionary):
    """psi(x) = x - c with the center fitted once from data.

    The center is the column mean of the first ``X`` block the dictionary
    is evaluated on and is then frozen, so later evaluations (including on
    the paired ``Y`` block and on new points) subtract the same statistics.
    Centering removes the stationary component from equilibrium data, so
    the leading estimated eigenpair is the slowest dynamical one instead of
    the constant.
    """

    kind = "identity_centered"

    def __init__(self, d: int, center=None):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        self.d = d
        self.k = d
        self.center = None if center is None else np.asarray(center, dtype=float).reshape(d)

    def fit_center(self, P: np.ndarray) -> None:
        """Freeze the center to the column mean of ``P`` if not yet set."""
        if self.center is None:
            self.center = np.asarray(P, dtype=float).mean(axis=1)

    def transform(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        _check_dim(self, P)
        if self.center is None:
            raise ValueError("center not fitted; evaluate on data first or pass one")
        return P - self.center[:, None]


class MonomialDictionary(Dictionary):
    """All monomials of total degree <= max_degree, graded-lex order.

    Exponent tuples are enumerated by ascending total degree (constant
    first) and, within one degree, lexicographically descending, e.g. for
    d=2, degree 2: x^2, x*y, y^2. The fixed order makes coefficient
    vectors reproducible across runs.
    """

    kind = "monomials"

    def __init__(self, d: int, max_degree: int):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        if max_degree < 0:
            raise ValueError(f"max_degree must be >= 0, got {max_degree}")
        self.d = d
        self.max_degree = max_degree
        self.exponents = np.array(
            [e for total in range(max_degree + 1) for e in _degree_exponents(d, total)],
            dtype=int,
        )
        self.k = self.exponents.shape[0]

    def transform(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        _check_dim(self, P)
        out = np.ones((self.k, P.shape[1]))
        for i, exps in enumerate(self.exponents):
            for axis, e in enumerate(exps):
                if e:
                    out[i] *= P[axis] ** e
        return out


class IndicatorGridDictionary(Dictionary):
    """Indicator functions of a regular box partition of a rectangle.

    Boxes are half-open ``[a, b)`` along every axis except that the last
    box per axis includes its upper face, so the boxes cover the domain
    disjointly. Points outside the rectangle raise :class:`DomainError`.
    Box index order is C-style (first axis slowest).
    """

    kind = "indicator_grid"

    def __init__(self, lower, upper, counts):
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        counts = np.asarray(counts, dtype=int).reshape(-1)
        if not (lower.size == upper.size == counts.size):
            raise ValueError("lower, upper, counts must have equal length")
        if np.any(counts < 1):
            raise ValueError(f"box counts must be positive, got {counts}")
        if np.any(upper <= lower):
            raise ValueError("upper must exceed lower componentwise")
        self.lower, self.upper, self.counts = lower, upper, counts
        self.d = lower.size
        self.k = int(np.prod(counts))

    def box_indices(self, P: np.ndarray) -> np.ndarray:
        """Flat box index per column of ``P``."""
        P = np.asarray(P, dtype=float)
        _check_dim(self, P)
        inside = (P >= self.lower[:, None]) & (P <= self.upper[:, None])
        if not inside.all():
            j = int(np.argmin(inside.all(axis=0)))
            raise DomainError(
                f"point {P[:, j].tolist()} lies outside the grid domain "
                f"[{self.lower.tolist()}, {self.upper.tolist()}]"
            )
        width = (self.upper - self.lower) / self.counts
        idx = np.floor((P - self.lower[:, None]) / width[:, None]).astype(int)
        idx = np.minimum(idx, (self.counts - 1)[:, None])  # close the last box
        return np.ravel_multi_index(tuple(idx), tuple(self.counts))

    def transform(self, P: np.ndarray) -> np.ndarray:
        flat = self.box_indices(P)
        out = np.zeros((self.k, flat.size))
        out[flat, np.arange(flat.size)] = 1.0
        return out


class GaussianRbfDictionary(Dictionary):
    """Gaussian bumps exp(-||x - c||^2 / (2 b^2)) at fixed centers."""

    kind = "gaussian_rbf"

    def __init__(self, centers, bandwidth: float):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if not bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.centers = centers
        self.bandwidth = float(bandwidth)
        self.k, self.d = centers.shape

    def transform(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        _check_dim(self, P)
        # squared distances via the expansion ||c||^2 - 2 c.x + ||x||^2
        sq = (
            np.sum(self.centers**2, axis=1)[:, None]
            - 2.0 * self.centers @ P
            + np.sum(P**2, axis=0)[None, :]
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.bandwidth**2))


@dataclass(frozen=True)
class FeatureMatrices:
    """Dictionary features of a pair set.

    ``psi_X[i, j]`` is the i-th dictionary function at the j-th column of
    ``X``; likewise for ``psi_Y``.
    """

    psi_X: np.ndarray
    psi_Y: np.ndarray
    dictionary: Dictionary
    m: int
    lag_time: float


def evaluate(dictionary: Dictionary, pairs: DataPairs) -> FeatureMatrices:
    """Evaluate a dictionary on both snapshot blocks of a pair set.

    For the centered identity dictionary the centering statistics are
    fitted on ``X`` (once) and applied to both blocks.
    """
    if dictionary.d != pairs.d:
        raise ValueError(
            f"dictionary dimension {dictionary.d} does not match data dimension {pairs.d}"
        )
    if isinstance(dictionary, CenteredIdentityDictionary):
        dictionary.fit_center(pairs.X)
    return FeatureMatrices(
        psi_X=dictionary.transform(pairs.X),
        psi_Y=dictionary.transform(pairs.Y),
        dictionary=dictionary,
        m=pairs.m,
        lag_time=pairs.lag_time,
    )


def full_state_matrix(dictionary: Dictionary) -> np.ndarray:
    """Matrix ``B`` with ``x = B psi(x)`` identically, if one exists.

    Only dictionaries that contain every coordinate function exactly as a
    linear combination of their members qualify; others raise
    :class:`UnrepresentableError` rather than silently approximating.
    """
    if isinstance(dictionary, IdentityDictionary):
        return np.eye(dictionary.d)
    if isinstance(dictionary, CenteredIdentityDictionary):
        if dictionary.center is not None and not dictionary.center.any():
            return np.eye(dictionary.d)
        raise UnrepresentableError(
            "centered identity features differ from the coordinates by the "
            "fitted offset; the full-state observable is not a linear "
            "combination of them"
        )
    if isinstance(dictionary, MonomialDictionary):
        if dictionary.max_degree < 1:
            raise UnrepresentableError("monomials of degree 0 cannot represent coordinates")
        B = np.zeros((dictionary.d, dictionary.k))
        degrees = dictionary.exponents.sum(axis=1)
        for i, exps in enumerate(dictionary.exponents):
            if degrees[i] == 1:
                B[int(np.argmax(exps)), i] = 1.0
        return B
    raise UnrepresentableError(
        f"dictionary kind {dictionary.kind!r} cannot represent the coordinate "
        "functions exactly"
    )


def grid_centers(lower, upper, counts) -> np.ndarray:
    """Midpoints of a regular box grid, C-order, as a (k, d) array."""
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    counts = np.asarray(counts, dtype=int).reshape(-1)
    width = (upper - lower) / counts
    axes = [lower[a] + width[a] * (np.arange(counts[a]) + 0.5) for a in range(lower.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def make_rbf_grid(lower, upper, counts, bandwidth: float | None = None) -> GaussianRbfDictionary:
    """Gaussian RBF dictionary centered at the midpoints of a box grid.

    When ``bandwidth`` is omitted it defaults to the diagonal length of one
    grid box, a declared convention exposed here as a parameter.
    """
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    counts = np.asarray(counts, dtype=int).reshape(-1)
    if np.any(counts < 1):
        raise ValueError(f"box counts must be positive, got {counts}")
    if np.any(upper <= lower):
        raise ValueError("upper must exceed lower componentwise")
    if bandwidth is None:
        bandwidth = float(np.linalg.norm((upper - lower) / counts))
    return GaussianRbfDictionary(centers=grid_centers(lower, upper, counts), bandwidth=bandwidth)


def dictionary_to_config(dictionary: Dictionary) -> dict:
    """JSON-serializable description of a dictionary."""
    if isinstance(dictionary, IdentityDictionary):
        return {"kind": dictionary.kind, "dim": dictionary.d}
    if isinstance(dictionary, CenteredIdentityDictionary):
        center = None if dictionary.center is None else dictionary.center.tolist()
        return {"kind": dictionary.kind, "dim": dictionary.d, "center": center}
    if isinstance(dictionary, MonomialDictionary):
        return {"kind": dictionary.kind, "dim": dictionary.d, "max_degree": dictionary.max_degree}
    if isinstance(dictionary, IndicatorGridDictionary):
        return {
            "kind": dictionary.kind,
            "lower": dictionary.lower.tolist(),
            "upper": dictionary.upper.tolist(),
            "counts": dictionary.counts.tolist(),
        }
    if isinstance(dictionary, GaussianRbfDictionary):
        return {
            "kind": dictionary.kind,
            "centers": dictionary.centers.tolist(),
            "bandwidth": dictionary.bandwidth,
        }
    raise ValueError(f"unknown dictionary type {type(dictionary).__name__}")


def dictionary_from_config(cfg: dict) -> Dictionary:
    """Rebuild a dictionary from :func:`dictionary_to_config` output."""
    kind = cfg["kind"]
    if kind == "identity":
        return IdentityDictionary(cfg["dim"])
    if kind == "identity_centered":
        return CenteredIdentityDictionary(cfg["dim"], center=cfg.get("center"))
    if kind == "monomials":
        return MonomialDictionary(cfg["dim"], cfg["max_degree"])
    if kind == "indicator_grid":
        return IndicatorGridDictionary(cfg["lower"], cfg["upper"], cfg["counts"])
    if kind == "gaussian_rbf":
        return GaussianRbfDictionary(cfg["centers"], cfg["bandwidth"])
    raise ValueError(f"unknown dictionary kind {kind!r}")


def _check_dim(dictionary: Dictionary, P: np.ndarray) -> None:
    if P.ndim != 2 or P.shape[0] != dictionary.d:
        raise ValueError(
            f"expected points of dimension {dictionary.d} as columns, got shape {P.shape}"
        )


def _degree_exponents(d: int, total: int):
    """Exponent tuples of total degree ``total``, lexicographically descending."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _degree_exponents(d - 1, total - first):
            yield (first,) + rest
