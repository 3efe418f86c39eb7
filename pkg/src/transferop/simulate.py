"""Ground-truth generators and analytic oracles.

The one-dimensional Ornstein-Uhlenbeck process is sampled through its
exact Gaussian transition law, so estimator errors on OU data are purely
statistical. Its full eigensystem is available in closed form through
probabilists' Hermite polynomials, which makes it the reference oracle for
every spectral estimator in the library. General drift fields (double
gyre, Smoluchowski) are integrated with Euler-Maruyama plus reflecting
box boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.signal

from .data import Trajectory

#: Seeds are plain 64-bit integers fed to numpy's PCG64 generator; one seed
#: fully determines the sample stream.
RngSeed = int


class SimulationError(RuntimeError):
    """Integration aborted, e.g. the drift became non-finite."""


@dataclass(frozen=True)
class OuParams:
    """Ornstein-Uhlenbeck parameters: dX = -alpha D X dt + sqrt(2D) dW.

    ``alpha`` is the friction coefficient and ``Dcoef`` the diffusion
    coefficient (inverse temperature beta = 1/Dcoef).
    """

    alpha: float
    Dcoef: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.Dcoef > 0:
            raise ValueError(f"Dcoef must be positive, got {self.Dcoef}")


@dataclass(frozen=True)
class SdeSystem:
    """Drift field plus additive noise, optionally confined to a box.

    ``drift`` maps states to drift vectors and must accept a (d,) vector;
    vectorized drifts additionally accepting (n, d) arrays enable the batch
    integrator. ``noise_amplitude`` is a scalar or per-component vector.
    ``domain``, when given, is a (lower, upper) box pair with reflecting
    boundary.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    noise_amplitude: float | np.ndarray
    domain: tuple[np.ndarray, np.ndarray] | None = None


def ou_transition_moments(p: OuParams, x, tau: float):
    """Mean and variance of the OU transition density after time ``tau``.

    The conditional law of the process started at ``x`` is Gaussian with
    mean ``x exp(-alpha D tau)`` and variance
    ``(1 - exp(-2 alpha D tau)) / alpha``. Accepts scalar or array ``x``.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    decay = math.exp(-p.alpha * p.Dcoef * tau)
    mean = np.asarray(x, dtype=float) * decay
    variance = (1.0 - decay * decay) / p.alpha
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(mean), variance
    return mean, variance


def ou_transition_density(p: OuParams, x, y, tau: float):
    """Gaussian transition density value p_tau(x, y)."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    mean, var = ou_transition_moments(p, x, tau)
    y = np.asarray(y, dtype=float)
    dens = np.exp(-((y - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    return float(dens) if dens.ndim == 0 else dens


def stationary_density_ou(p: OuParams, x):
    """Equilibrium density: a centered Gaussian with variance 1/alpha."""
    x = np.asarray(x, dtype=float)
    var = 1.0 / p.alpha
    dens = np.exp(-(x**2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    return float(dens) if dens.ndim == 0 else dens


def ou_sample_path(p: OuParams, x0: float, tau: float, n: int, seed: RngSeed) -> Trajectory:
    """Sample ``n`` states of the OU process at interval ``tau``, exactly.

    Each step draws from the exact Gaussian transition law, so the path has
    no discretization error whatever the interval. The first state is
    ``x0``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    decay = math.exp(-p.alpha * p.Dcoef * tau)
    sd = math.sqrt(max(0.0, (1.0 - decay * decay) / p.alpha))
    if n == 1:
        return Trajectory(states=np.array([[float(x0)]]), step=max(tau, np.finfo(float).tiny))
    rng = np.random.default_rng(seed)
    noise = sd * rng.standard_normal(n - 1)
    # z[i+1] = decay * z[i] + noise[i], run as a first-order linear filter
    zi = scipy.signal.lfiltic([1.0], [1.0, -decay], [float(x0)])
    tail, _ = scipy.signal.lfilter([1.0], [1.0, -decay], noise, zi=zi)
    states = np.concatenate([[float(x0)], tail])
    step = tau if tau > 0 else np.finfo(float).tiny
    return Trajectory(states=states[:, None], step=step)


def hermite_prob(n: int, x):
    """Probabilists' Hermite polynomial H_n evaluated at ``x``.

    Uses the recurrence H_{k+1}(x) = x H_k(x) - k H_{k-1}(x) with
    H_0 = 1, H_1 = x. Accepts scalar or array ``x``.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return float(h_prev) if h_prev.ndim == 0 else h_prev
    h = x.copy()
    for k in range(1, n):
        h, h_prev = x * h - k * h_prev, h
    return float(h) if h.ndim == 0 else h


def ou_oracle(p: OuParams, ell: int, tau: float, operator: str = "koopman"):
    """Analytic OU eigenpair number ``ell`` (1-based) at lag ``tau``.

    Returns ``(lam, phi)`` with ``lam = exp(-alpha D (ell-1) tau)`` and,
    for the observable-evolution operator,
    ``phi(x) = H_{ell-1}(sqrt(alpha) x) / sqrt((ell-1)!)``. With
    ``operator="perron_frobenius"`` the eigenfunction is the same function
    multiplied by the equilibrium density.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if operator not in ("koopman", "perron_frobenius"):
        raise ValueError(f"unknown operator {operator!r}")
    lam = math.exp(-p.alpha * p.Dcoef * (ell - 1) * tau)
    scale = 1.0 / math.sqrt(math.factorial(ell - 1))
    root_alpha = math.sqrt(p.alpha)

    def phi(x):
        vals = scale * hermite_prob(ell - 1, np.asarray(x, dtype=float) * root_alpha)
        if operator == "perron_frobenius":
            vals = vals * stationary_density_ou(p, x)
        return vals

    return lam, phi


def reflect_into_box(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Mirror coordinates across violated box faces until all are inside.

    Each pass maps ``x -> 2 lo - x`` below the box and ``x -> 2 hi - x``
    above it, per coordinate; excursions larger than the box width need
    several passes.
    """
    x = np.array(x, dtype=float)
    for _ in range(1000):
        below = x < lower
        above = x > upper
        if not (below.any() or above.any()):
            return x
        x = np.where(below, 2.0 * lower - x, x)
        x = np.where(above, 2.0 * upper - x, x)
    raise SimulationError(f"reflection did not converge for state {x.tolist()}")


def euler_maruyama(
    sys: SdeSystem, x0, h: float, steps: int, seed: RngSeed
) -> Trajectory:
    """Integrate one path: x' = x + h drift(x) + amplitude sqrt(h) g.

    Gaussian increments ``g`` are standard normal per component. With a
    domain set, every step is reflected back into the box. The returned
    trajectory has ``steps + 1`` states starting at ``x0``.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x0, dtype=float).reshape(-1)
    d = x.size
    amp = np.broadcast_to(np.asarray(sys.noise_amplitude, dtype=float), (d,))
    lower = upper = None
    if sys.domain is not None:
        lower = np.asarray(sys.domain[0], dtype=float).reshape(-1)
        upper = np.asarray(sys.domain[1], dtype=float).reshape(-1)
        if np.any(x < lower) or np.any(x > upper):
            raise ValueError(f"x0 {x.tolist()} lies outside the domain box")
    rng = np.random.default_rng(seed)
    sqrt_h = math.sqrt(h)
    out = np.empty((steps + 1, d))
    out[0] = x
    for i in range(steps):
        b = np.asarray(sys.drift(x), dtype=float).reshape(-1)
        if not np.all(np.isfinite(b)):
            raise SimulationError(f"non-finite drift at state {x.tolist()} (step {i})")
        x = x + h * b + amp * sqrt_h * rng.standard_normal(d)
        if lower is not None:
            x = reflect_into_box(x, lower, upper)
        out[i + 1] = x
    return Trajectory(states=out, step=h)


def euler_maruyama_batch(
    sys: SdeSystem, X0: np.ndarray, h: float, steps: int, seed: RngSeed
) -> np.ndarray:
    """End points of many independent paths advanced ``steps`` steps.

    Same scheme as :func:`euler_maruyama`, vectorized over the rows of
    ``X0`` (requires a drift that accepts (n, d) arrays). Returns the
    (n, d) array of final states.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    X = np.array(np.atleast_2d(X0), dtype=float)
    n, d = X.shape
    amp = np.broadcast_to(np.asarray(sys.noise_amplitude, dtype=float), (d,))
    lower = upper = None
    if sys.domain is not None:
        lower = np.asarray(sys.domain[0], dtype=float).reshape(-1)
        upper = np.asarray(sys.domain[1], dtype=float).reshape(-1)
        if np.any(X < lower) or np.any(X > upper):
            raise ValueError("some initial states lie outside the domain box")
    rng = np.random.default_rng(seed)
    sqrt_h = math.sqrt(h)
    for i in range(steps):
        B = np.asarray(sys.drift(X), dtype=float)
        if not np.all(np.isfinite(B)):
            bad = np.argwhere(~np.isfinite(B))[0, 0]
            raise SimulationError(f"non-finite drift at state {X[bad].tolist()} (step {i})")
        X = X + h * B + amp * sqrt_h * rng.standard_normal((n, d))
        if lower is not None:
            X = reflect_into_box(X, lower, upper)
    return X


def double_gyre_drift(A: float) -> Callable[[np.ndarray], np.ndarray]:
    """Drift field of the autonomous double gyre on [0,2] x [0,1].

    u(x, y) = (-pi A sin(pi x) cos(pi y), pi A cos(pi x) sin(pi y)).
    The returned callable accepts a single (2,) state or an (n, 2) batch.
    """

    def drift(state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        x = state[..., 0]
        y = state[..., 1]
        u = -np.pi * A * np.sin(np.pi * x) * np.cos(np.pi * y)
        v = np.pi * A * np.cos(np.pi * x) * np.sin(np.pi * y)
        return np.stack([u, v], axis=-1)

    return drift


def double_gyre_system(A: float, eps: float) -> SdeSystem:
    """Double gyre SDE with noise ``eps`` per component, reflecting box."""
    return SdeSystem(
        drift=double_gyre_drift(A),
        noise_amplitude=float(eps),
        domain=(np.array([0.0, 0.0]), np.array([2.0, 1.0])),
    )


def smoluchowski_system(
    V_grad: Callable[[np.ndarray], np.ndarray],
    Dcoef: float,
    noise_convention: str = "standard",
    dim: int = 1,
) -> SdeSystem:
    """Overdamped dynamics in a potential: drift -D grad V.

    ``noise_convention`` picks the noise amplitude: ``"standard"`` uses
    sqrt(2 D), which makes exp(-V) the stationary density; ``"dimension"``
    uses sqrt(2 d D) with d the state dimension. The two coincide for
    d = 1. The choice is recorded on the returned system for manifests.
    """
    if noise_convention == "standard":
        amp = math.sqrt(2.0 * Dcoef)
    elif noise_convention == "dimension":
        amp = math.sqrt(2.0 * dim * Dcoef)
    else:
        raise ValueError(f"unknown noise convention {noise_convention!r}")

    def drift(state: np.ndarray) -> np.ndarray:
        return -Dcoef * np.asarray(V_grad(state), dtype=float)

    return SdeSystem(drift=drift, noise_amplitude=amp, domain=None)
