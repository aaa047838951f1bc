"""Linearization at a complex balanced equilibrium and a certified spectral gap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .equilibria import CERT_TOL, check_complex_balance
from .errors import DegenerateKernel, NonpositiveGap, NotAnEquilibrium, UnsupportedDomain
from .network import ReactionNetwork, mass_action_rates, rhs_jacobian
from .stoich import as_rational, nullspace


@dataclass(frozen=True)
class Domain:
    """Interval ``(0, L)`` or axis-aligned rectangle ``(0, Lx) x (0, Ly)``."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        if not lengths or any(not (x > 0 and math.isfinite(x)) for x in lengths):
            raise UnsupportedDomain(f"domain lengths must be positive, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @classmethod
    def parse(cls, text: str) -> "Domain":
        """``"1"`` for the unit interval, ``"1x2"`` for a rectangle."""
        try:
            return cls(tuple(float(p) for p in text.lower().split("x")))
        except ValueError as exc:
            raise UnsupportedDomain(f"bad domain {text!r}") from exc


def _require_balanced(net: ReactionNetwork, u_inf) -> np.ndarray:
    u_inf = np.asarray(u_inf, dtype=float)
    if np.any(u_inf <= 0):
        raise NotAnEquilibrium("equilibrium must be strictly positive")
    res = float(check_complex_balance(net, u_inf).max())
    if res > CERT_TOL:
        raise NotAnEquilibrium(f"not a complex balanced equilibrium (residual {res:.3e})")
    return u_inf


@dataclass(frozen=True)
class LinearizedOperator:
    L: np.ndarray
    u_inf: np.ndarray
    diffusion: np.ndarray

    def tangent_residual(self, Q: np.ndarray) -> float:
        """``max |L diag(u_inf) Q^T|``; zero along the equilibrium manifold."""
        if Q.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.L @ (self.u_inf[:, None] * Q.T))))


def linearize(net: ReactionNetwork, u_inf, d) -> LinearizedOperator:
    u_inf = _require_balanced(net, u_inf)
    d = np.asarray(d, dtype=float)
    if d.shape != u_inf.shape or np.any(d <= 0):
        raise ValueError("diffusion coefficients must be positive, one per species")
    return LinearizedOperator(rhs_jacobian(net, u_inf), u_inf, d)


def reaction_dissipation(net: ReactionNetwork, u_inf, v) -> float:
    """``1/2 sum_r k_r u^y_r ((y'_r - y_r) . v/u)^2``."""
    flux = mass_action_rates(net, u_inf)
    s = net.reaction_vectors() @ (np.asarray(v, dtype=float) / u_inf)
    return 0.5 * float(flux @ s**2)


def quadratic_identity_residual(net: ReactionNetwork, u_inf, v) -> float:
    """``|sum_i (Lv)_i v_i/u_i + reaction_dissipation(v)|``, zero at a balanced u_inf."""
    u_inf = _require_balanced(net, u_inf)
    v = np.asarray(v, dtype=float)
    lhs = float((rhs_jacobian(net, u_inf) @ v) @ (v / u_inf))
    return abs(lhs + reaction_dissipation(net, u_inf, v))


def moment_balance_residuals(net: ReactionNetwork, u_inf, require_balance: bool = True) -> np.ndarray:
    """Relative mismatch of ``sum k u^y y_i y_j`` and ``sum k u^y y'_i y'_j``.

    Returns an upper-triangular N x N array (entries i <= j). Pass
    ``require_balance=False`` to evaluate at states that are not balanced.
    """
    if require_balance:
        u_inf = _require_balanced(net, u_inf)
    flux = mass_action_rates(net, u_inf)
    lhs = (net.reactants * flux[:, None]).T @ net.reactants
    rhs = (net.products * flux[:, None]).T @ net.products
    res = np.abs(lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))
    return np.triu(res)


def kernel_basis(Q: np.ndarray) -> np.ndarray:
    """Orthonormal N x (N - m) basis of ker Q (exact elimination first when Q is rational)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    N = Q.shape[1]
    if Q.shape[0] == 0:
        return np.eye(N)
    exact = as_rational(Q)
    if exact is not None:
        basis = nullspace(exact, N)
        if not basis:
            return np.zeros((N, 0))
        Z = np.array([[float(x) for x in b] for b in basis]).T
        return np.linalg.qr(Z)[0]
    return scipy.linalg.null_space(Q)


def reaction_gap_beta(net: ReactionNetwork, u_inf, Q) -> float:
    """Smallest ratio of reaction dissipation to ``sum v_i^2/u_i`` over ker Q.

    Solved as the smallest eigenvalue of the symmetric pencil
    ``(Z^T B Z, Z^T D^-1 Z)``.
    """
    u_inf = _require_balanced(net, u_inf)
    Z = kernel_basis(np.asarray(Q, dtype=float).reshape(-1, net.n_species))
    if Z.shape[1] == 0:
        raise DegenerateKernel("ker Q is trivial; no non-equilibrium directions")
    flux = mass_action_rates(net, u_inf)
    w = net.reaction_vectors() / u_inf[None, :]
    B = 0.5 * (w.T * flux) @ w
    A = Z.T @ B @ Z
    M = Z.T @ (Z / u_inf[:, None])
    beta = float(scipy.linalg.eigh(A, M, eigvals_only=True)[0])
    if beta <= 1e-12:
        raise NonpositiveGap(f"reaction gap {beta:.3e} is not positive")
    return beta


def poincare_constant(domain: Domain) -> float:
    """First nonzero Neumann eigenvalue of the Laplacian on an interval or rectangle."""
    if domain.dim not in (1, 2):
        raise UnsupportedDomain(f"only intervals and rectangles are supported, got dim={domain.dim}")
    return (math.pi / max(domain.lengths)) ** 2


@dataclass(frozen=True)
class SpectralCertificate:
    beta: float
    poincare: float
    lam: float
    kerQ_basis: np.ndarray
    min_diffusion: float
    volume: float

    @property
    def beta_as_written(self) -> float:
        # same quadratic form with the 1/(2|Omega|) prefactor applied verbatim
        return self.beta / self.volume

    @property
    def decay_rate(self) -> float:
        """Certified rate for the weighted squared L2 distance."""
        return 2.0 * self.lam

    def report(self) -> dict:
        return {
            "beta": self.beta,
            "poincare": self.poincare,
            "min_diffusion": self.min_diffusion,
            "lambda": self.lam,
            "decay_rate_l2w_sq": self.decay_rate,
            "beta_with_volume_prefactor": self.beta_as_written,
        }


def gap_certificate(net: ReactionNetwork, u_inf, d, Q, domain: Domain) -> SpectralCertificate:
    """``lambda = min(P(Omega) * min(d), beta)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("diffusion coefficients must be positive")
    beta = reaction_gap_beta(net, u_inf, Q)
    P = poincare_constant(domain)
    dmin = float(d.min())
    return SpectralCertificate(
        beta=beta,
        poincare=P,
        lam=min(P * dmin, beta),
        kerQ_basis=kernel_basis(np.asarray(Q, dtype=float).reshape(-1, net.n_species)),
        min_diffusion=dmin,
        volume=domain.volume,
    )


def identity_residual_stats(net: ReactionNetwork, u_inf, n: int = 100, seed: int = 0) -> dict:
    """Max and mean normalized identity residual over random directions."""
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n):
        v = rng.standard_normal(net.n_species)
        vals.append(quadratic_identity_residual(net, u_inf, v) / (1.0 + v @ v))
    return {"samples": n, "max": float(np.max(vals)), "mean": float(np.mean(vals))}
