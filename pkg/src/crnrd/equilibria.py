"""Complex and detailed balance, reference equilibria and projection onto a mass class."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    NoConvergence,
    NonpositiveConcentration,
    NonpositiveMass,
    NotComplexBalanced,
    NumericalFailure,
)
from .network import (
    ReactionNetwork,
    growth_constant,
    mass_action_rates,
    nonlinearity_order,
    reaction_rhs,
)
from .stoich import StoichData, analyze_stoichiometry, as_rational, rref

DEFAULT_TOL_CB = 1e-8
CERT_TOL = 1e-10
NEWTON_MAX_ITER = 200

DETAILED = "DetailedBalanced"
COMPLEX_ONLY = "ComplexBalancedOnly"
NOT_CB = "NotComplexBalanced"


def _positive(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise NonpositiveConcentration("balance checks need strictly positive concentrations")
    return u


def complex_flows(net: ReactionNetwork, u) -> tuple[np.ndarray, np.ndarray]:
    """(out-flow, in-flow) at every complex."""
    flux = mass_action_rates(net, u)
    out = np.bincount(net.reactant_complex, weights=flux, minlength=net.n_complexes)
    inflow = np.bincount(net.product_complex, weights=flux, minlength=net.n_complexes)
    return out, inflow


def check_complex_balance(net: ReactionNetwork, u) -> np.ndarray:
    """Relative in/out imbalance at each complex, ``|out - in| / (1 + out + in)``."""
    out, inflow = complex_flows(net, _positive(u))
    return np.abs(out - inflow) / (1.0 + out + inflow)


@dataclass
class DetailedBalanceReport:
    paired: bool
    pairs: list[tuple[int, int]]
    unpaired: list[int]
    residuals: np.ndarray

    @property
    def max_residual(self) -> float:
        if not self.paired:
            return math.inf
        return float(self.residuals.max()) if self.residuals.size else 0.0


def check_detailed_balance(net: ReactionNetwork, u) -> DetailedBalanceReport:
    """Pair each reaction with a reverse one and measure ``|k_f u^y - k_b u^y'|``.

    Pairing is greedy in reaction order. Residuals are relative to
    ``1 + k_f u^y + k_b u^y'``.
    """
    flux = mass_action_rates(net, _positive(u))
    rc, pc = net.reactant_complex, net.product_complex
    used = np.zeros(net.n_reactions, dtype=bool)
    pairs, unpaired = [], []
    for r in range(net.n_reactions):
        if used[r]:
            continue
        used[r] = True
        partner = next(
            (s for s in range(r + 1, net.n_reactions) if not used[s] and rc[s] == pc[r] and pc[s] == rc[r]),
            None,
        )
        if partner is None:
            unpaired.append(r)
        else:
            used[partner] = True
            pairs.append((r, partner))
    res = np.array([abs(flux[a] - flux[b]) / (1.0 + flux[a] + flux[b]) for a, b in pairs])
    return DetailedBalanceReport(not unpaired, pairs, unpaired, res)


def laplacian_kernel(net: ReactionNetwork, cls: list[int]) -> np.ndarray:
    """Positive kernel vector of the weighted complex Laplacian on one linkage class.

    Equivalent to the spanning-tree constants; obtained by pinning the first
    complex to 1 and solving the reduced system by LU. Scaled to max 1.
    """
    pos = {c: i for i, c in enumerate(cls)}
    n = len(cls)
    A = np.zeros((n, n))
    for r in range(net.n_reactions):
        a, b = net.reactant_complex[r], net.product_complex[r]
        if a in pos:
            k = net.rates[r]
            A[pos[b], pos[a]] += k
            A[pos[a], pos[a]] -= k
    rho = np.ones(n)
    if n > 1:
        try:
            lu = scipy.linalg.lu_factor(A[1:, 1:], check_finite=True)
            rho[1:] = scipy.linalg.lu_solve(lu, -A[1:, 0])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"singular reduced Laplacian: {exc}") from exc
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise NumericalFailure("Laplacian kernel is not strictly positive")
    return rho / rho.max()


def _pivot_columns(Q: np.ndarray) -> list[int]:
    exact = as_rational(Q)
    if exact is not None:
        return rref(exact, Q.shape[1])[1]
    _, _, piv = scipy.linalg.qr(Q, pivoting=True)
    return sorted(piv[: Q.shape[0]].tolist())


def _normalize_log(x: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Move x along Q^T so it vanishes on the pivot columns of Q."""
    if Q.shape[0] == 0:
        return x
    P = _pivot_columns(Q)
    eta = np.linalg.solve(Q[:, P].T, -x[P])
    x = x + Q.T @ eta
    x[P] = 0.0
    return x


def reference_equilibrium(
    net: ReactionNetwork, stoich: StoichData | None = None, tol: float = DEFAULT_TOL_CB
) -> np.ndarray:
    """A strictly positive complex balanced equilibrium, or raise NotComplexBalanced.

    The free directions ``exp(Q^T eta)`` are fixed by setting the
    concentrations on the pivot columns of Q to 1.
    """
    stoich = stoich or analyze_stoichiometry(net)
    if not stoich.weakly_reversible:
        raise NotComplexBalanced("network is not weakly reversible")
    N = net.n_species
    classes = stoich.linkage_classes
    C = net.n_complexes
    A = np.zeros((C, N + len(classes)))
    b = np.zeros(C)
    A[:, :N] = net.complexes
    for li, cls in enumerate(classes):
        rho = laplacian_kernel(net, cls)
        A[cls, N + li] = -1.0
        b[cls] = np.log(rho)
    z, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    expected = N + len(classes) - stoich.m
    if rank < expected:
        raise NumericalFailure(f"log-linear system has rank {rank}, expected {expected}")
    residual = float(np.max(np.abs(A @ z - b)))
    if residual > tol:
        raise NotComplexBalanced(
            f"rate constants are not complex balancing (log residual {residual:.3e})", residual
        )
    x = _normalize_log(z[:N], stoich.Q)
    u = np.exp(x)
    cb = float(check_complex_balance(net, u).max())
    if cb > CERT_TOL:
        raise NumericalFailure(f"reference equilibrium fails the balance check ({cb:.3e})")
    return u


def _birch_newton(Q, u_ref, M, max_iter=NEWTON_MAX_ITER):
    m = Q.shape[0]
    eta = np.zeros(m)
    scale = 1.0 + float(np.max(np.abs(M)))

    def objective(e):
        with np.errstate(over="ignore"):
            u = u_ref * np.exp(Q.T @ e)
        return float(np.sum(u) - M @ e), u

    F, u = objective(eta)
    history = []
    for it in range(max_iter):
        g = Q @ u - M
        res = float(np.max(np.abs(g)))
        history.append(res)
        if res <= 1e-13 * scale:
            # one undamped polishing step, kept only if it helps
            H = (Q * u) @ Q.T
            eta2 = eta + np.linalg.solve(H, -g)
            u2 = u_ref * np.exp(Q.T @ eta2)
            if np.max(np.abs(Q @ u2 - M)) < res:
                return u2, eta2, it + 1
            return u, eta, it
        H = (Q * u) @ Q.T
        step = np.linalg.solve(H, -g)
        t = 1.0
        for _ in range(80):
            F_new, u_new = objective(eta + t * step)
            if np.isfinite(F_new) and F_new <= F + 1e-14 * (abs(F) + 1.0):
                break
            t *= 0.5
        else:
            break
        if np.max(np.abs(t * step)) < 1e-15 * (1.0 + np.max(np.abs(eta))):
            # stagnated at round-off
            if res <= CERT_TOL * scale:
                return u, eta, it
            break
        eta = eta + t * step
        F, u = F_new, u_new
    res = float(np.max(np.abs(Q @ u - M)))
    if res <= CERT_TOL * scale:
        return u, eta, max_iter
    raise NoConvergence(
        "projection onto the mass class did not converge",
        {"residual": res, "eta": eta.tolist(), "history": history[-10:]},
    )


def birch_project(net: ReactionNetwork, stoich: StoichData, u_ref, M) -> np.ndarray:
    """The unique equilibrium ``u_ref * exp(Q^T eta)`` with ``Q u = M``.

    Damped Newton on the strictly convex ``sum(u) - M . eta``.
    """
    return _project(stoich, u_ref, M)[0]


def _project(stoich: StoichData, u_ref, M):
    u_ref = np.asarray(u_ref, dtype=float)
    if np.any(u_ref <= 0):
        raise NonpositiveConcentration("reference equilibrium must be strictly positive")
    Q = stoich.Q
    if Q.shape[0] == 0:
        return u_ref.copy(), np.zeros(0), 0
    M = np.asarray(M, dtype=float).reshape(Q.shape[0])
    # only semipositive laws force a positive mass; mixed-sign rows take any value
    semipositive = np.all(Q >= 0, axis=1)
    if np.any(M[semipositive] <= 0):
        raise NonpositiveMass(f"conserved masses must be positive, got {M.tolist()}")
    return _birch_newton(Q, u_ref, M)


def is_equilibrium(net: ReactionNetwork, u) -> tuple[bool, float]:
    """Pointwise equilibrium test (works on the boundary of the orthant)."""
    u = np.asarray(u, dtype=float)
    res = float(np.max(np.abs(reaction_rhs(net, u))))
    bound = 1e-12 * (1.0 + growth_constant(net) * (np.max(u) ** nonlinearity_order(net) + 1.0))
    return res <= bound, res


@dataclass
class EquilibriumCertificate:
    classification: str
    u_ref: np.ndarray | None
    u_inf: np.ndarray | None
    mass: np.ndarray | None
    eta: np.ndarray | None = None
    cb_residual: float = math.nan
    db_residual: float = math.nan
    mass_residual: float = math.nan
    log_residual: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def complex_balanced(self) -> bool:
        return self.classification != NOT_CB

    def report(self) -> dict:
        def vec(a):
            return None if a is None else [float(x) for x in a]

        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {
            "classification": self.classification,
            "u_ref": vec(self.u_ref),
            "u_inf": vec(self.u_inf),
            "eta": vec(self.eta),
            "mass": vec(self.mass),
            "cb_residual": num(self.cb_residual),
            "db_residual": num(self.db_residual),
            "mass_residual": num(self.mass_residual),
            "log_residual": num(self.log_residual),
            **self.detail,
        }


def certify_equilibrium(
    net: ReactionNetwork,
    stoich: StoichData | None = None,
    mass=None,
    u0_mean=None,
    tol_cb: float = DEFAULT_TOL_CB,
) -> EquilibriumCertificate:
    """Classify ``net`` and, if complex balanced, locate u_inf for the given mass.

    With neither ``mass`` nor ``u0_mean`` the mass of the reference
    equilibrium is used, so ``u_inf == u_ref``.
    """
    stoich = stoich or analyze_stoichiometry(net)
    try:
        u_ref = reference_equilibrium(net, stoich, tol=tol_cb)
    except NotComplexBalanced as exc:
        return EquilibriumCertificate(
            NOT_CB, None, None, None, log_residual=exc.residual, detail={"reason": str(exc)}
        )
    if mass is not None:
        M = np.asarray(mass, dtype=float).reshape(stoich.m)
    elif u0_mean is not None:
        M = stoich.Q @ np.asarray(u0_mean, dtype=float)
    else:
        M = stoich.Q @ u_ref
    u_inf, eta, iters = _project(stoich, u_ref, M)
    cb = float(check_complex_balance(net, u_inf).max())
    db = check_detailed_balance(net, u_inf)
    cls = DETAILED if db.paired and db.max_residual <= tol_cb else COMPLEX_ONLY
    mass_res = float(np.max(np.abs(stoich.Q @ u_inf - M))) if stoich.m else 0.0
    return EquilibriumCertificate(
        cls,
        u_ref,
        u_inf,
        M,
        eta=eta,
        cb_residual=cb,
        db_residual=db.max_residual,
        mass_residual=mass_res,
        detail={"newton_iterations": iters, "unpaired_reactions": db.unpaired},
    )
