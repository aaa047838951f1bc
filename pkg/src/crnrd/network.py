"""Mass-action reaction networks: representation, reaction terms and Jacobian."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidNetwork, NegativeConcentration, NonpositiveConcentration


class Species(NamedTuple):
    name: str
    index: int


def _valid_coefficient(c: float) -> bool:
    return c == 0.0 or (np.isfinite(c) and c >= 1.0)


@dataclass(frozen=True, eq=False)
class ReactionNetwork:
    """A list of reactions ``y_r -> y'_r`` with rate constants ``k_r``.

    ``reactants`` and ``products`` are R x N arrays of stoichiometric
    coefficients; row r holds the reactant and product complex of reaction r.
    The species order is fixed at construction and used for every derived
    matrix.
    """

    species: tuple[str, ...]
    reactants: np.ndarray
    products: np.ndarray
    rates: np.ndarray
    complexes: np.ndarray = field(init=False, repr=False)
    reactant_complex: np.ndarray = field(init=False, repr=False)
    product_complex: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        species = tuple(self.species)
        Y = np.array(self.reactants, dtype=float, ndmin=2)
        Yp = np.array(self.products, dtype=float, ndmin=2)
        k = np.array(self.rates, dtype=float, ndmin=1)
        N = len(species)
        if len(set(species)) != N:
            raise InvalidNetwork("species names must be unique")
        if Y.shape != Yp.shape or Y.ndim != 2 or Y.shape[1] != N:
            raise InvalidNetwork(f"stoichiometry arrays must be R x {N}")
        R = Y.shape[0]
        if R < 1:
            raise InvalidNetwork("a network needs at least one reaction")
        if k.shape != (R,):
            raise InvalidNetwork(f"expected {R} rate constants, got {k.shape}")
        if not np.all(np.isfinite(k)) or np.any(k <= 0):
            raise InvalidNetwork("rate constants must be positive and finite")
        for c in np.concatenate([Y.ravel(), Yp.ravel()]):
            if not _valid_coefficient(c):
                raise InvalidNetwork(f"coefficient {c} outside {{0}} U [1, inf)")
        for r in range(R):
            if np.array_equal(Y[r], Yp[r]):
                raise InvalidNetwork(f"reaction {r} has identical reactant and product")

        # complexes in first-appearance order (reactant of r, product of r, ...)
        index: dict[tuple, int] = {}
        rc = np.empty(R, dtype=np.intp)
        pc = np.empty(R, dtype=np.intp)
        for r in range(R):
            for row, out in ((Y[r], rc), (Yp[r], pc)):
                key = tuple(row)
                if key not in index:
                    index[key] = len(index)
                out[r] = index[key]
        C = np.array(list(index), dtype=float).reshape(len(index), N)

        for arr in (Y, Yp, k, C, rc, pc):
            arr.setflags(write=False)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "reactants", Y)
        object.__setattr__(self, "products", Yp)
        object.__setattr__(self, "rates", k)
        object.__setattr__(self, "complexes", C)
        object.__setattr__(self, "reactant_complex", rc)
        object.__setattr__(self, "product_complex", pc)

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return self.reactants.shape[0]

    @property
    def n_complexes(self) -> int:
        return self.complexes.shape[0]

    def species_records(self) -> list[Species]:
        return [Species(name, i) for i, name in enumerate(self.species)]

    def reaction_vectors(self) -> np.ndarray:
        """R x N array of net changes ``y'_r - y_r``."""
        return self.products - self.reactants

    def with_rates(self, rates: Sequence[float]) -> "ReactionNetwork":
        return ReactionNetwork(self.species, self.reactants, self.products, rates)

    def permuted(self, order: Sequence[int]) -> "ReactionNetwork":
        """Same network with reactions listed in ``order``."""
        order = np.asarray(order)
        return ReactionNetwork(
            self.species, self.reactants[order], self.products[order], self.rates[order]
        )

    def __eq__(self, other):
        if not isinstance(other, ReactionNetwork):
            return NotImplemented
        return (
            self.species == other.species
            and np.array_equal(self.reactants, other.reactants)
            and np.array_equal(self.products, other.products)
            and np.array_equal(self.rates, other.rates)
        )

    __hash__ = None


def _as_state(net: ReactionNetwork, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != net.n_species:
        raise ValueError(f"state has {u.shape[0]} species, network has {net.n_species}")
    return u


def monomials(exponents: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Evaluate ``u**y`` for every row y of ``exponents``.

    ``u`` is (N,) or (N, ...) with trailing axes treated as independent
    points; the result is (R,) or (R, ...). Uses 0**0 = 1 and 0**p = 0 for
    p >= 1, which is what ``np.power`` does for nonnegative bases.
    """
    out = np.ones((exponents.shape[0],) + u.shape[1:])
    for i in range(exponents.shape[1]):
        col = exponents[:, i]
        nz = col != 0
        if not nz.any():
            continue
        with np.errstate(under="ignore"):
            powers = np.power(u[i][None, ...], col[nz].reshape((-1,) + (1,) * (u.ndim - 1)))
            out[nz] *= powers
    return out


def mass_action_rates(net: ReactionNetwork, u) -> np.ndarray:
    """Reaction fluxes ``k_r * u**y_r``."""
    u = _as_state(net, u)
    if np.any(u < 0):
        raise NegativeConcentration("concentrations must be nonnegative")
    k = net.rates.reshape((-1,) + (1,) * (u.ndim - 1))
    return k * monomials(net.reactants, u)


def reaction_rhs(net: ReactionNetwork, u) -> np.ndarray:
    """Mass-action right-hand side ``f(u) = sum_r k_r (y'_r - y_r) u**y_r``."""
    flux = mass_action_rates(net, u)
    W = net.reaction_vectors().T
    if flux.ndim == 1:
        return W @ flux
    return np.tensordot(W, flux, axes=(1, 0))


def rhs_jacobian(net: ReactionNetwork, u) -> np.ndarray:
    """Jacobian of :func:`reaction_rhs` on the open positive orthant."""
    u = _as_state(net, u)
    if u.ndim != 1:
        raise ValueError("rhs_jacobian expects a single state vector")
    if np.any(u <= 0):
        raise NonpositiveConcentration("Jacobian needs strictly positive concentrations")
    flux = net.rates * monomials(net.reactants, u)
    W = net.reaction_vectors().T
    return (W * flux) @ net.reactants / u[None, :]


def nonlinearity_order(net: ReactionNetwork) -> float:
    """Largest total molecularity ``|y|`` over all complexes."""
    return float(np.max(np.abs(net.complexes).sum(axis=1)))


def growth_constant(net: ReactionNetwork) -> float:
    """K with ``|f_i(u)| <= K (||u||_inf**mu + 1)`` for all u >= 0 (max-norm)."""
    return float(np.max(np.abs(net.reaction_vectors().T) @ net.rates))
