"""Stoichiometric structure: Wegscheider matrix, conservation laws, complex graph."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NonpositiveMassWarning
from .network import ReactionNetwork

# largest N for which the nonnegative conservation basis search is attempted
NONNEG_SEARCH_MAX_SPECIES = 12
SVD_RANK_RTOL = 1e-10

Rational = list[list[Fraction]]


def as_rational(a: np.ndarray, max_denominator: int = 10**6) -> Rational | None:
    """Exact rational copy of ``a``, or None if some entry is not a short fraction."""
    rows = []
    for row in np.atleast_2d(a):
        out = []
        for x in row:
            f = Fraction(float(x)).limit_denominator(max_denominator)
            if float(f) != float(x):
                return None
            out.append(f)
        rows.append(out)
    return rows


def rref(rows: Rational, ncols: int) -> tuple[Rational, list[int]]:
    """Reduced row echelon form over the rationals. Returns (nonzero rows, pivots)."""
    A = [list(r) for r in rows]
    pivots: list[int] = []
    lead = 0
    for col in range(ncols):
        piv = next((i for i in range(lead, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[lead], A[piv] = A[piv], A[lead]
        p = A[lead][col]
        A[lead] = [x / p for x in A[lead]]
        for i in range(len(A)):
            if i != lead and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[lead])]
        pivots.append(col)
        lead += 1
        if lead == len(A):
            break
    return A[:lead], pivots


def nullspace(rows: Rational, ncols: int) -> Rational:
    """Basis of {x : A x = 0} read off the reduced echelon form."""
    R, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        x = [Fraction(0)] * ncols
        x[fcol] = Fraction(1)
        for row, p in zip(R, pivots):
            x[p] = -row[fcol]
        basis.append(x)
    return basis


def _primitive(v: list[Fraction]) -> list[Fraction]:
    """Scale to coprime integers with a positive first nonzero entry."""
    den = 1
    for x in v:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, abs(x))
    ints = [x // g for x in ints] if g else ints
    first = next((x for x in ints if x != 0), 1)
    if first < 0:
        ints = [-x for x in ints]
    return [Fraction(x) for x in ints]


def _rank(rows: Rational, ncols: int) -> int:
    return len(rref(rows, ncols)[0]) if rows else 0


def _nonnegative_rays(Wt: Rational, n: int, max_support: int) -> list[list[Fraction]]:
    """Minimal-support nonnegative vectors of ker(W^T), smallest supports first."""
    R, _ = rref(Wt, n)
    rays = []
    for size in range(1, max_support + 1):
        for S in itertools.combinations(range(n), size):
            sub = [[row[j] for j in S] for row in R] or [[Fraction(0)] * size]
            ker = nullspace(sub, size)
            if len(ker) != 1:
                continue
            g = ker[0]
            if all(x > 0 for x in g) or all(x < 0 for x in g):
                v = [Fraction(0)] * n
                for j, x in zip(S, g):
                    v[j] = abs(x)
                rays.append(_primitive(v))
    return rays


def conservation_basis_exact(W: np.ndarray) -> Rational | None:
    """Exact basis of ker(W^T) preferring nonnegative rows; None if W is not rational."""
    N = W.shape[0]
    Wt = as_rational(W.T) if W.size else []
    if Wt is None:
        return None
    ker = nullspace(Wt, N) if Wt else [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]
    m = len(ker)
    if m == 0:
        return []
    ker_rref, _ = rref(ker, N)
    chosen: Rational = []
    if N <= NONNEG_SEARCH_MAX_SPECIES:
        rank_w = N - m
        for ray in _nonnegative_rays(Wt, N, rank_w + 1):
            if _rank(chosen + [ray], N) == len(chosen) + 1:
                chosen.append(ray)
            if len(chosen) == m:
                break
    for row in ker_rref:
        if len(chosen) == m:
            break
        if _rank(chosen + [row], N) == len(chosen) + 1:
            chosen.append(_primitive(row))
    return chosen


def wegscheider_matrix(net: ReactionNetwork) -> np.ndarray:
    """N x R matrix whose column r is ``y'_r - y_r``."""
    return np.ascontiguousarray(net.reaction_vectors().T)


def conservation_basis(W: np.ndarray) -> np.ndarray:
    """m x N matrix Q whose rows span ker(W^T), so that ``Q @ W == 0``.

    Rational stoichiometry goes through exact elimination; a nonnegative
    basis is preferred when one exists. Otherwise falls back to an SVD null
    space with rows sign-normalized (first nonzero entry positive).
    """
    W = np.asarray(W, dtype=float)
    N = W.shape[0]
    exact = conservation_basis_exact(W)
    if exact is not None:
        return np.array([[float(x) for x in row] for row in exact]).reshape(len(exact), N)
    return _svd_conservation_basis(W)


def _svd_conservation_basis(W: np.ndarray) -> np.ndarray:
    N = W.shape[0]
    U, s, _ = np.linalg.svd(W, full_matrices=True)
    tol = SVD_RANK_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    Q = U[:, rank:].T.copy()
    for row in Q:
        nz = np.flatnonzero(np.abs(row) > 1e-14)
        if nz.size and row[nz[0]] < 0:
            row *= -1
    return Q.reshape(N - rank, N)


def matrix_rank(W: np.ndarray) -> int:
    exact = as_rational(W) if W.size else []
    if exact is not None:
        return _rank(exact, W.shape[1]) if exact else 0
    s = np.linalg.svd(W, compute_uv=False)
    return int(np.sum(s > SVD_RANK_RTOL * s[0])) if s.size else 0


def mass_vector(Q: np.ndarray, u0_mean) -> np.ndarray:
    """Conserved quantities ``M = Q @ mean(u0)``; warns if some entry is not positive."""
    u0_mean = np.asarray(u0_mean, dtype=float)
    if np.any(u0_mean < 0):
        raise ValueError("mean concentrations must be nonnegative")
    M = np.asarray(Q, dtype=float).reshape(-1, u0_mean.size) @ u0_mean
    if np.any(M <= 0):
        warnings.warn(
            f"nonpositive conserved mass {M.tolist()}; no positive equilibrium is guaranteed",
            NonpositiveMassWarning,
            stacklevel=2,
        )
    return M


@dataclass(frozen=True)
class ComplexGraph:
    linkage_classes: list[list[int]]
    strong_components: list[list[int]]
    weakly_reversible: bool


def _partition(labels: np.ndarray) -> list[list[int]]:
    groups: dict[int, list[int]] = {}
    for v, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def complex_graph(net: ReactionNetwork) -> ComplexGraph:
    """Linkage classes and strong components of the reaction graph on complexes."""
    C = net.n_complexes
    adj = csr_matrix(
        (np.ones(net.n_reactions), (net.reactant_complex, net.product_complex)), shape=(C, C)
    )
    _, weak = connected_components(adj, directed=True, connection="weak")
    _, strong = connected_components(adj, directed=True, connection="strong")
    linkage = _partition(weak)
    comps = _partition(strong)
    # each linkage class strongly connected <=> same number of parts
    return ComplexGraph(linkage, comps, len(linkage) == len(comps))


def deficiency(net: ReactionNetwork, stoich: "StoichData | None" = None) -> int:
    """``|C| - #linkage classes - rank W``."""
    if stoich is not None:
        return stoich.deficiency
    g = complex_graph(net)
    return net.n_complexes - len(g.linkage_classes) - matrix_rank(wegscheider_matrix(net))


@dataclass(frozen=True)
class StoichData:
    W: np.ndarray
    Q: np.ndarray
    m: int
    rank: int
    linkage_classes: list[list[int]]
    strong_components: list[list[int]]
    weakly_reversible: bool
    deficiency: int
    exact: bool

    def report(self) -> dict:
        return {
            "n_species": int(self.W.shape[0]),
            "n_reactions": int(self.W.shape[1]),
            "rank_W": self.rank,
            "m": self.m,
            "Q": self.Q.tolist(),
            "exact_conservation_laws": self.exact,
            "linkage_classes": len(self.linkage_classes),
            "strong_components": len(self.strong_components),
            "weakly_reversible": self.weakly_reversible,
            "deficiency": self.deficiency,
        }


def analyze_stoichiometry(net: ReactionNetwork) -> StoichData:
    W = wegscheider_matrix(net)
    exact = as_rational(W) is not None
    Q = conservation_basis(W)
    rank = matrix_rank(W)
    g = complex_graph(net)
    return StoichData(
        W=W,
        Q=Q,
        m=Q.shape[0],
        rank=rank,
        linkage_classes=g.linkage_classes,
        strong_components=g.strong_components,
        weakly_reversible=g.weakly_reversible,
        deficiency=net.n_complexes - len(g.linkage_classes) - rank,
        exact=exact,
    )
