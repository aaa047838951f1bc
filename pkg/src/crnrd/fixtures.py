"""Small reference networks and random network generators used by tests and scripts."""

from __future__ import annotations

import numpy as np

from .network import ReactionNetwork
from .parser import parse_network

NETWORKS = {
    "NET_AB": "A <-> B ; k=1, kr=1\n",
    "NET_AB_IRREV": "A -> B ; k=1\n",
    "NET_TRI": "A -> B ; k=1\nB -> C ; k=1\nC -> A ; k=1\n",
    "NET_4SP": "species: S1, S2, S3, S4\nS1 + S3 <-> S2 + S4 ; k=2, kr=1\n",
    "NET_QUINTIC": "A + 4 B <-> 5 B ; k=1, kr=1\n",
    "NET_M0": "A -> B ; k=1\nA -> 2 B ; k=1\n",
}


def load_fixture(name: str) -> ReactionNetwork:
    return parse_network(NETWORKS[name])


def balanced_rates(net: ReactionNetwork, u_star, rng: np.random.Generator) -> np.ndarray:
    """Random rate constants for which ``u_star`` is a complex balanced equilibrium.

    Builds a strictly positive circulation on the complex graph as a random
    positive combination of directed cycles (one through every reaction) and
    divides by the monomials. Requires a weakly reversible network.
    """
    import networkx as nx

    u_star = np.asarray(u_star, dtype=float)
    G = nx.MultiDiGraph()
    G.add_nodes_from(range(net.n_complexes))
    for r, (a, b) in enumerate(zip(net.reactant_complex, net.product_complex)):
        G.add_edge(int(a), int(b), key=r)
    flux = np.zeros(net.n_reactions)
    for r, (a, b) in enumerate(zip(net.reactant_complex, net.product_complex)):
        path = nx.shortest_path(G, int(b), int(a))
        w = rng.uniform(0.5, 2.0)
        flux[r] += w
        for p, q in zip(path[:-1], path[1:]):
            # any parallel edge works; take the lowest-numbered one
            flux[min(G[p][q])] += w
    mono = np.prod(u_star[None, :] ** net.reactants, axis=1)
    return flux / mono


def random_weakly_reversible(
    rng: np.random.Generator,
    n_species: int = 3,
    n_complexes: int = 4,
    max_coeff: int = 2,
    reversible_only: bool = False,
) -> ReactionNetwork:
    """Random weakly reversible network with random (not necessarily balanced) rates.

    Complexes are distinct random nonnegative integer vectors; each linkage
    class is a directed cycle plus random chords closed into cycles, or a set
    of reversible pairs when ``reversible_only``.
    """
    complexes: list[tuple] = []
    while len(complexes) < n_complexes:
        c = tuple(int(x) for x in rng.integers(0, max_coeff + 1, size=n_species))
        if c not in complexes:
            complexes.append(c)
    order = rng.permutation(n_complexes)
    edges: list[tuple[int, int]] = []
    if reversible_only:
        for a, b in zip(order[:-1], order[1:]):
            edges += [(a, b), (b, a)]
    else:
        for a, b in zip(order, np.roll(order, -1)):
            edges.append((a, b))
        if n_complexes > 2 and rng.random() < 0.5:
            a, b = rng.choice(n_complexes, size=2, replace=False)
            edges += [(a, b), (b, a)]
    edges = list(dict.fromkeys((int(a), int(b)) for a, b in edges))
    Y = np.array([complexes[a] for a, _ in edges], dtype=float)
    Yp = np.array([complexes[b] for _, b in edges], dtype=float)
    rates = rng.uniform(0.5, 2.0, size=len(edges))
    # drop species that never occur so every species has a name in the text form
    used = np.flatnonzero((Y + Yp).sum(axis=0) > 0)
    names = tuple(f"X{i + 1}" for i in range(len(used)))
    return ReactionNetwork(names, Y[:, used], Yp[:, used], rates)
