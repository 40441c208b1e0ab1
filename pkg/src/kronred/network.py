"""Network records and the stoichiometric objects derived from them.

Matrices follow the usual conventions: ``Z`` is species x complexes, ``B`` is
the complex-graph incidence matrix (complexes x directed edges, -1 at the tail
and +1 at the head) and ``S = Z @ B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

import numpy as np

from .errors import NetworkError
from .laws import BoundaryFlux, RateLaw

MAX_COEFFICIENT = 64


@dataclass(frozen=True)
class Species:
    name: str
    index: int


@dataclass(frozen=True)
class Complex:
    """A formal sum of species; ``composition`` is sorted by species index."""

    composition: tuple[tuple[int, int], ...]
    index: int

    def __post_init__(self) -> None:
        if not self.composition:
            raise NetworkError("complex composition is empty")
        for _, coeff in self.composition:
            if not 1 <= coeff <= MAX_COEFFICIENT:
                raise NetworkError(
                    f"stoichiometric coefficient {coeff} outside [1, {MAX_COEFFICIENT}]"
                )

    def as_dict(self) -> dict[int, int]:
        return dict(self.composition)

    def species(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.composition)


@dataclass(frozen=True)
class Reaction:
    id: str
    substrate: int
    product: int
    law: RateLaw
    reversible: bool = False

    def __post_init__(self) -> None:
        if self.substrate == self.product:
            raise NetworkError(f"reaction {self.id}: substrate equals product")
        if self.reversible != (self.law.k_reverse > 0):
            raise NetworkError(
                f"reaction {self.id}: reversible reactions need kr > 0, irreversible ones kr = 0"
            )


@dataclass(frozen=True)
class Network:
    species: tuple[Species, ...]
    complexes: tuple[Complex, ...]
    reactions: tuple[Reaction, ...]
    boundary: tuple[BoundaryFlux, ...] = ()

    def __post_init__(self) -> None:
        m, c = len(self.species), len(self.complexes)
        names = [s.name for s in self.species]
        if len(set(names)) != m:
            raise NetworkError("duplicate species names")
        if any(s.index != i for i, s in enumerate(self.species)):
            raise NetworkError("species indices must be dense and ordered")
        if any(cx.index != i for i, cx in enumerate(self.complexes)):
            raise NetworkError("complex indices must be dense and ordered")
        if len({cx.composition for cx in self.complexes}) != c:
            raise NetworkError("duplicate complex compositions")
        for cx in self.complexes:
            if any(not 0 <= i < m for i, _ in cx.composition):
                raise NetworkError(f"complex {cx.index} references unknown species")
        if not self.reactions:
            raise NetworkError("no reactions")
        if len({r.id for r in self.reactions}) != len(self.reactions):
            raise NetworkError("duplicate reaction ids")
        for r in self.reactions:
            if not (0 <= r.substrate < c and 0 <= r.product < c):
                raise NetworkError(f"reaction {r.id} references unknown complex")
            for group in r.law.denominator.groups:
                if any(not 0 <= t.species < m for t in group):
                    raise NetworkError(f"reaction {r.id}: denominator references unknown species")
        seen = set()
        for b in self.boundary:
            if not 0 <= b.complex < c:
                raise NetworkError("boundary flux references unknown complex")
            if b.complex in seen:
                raise NetworkError("more than one boundary flux on a complex")
            if b.species is not None and not 0 <= b.species < m:
                raise NetworkError("boundary flux references unknown species")
            seen.add(b.complex)

    @property
    def m(self) -> int:
        return len(self.species)

    @property
    def c(self) -> int:
        return len(self.complexes)

    @property
    def species_names(self) -> list[str]:
        return [s.name for s in self.species]

    def species_index(self, name: str) -> int:
        for s in self.species:
            if s.name == name:
                return s.index
        raise KeyError(name)

    def complex_label(self, index: int) -> str:
        """Canonical composition string, e.g. ``"X1+2 X2"``."""
        parts = []
        for i, coeff in self.complexes[index].composition:
            name = self.species[i].name
            parts.append(name if coeff == 1 else f"{coeff} {name}")
        return "+".join(parts)

    def find_complex(self, composition: dict[int, int]) -> int:
        key = tuple(sorted(composition.items()))
        for cx in self.complexes:
            if cx.composition == key:
                return cx.index
        raise KeyError(composition)


@dataclass(frozen=True, eq=False)
class StoichiometryView:
    """Matrices and graph structure of a network.

    Reversible reactions appear as two consecutive directed edges (forward
    first).  ``edge_reaction[e]`` maps edge ``e`` back to its reaction and
    ``edge_reverse[e]`` flags the reverse half.
    """

    network: Network
    Z: np.ndarray
    B: np.ndarray
    S: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    edge_reaction: np.ndarray
    edge_reverse: np.ndarray
    linkage_partition: tuple[tuple[int, ...], ...]
    ell: int
    rank_B: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.Z.shape[0]

    @property
    def c(self) -> int:
        return self.Z.shape[1]

    @property
    def r(self) -> int:
        return self.B.shape[1]


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self) -> list[tuple[int, ...]]:
        blocks: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            blocks.setdefault(self.find(i), []).append(i)
        return sorted((tuple(b) for b in blocks.values()), key=lambda b: b[0])


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    a = [list(r) for r in rows]
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    pivots: list[int] = []
    row = 0
    for col in range(n_cols):
        pivot = next((i for i in range(row, n_rows) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[row], a[pivot] = a[pivot], a[row]
        p = a[row][col]
        a[row] = [v / p for v in a[row]]
        for i in range(n_rows):
            if i != row and a[i][col] != 0:
                f = a[i][col]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[row])]
        pivots.append(col)
        row += 1
        if row == n_rows:
            break
    return a, pivots


def exact_rank(matrix) -> int:
    """Rank of an integer matrix computed without floating point."""
    mat = np.asarray(matrix)
    if mat.size == 0:
        return 0
    _, pivots = _rref([[Fraction(int(v)) for v in row] for row in mat])
    return len(pivots)


def integer_null_space(matrix) -> list[np.ndarray]:
    """Basis of the right null space of an integer matrix, scaled to coprime integers."""
    mat = np.asarray(matrix)
    n_cols = mat.shape[1]
    if mat.shape[0] == 0:
        rows: list[list[Fraction]] = []
        pivots: list[int] = []
    else:
        rows, pivots = _rref([[Fraction(int(v)) for v in row] for row in mat])
    free = [j for j in range(n_cols) if j not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * n_cols
        vec[f] = Fraction(1)
        for r, p in enumerate(pivots):
            vec[p] = -rows[r][f]
        scale = reduce(lcm, (v.denominator for v in vec), 1)
        ints = [int(v * scale) for v in vec]
        g = reduce(gcd, ints, 0) or 1
        ints = [v // g for v in ints]
        # leading nonzero entry positive
        lead = next(v for v in ints if v != 0)
        if lead < 0:
            ints = [-v for v in ints]
        basis.append(np.array(ints, dtype=np.int64))
    return basis


def enumerate_complexes(network: Network) -> StoichiometryView:
    m, c = network.m, network.c
    Z = np.zeros((m, c), dtype=np.int64)
    for cx in network.complexes:
        for i, coeff in cx.composition:
            Z[i, cx.index] = coeff

    tails, heads, edge_reaction, edge_reverse = [], [], [], []
    for j, rxn in enumerate(network.reactions):
        tails.append(rxn.substrate)
        heads.append(rxn.product)
        edge_reaction.append(j)
        edge_reverse.append(False)
        if rxn.reversible:
            tails.append(rxn.product)
            heads.append(rxn.substrate)
            edge_reaction.append(j)
            edge_reverse.append(True)
    r = len(tails)
    B = np.zeros((c, r), dtype=np.int64)
    B[tails, np.arange(r)] = -1
    B[heads, np.arange(r)] = 1
    S = Z @ B

    partition, ell = _components(c, tails, heads)
    rank_B = exact_rank(B)
    if ell != c - rank_B:
        raise AssertionError("linkage class count disagrees with c - rank(B)")
    return StoichiometryView(
        network=network,
        Z=Z,
        B=B,
        S=S,
        tails=np.array(tails, dtype=np.int64),
        heads=np.array(heads, dtype=np.int64),
        edge_reaction=np.array(edge_reaction, dtype=np.int64),
        edge_reverse=np.array(edge_reverse, dtype=bool),
        linkage_partition=partition,
        ell=ell,
        rank_B=rank_B,
    )


def _components(c: int, tails, heads) -> tuple[tuple[tuple[int, ...], ...], int]:
    uf = UnionFind(c)
    for a, b in zip(tails, heads):
        uf.union(int(a), int(b))
    blocks = tuple(uf.groups())
    return blocks, len(blocks)


def linkage_classes(view: StoichiometryView) -> tuple[tuple[tuple[int, ...], ...], int]:
    """Connected components of the undirected complex graph and their count."""
    return view.linkage_partition, view.ell


def conservation_basis(view: StoichiometryView) -> list[np.ndarray]:
    """Integer vectors ``w`` with ``w @ Z == 0`` spanning the left null space of Z."""
    return integer_null_space(view.Z.T)


def left_null_basis(matrix) -> list[np.ndarray]:
    """Integer basis of ``{w : w @ matrix == 0}``."""
    return integer_null_space(np.asarray(matrix).T)
