"""Adjoint based root data with pinned diagram automorphisms.

A datum is specified by a list of simple Cartan types plus a node
permutation for the twisting automorphism and one per Galois generator.
Characters are written in the basis of simple roots, cocharacters in the
dual basis of fundamental coweights, so the adjoint lattices are exactly
the integer vectors and every pairing is a plain dot product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from . import ratlin
from .errors import (
    AutomorphismMismatch,
    GroupTooLarge,
    InvalidCartanType,
    NonCommuting,
    NotDiagramAutomorphism,
    RankGuardExceeded,
)

SIMPLE_TYPES = "ABCDEFG"

ROOT_COUNTS = {
    "A": lambda n: n * (n + 1),
    "B": lambda n: 2 * n * n,
    "C": lambda n: 2 * n * n,
    "D": lambda n: 2 * n * (n - 1),
    "E": lambda n: {6: 72, 7: 126, 8: 240}[n],
    "F": lambda n: 48,
    "G": lambda n: 12,
}

WEYL_ORDERS = {
    "A": lambda n: _factorial(n + 1),
    "B": lambda n: 2**n * _factorial(n),
    "C": lambda n: 2**n * _factorial(n),
    "D": lambda n: 2 ** (n - 1) * _factorial(n),
    "E": lambda n: {6: 51840, 7: 2903040, 8: 696729600}[n],
    "F": lambda n: 1152,
    "G": lambda n: 12,
}


def _factorial(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def cartan_matrix(label: str, rank: int):
    """Cartan matrix of one simple type, entries a[i][j] = <alpha_j, coroot_i>."""
    if label == "A" and rank >= 1:
        edges = [(i, i + 1) for i in range(rank - 1)]
        special = {}
    elif label == "B" and rank >= 2:
        edges = [(i, i + 1) for i in range(rank - 1)]
        special = {(rank - 1, rank - 2): -2}
    elif label == "C" and rank >= 2:
        edges = [(i, i + 1) for i in range(rank - 1)]
        special = {(rank - 2, rank - 1): -2}
    elif label == "D" and rank >= 3:
        edges = [(i, i + 1) for i in range(rank - 3)] + [(rank - 3, rank - 2), (rank - 3, rank - 1)]
        special = {}
    elif label == "E" and rank in (6, 7, 8):
        edges = [(0, 2), (1, 3)] + [(i, i + 1) for i in range(2, rank - 1)]
        special = {}
    elif label == "F" and rank == 4:
        edges = [(0, 1), (1, 2), (2, 3)]
        special = {(2, 1): -2}
    elif label == "G" and rank == 2:
        edges = [(0, 1)]
        special = {(1, 0): -3}
    else:
        raise InvalidCartanType(f"no simple type {label}{rank}")
    a = [[2 if i == j else 0 for j in range(rank)] for i in range(rank)]
    for i, j in edges:
        a[i][j] = a[j][i] = -1
    for (i, j), v in special.items():
        a[i][j] = v
    return tuple(tuple(row) for row in a)


def symmetrizer(cartan) -> tuple:
    """Minimal positive integers d with d_i*a_ij = d_j*a_ji (per component)."""
    n = len(cartan)
    d = [None] * n
    for start in range(n):
        if d[start] is not None:
            continue
        d[start] = Fraction(1)
        queue = [start]
        while queue:
            i = queue.pop()
            for j in range(n):
                if i != j and cartan[i][j] != 0 and d[j] is None:
                    d[j] = d[i] * cartan[i][j] / cartan[j][i]
                    queue.append(j)
    scale = lcm(*(x.denominator for x in d))
    ints = [int(x * scale) for x in d]
    g = 0
    for x in ints:
        g = _gcd(g, x)
    return tuple(x // g for x in ints)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


@dataclass(frozen=True)
class CartanSpec:
    """Declarative description of an adjoint datum with its automorphisms."""

    components: tuple          # ((label, rank), ...)
    theta: tuple               # node permutation over all nodes
    galois_perms: tuple = ()   # one node permutation per Galois generator

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((str(l), int(r)) for l, r in self.components))
        object.__setattr__(self, "theta", tuple(self.theta))
        object.__setattr__(self, "galois_perms", tuple(tuple(p) for p in self.galois_perms))


def perm_order(perm) -> int:
    n = len(perm)
    seen = [False] * n
    order = 1
    for i in range(n):
        if seen[i]:
            continue
        size = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            size += 1
        order = lcm(order, size)
    return order


def compose_perms(p, q):
    """Permutation doing q first, then p."""
    return tuple(p[q[i]] for i in range(len(q)))


def perm_orbits(perms, n):
    """Orbits of {0..n-1} under the group generated by the given permutations."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in perms:
        for i in range(n):
            ri, rj = find(i), find(p[i])
            if ri != rj:
                parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted((tuple(sorted(v)) for v in groups.values()), key=lambda o: o[0])


class ReflectionSystem:
    """A root system presented by simple roots acting on a coordinate space.

    Points live in an n-dimensional rational space; simple root i is the
    functional `roots[i]` (values on the coordinate basis) and its coroot
    the point `coroots[i]`.  Reflections act on points by
    y -> y - <root, y> * coroot and on functionals by pullback.
    """

    def __init__(self, simple_roots, simple_coroots):
        self.simple_roots = ratlin.mat(simple_roots)
        self.simple_coroots = ratlin.mat(simple_coroots)
        self.n = len(self.simple_roots[0]) if self.simple_roots else 0
        self.rank = len(self.simple_roots)
        self._all_roots = None

    def reflect_point(self, i: int, y):
        c = ratlin.dot(self.simple_roots[i], y)
        return tuple(a - c * b for a, b in zip(y, self.simple_coroots[i]))

    def reflect_functional(self, i: int, f):
        c = ratlin.dot(f, self.simple_coroots[i])
        return tuple(a - c * b for a, b in zip(f, self.simple_roots[i]))

    def reflection_matrix(self, i: int):
        cols = [self.reflect_point(i, row) for row in ratlin.identity(self.n)]
        return ratlin.transpose(ratlin.mat(cols))

    def all_roots(self):
        """Reflection closure of the simple roots (as functionals)."""
        if self._all_roots is None:
            seen = set(self.simple_roots)
            frontier = list(self.simple_roots)
            while frontier:
                f = frontier.pop()
                for i in range(self.rank):
                    g = self.reflect_functional(i, f)
                    if g not in seen:
                        seen.add(g)
                        frontier.append(g)
            self._all_roots = tuple(sorted(seen))
        return self._all_roots

    def is_dominant(self, y) -> bool:
        return all(ratlin.dot(r, y) >= 0 for r in self.simple_roots)

    def reduce_to_dominant(self, y):
        """(word, dominant point): applying s_{word[k]}..s_{word[0]} to y.

        Deterministic: always reflects in the least-index negative wall.
        """
        y = ratlin.vec(y)
        word = []
        while True:
            i = next((i for i in range(self.rank) if ratlin.dot(self.simple_roots[i], y) < 0), None)
            if i is None:
                return tuple(word), y
            y = self.reflect_point(i, y)
            word.append(i)

    def word_matrix(self, word):
        m = ratlin.identity(self.n)
        for i in word:
            m = ratlin.mat_mul(self.reflection_matrix(i), m)
        return m

    def _regular_point(self):
        # Strictly dominant, hence regular for the whole root system.
        rows = self.simple_roots
        sol = ratlin.solve(rows, tuple(Fraction(1) for _ in rows))
        if sol is None:
            raise ValueError("simple roots are not independent")
        return sol

    def decompose_automorphism(self, linear):
        """Split a root-permuting linear map as (Weyl word, node permutation).

        The map must send the root set to itself; raises
        NotDiagramAutomorphism otherwise.  The word is a Weyl element w with
        w o linear fixing the dominant chamber, and the permutation is the
        induced relabeling of the simple roots.
        """
        inv = ratlin.mat_inv(linear)
        roots = set(self.all_roots())
        pushed = {ratlin.mat_vec(ratlin.transpose(inv), f) for f in roots}
        if pushed != roots:
            raise NotDiagramAutomorphism("linear map does not permute the root system")
        word, _ = self.reduce_to_dominant(ratlin.mat_vec(linear, self._regular_point()))
        w = self.word_matrix(word)
        residual = ratlin.mat_mul(w, linear)
        res_inv_t = ratlin.transpose(ratlin.mat_inv(residual))
        perm = []
        for f in self.simple_roots:
            g = ratlin.mat_vec(res_inv_t, f)
            try:
                perm.append(self.simple_roots.index(g))
            except ValueError:
                raise NotDiagramAutomorphism("residual map does not permute the simple roots")
        return word, tuple(perm)

    def contains_linear(self, linear) -> bool:
        """Membership of a linear map in the Weyl group."""
        try:
            word, perm = self.decompose_automorphism(linear)
        except NotDiagramAutomorphism:
            return False
        return perm == tuple(range(self.rank))

    def enumerate_elements(self, limit: int = 10**6):
        """All Weyl group elements as matrices (BFS closure, guarded)."""
        gens = [self.reflection_matrix(i) for i in range(self.rank)]
        seen = {ratlin.identity(self.n)}
        frontier = list(seen)
        while frontier:
            m = frontier.pop()
            for g in gens:
                x = ratlin.mat_mul(g, m)
                if x not in seen:
                    if len(seen) >= limit:
                        raise GroupTooLarge(f"Weyl closure exceeded {limit} elements")
                    seen.add(x)
                    frontier.append(x)
        return seen


@dataclass(frozen=True)
class Component:
    label: str
    rank: int
    nodes: tuple


class BasedRootDatum:
    """Adjoint root datum: X*(T) is the root lattice of the given type."""

    def __init__(self, spec: CartanSpec):
        self.spec = spec
        blocks = [cartan_matrix(label, rank) for label, rank in spec.components]
        self.n = sum(len(b) for b in blocks)
        offsets = []
        pos = 0
        for b in blocks:
            offsets.append(pos)
            pos += len(b)
        cartan = [[0] * self.n for _ in range(self.n)]
        comps = []
        for (label, rank), block, off in zip(spec.components, blocks, offsets):
            for i in range(rank):
                for j in range(rank):
                    cartan[off + i][off + j] = block[i][j]
            comps.append(Component(label, rank, tuple(range(off, off + rank))))
        self.cartan_matrix = tuple(tuple(row) for row in cartan)
        self.components = tuple(comps)
        self.simple_roots = ratlin.identity(self.n)
        self.simple_coroots = ratlin.mat(self.cartan_matrix)
        self.reflections = ReflectionSystem(self.simple_roots, self.simple_coroots)
        # theta-invariant symmetric form on characters: M = diag(d) * A.
        d = []
        for (label, rank), off in zip(spec.components, offsets):
            d.extend(symmetrizer(cartan_matrix(label, rank)))
        self.symmetrizer = tuple(d)
        self.form = tuple(
            tuple(Fraction(d[i] * self.cartan_matrix[i][j]) for j in range(self.n)) for i in range(self.n)
        )
        self.form_inv = ratlin.mat_inv(self.form)
        self._check_perm(spec.theta, "theta")
        self.theta = PinnedAutomorphism(self, spec.theta)
        for k, p in enumerate(spec.galois_perms):
            self._check_perm(p, f"galois generator {k}")
            if compose_perms(spec.theta, p) != compose_perms(p, spec.theta):
                raise NonCommuting(f"galois generator {k} does not commute with theta")
        self.all_roots = self.reflections.all_roots()
        expected = sum(ROOT_COUNTS[label](rank) for label, rank in spec.components)
        if len(self.all_roots) != expected:
            raise AutomorphismMismatch(
                f"reflection closure produced {len(self.all_roots)} roots, expected {expected}"
            )
        self._coroots = {}
        for root in self.all_roots:
            grad = ratlin.mat_vec(self.form, root)
            norm = ratlin.dot(root, grad)
            self._coroots[root] = tuple(2 * g / norm for g in grad)

    def _check_perm(self, perm, what):
        if sorted(perm) != list(range(self.n)):
            raise AutomorphismMismatch(f"{what} is not a permutation of the {self.n} nodes")
        for i in range(self.n):
            for j in range(self.n):
                if self.cartan_matrix[perm[i]][perm[j]] != self.cartan_matrix[i][j]:
                    raise NotDiagramAutomorphism(f"{what} does not preserve the Cartan matrix")

    def coroot(self, root):
        """Coroot in fundamental-coweight coordinates; pairing is the dot product."""
        return self._coroots[ratlin.vec(root)]

    def pairing(self, character, cocharacter) -> Fraction:
        return ratlin.dot(ratlin.vec(character), ratlin.vec(cocharacter))

    def component_of_node(self, i: int) -> int:
        for k, comp in enumerate(self.components):
            if i in comp.nodes:
                return k
        raise IndexError(i)

    def component_labels(self):
        """Canonical component labels: sorted by type, rank, then first node."""
        order = sorted(range(len(self.components)),
                       key=lambda k: (self.components[k].label, self.components[k].rank,
                                      self.components[k].nodes[0]))
        names = [None] * len(self.components)
        for serial, k in enumerate(order):
            c = self.components[k]
            names[k] = f"{c.label}{c.rank}#{serial}"
        return tuple(names)


class PinnedAutomorphism:
    """A node permutation realized on characters and cocharacters."""

    def __init__(self, datum: BasedRootDatum, perm):
        self.datum = datum
        self.perm = tuple(perm)
        self.order = perm_order(self.perm)
        n = datum.n
        # alpha_i -> alpha_{perm(i)} on characters; same permutation on the
        # dual coweight basis.
        rows = [[Fraction(1 if self.perm[j] == i else 0) for j in range(n)] for i in range(n)]
        self.on_characters = tuple(tuple(r) for r in rows)
        self.on_cocharacters = self.on_characters

    def apply_to_character(self, v):
        return ratlin.mat_vec(self.on_characters, ratlin.vec(v))

    def apply_to_cocharacter(self, v):
        return ratlin.mat_vec(self.on_cocharacters, ratlin.vec(v))

    def node_image(self, i: int) -> int:
        return self.perm[i]


def build_based_root_datum(spec: CartanSpec) -> BasedRootDatum:
    """Construct and validate the datum described by `spec`."""
    return BasedRootDatum(spec)


def validate_pinned_automorphism(datum: BasedRootDatum, perm) -> PinnedAutomorphism:
    """Check that `perm` is a diagram automorphism commuting with the Galois
    generators and return it with its induced linear maps."""
    datum._check_perm(tuple(perm), "automorphism")
    for k, p in enumerate(datum.spec.galois_perms):
        if compose_perms(tuple(perm), p) != compose_perms(p, tuple(perm)):
            raise NonCommuting(f"automorphism does not commute with galois generator {k}")
    return PinnedAutomorphism(datum, perm)


def weyl_group_elements(datum: BasedRootDatum, max_rank_guard: int = 8) -> ReflectionSystem:
    """Weyl machinery for the absolute datum, guarded by total rank."""
    if datum.n > max_rank_guard:
        raise RankGuardExceeded(f"rank {datum.n} exceeds guard {max_rank_guard}")
    return datum.reflections


def classify_cartan(matrix):
    """Name the simple type of a connected finite Cartan matrix.

    Returns e.g. "A3", "B2", "G2"; symmetric rank-2 double bonds are
    reported as B2 and D3 as A3, so labels are canonical.
    """
    n = len(matrix)
    candidates = []
    for label in SIMPLE_TYPES:
        try:
            ref = cartan_matrix(label, n)
        except InvalidCartanType:
            continue
        candidates.append((label, ref))
    for label, ref in candidates:
        if _cartan_isomorphic(matrix, ref):
            canonical = {"C2": "B2", "D3": "A3"}
            name = f"{label}{n}"
            return canonical.get(name, name)
    return None


def _cartan_isomorphic(a, b) -> bool:
    n = len(a)
    if len(b) != n:
        return False

    def profile(m, i):
        return tuple(sorted((m[i][j], m[j][i]) for j in range(n) if j != i and m[i][j] != 0))

    pa = [profile(a, i) for i in range(n)]
    pb = [profile(b, i) for i in range(n)]
    if sorted(pa) != sorted(pb):
        return False

    assignment = [None] * n
    used = [False] * n

    def backtrack(i):
        if i == n:
            return True
        for j in range(n):
            if used[j] or pa[i] != pb[j]:
                continue
            ok = True
            for k in range(i):
                if a[i][k] != b[j][assignment[k]] or a[k][i] != b[assignment[k]][j]:
                    ok = False
                    break
            if ok:
                assignment[i] = j
                used[j] = True
                if backtrack(i + 1):
                    return True
                used[j] = False
        return False

    return backtrack(0)


def iter_node_matchings(profiles_a, profiles_b, compatible):
    """Backtracking enumeration of bijections a->b with local compatibility.

    `profiles_*` give a hashable invariant per node; `compatible(partial, i, j)`
    may veto extending the partial assignment {0..i-1 -> ...} with i -> j.
    """
    n = len(profiles_a)
    if n != len(profiles_b):
        return
    assignment = [None] * n
    used = [False] * n

    def backtrack(i):
        if i == n:
            yield tuple(assignment)
            return
        for j in range(n):
            if used[j] or profiles_a[i] != profiles_b[j]:
                continue
            if not compatible(assignment, i, j):
                continue
            assignment[i] = j
            used[j] = True
            yield from backtrack(i + 1)
            used[j] = False
            assignment[i] = None

    yield from backtrack(0)
