"""The extended affine Weyl group acting on the apartment.

Elements are affine maps with linear part in the folded Weyl group and
translation part in the lattice R.  The closed alcove is the fundamental
domain; reduction into it, the local reflection groups W_sc(x), and the
abelian alcove stabilizer are all computed geometrically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import ratlin
from .errors import GroupTooLarge, InternalInconsistency, NonTermination, NotInWaff
from .rootdata import iter_node_matchings
from .twistfold import RestrictedRootSystem

REDUCE_CAP = 10000
GROUP_CAP = 10**6


@dataclass(frozen=True)
class AffineMap:
    """x -> linear @ x + translation on the apartment."""

    linear: tuple
    translation: tuple

    @staticmethod
    def identity(m: int) -> "AffineMap":
        return AffineMap(ratlin.identity(m), ratlin.zeros(m))

    @staticmethod
    def from_translation(t) -> "AffineMap":
        t = ratlin.vec(t)
        return AffineMap(ratlin.identity(len(t)), t)

    def __call__(self, x):
        return ratlin.vec_add(ratlin.mat_vec(self.linear, ratlin.vec(x)), self.translation)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other."""
        return AffineMap(
            ratlin.mat_mul(self.linear, other.linear),
            ratlin.vec_add(ratlin.mat_vec(self.linear, other.translation), self.translation),
        )

    def inverse(self) -> "AffineMap":
        inv = ratlin.mat_inv(self.linear)
        return AffineMap(inv, ratlin.vec_scale(-1, ratlin.mat_vec(inv, self.translation)))

    def is_identity(self) -> bool:
        m = len(self.translation)
        return self.linear == ratlin.identity(m) and self.translation == ratlin.zeros(m)


def wall_reflection(system: RestrictedRootSystem, gradient, constant) -> AffineMap:
    """Reflection in the wall {gradient(x) + constant = 0}."""
    coroot = system.roots[ratlin.vec(gradient)].coroot
    m = system.m
    linear = tuple(
        tuple((1 if i == j else 0) - coroot[i] * gradient[j] for j in range(m)) for i in range(m)
    )
    return AffineMap(ratlin.mat(linear), ratlin.vec_scale(-ratlin.frac(constant), coroot))


def is_in_waff(system: RestrictedRootSystem, v: AffineMap) -> bool:
    return system.weyl.contains_linear(v.linear) and v.translation in system.lattice_R


def require_in_waff(system: RestrictedRootSystem, v: AffineMap) -> None:
    if not system.weyl.contains_linear(v.linear):
        raise NotInWaff("linear part is not in the folded Weyl group")
    if v.translation not in system.lattice_R:
        raise NotInWaff("translation part is not in the lattice R")


@dataclass(frozen=True)
class AlcovePoint:
    """Point of the closed alcove in Kac coordinates (one value per wall)."""

    kac: tuple
    point: tuple

    @property
    def interior(self) -> bool:
        return all(v > 0 for v in self.kac)

    def zero_set(self) -> tuple:
        return tuple(i for i, v in enumerate(self.kac) if v == 0)


def alcove_point(system: RestrictedRootSystem, x) -> AlcovePoint:
    x = ratlin.vec(x)
    kac = system.kac_coordinates(x)
    if any(v < 0 for v in kac):
        raise ValueError("point is not in the closed alcove")
    return AlcovePoint(kac=kac, point=x)


def alcove_point_from_kac(system: RestrictedRootSystem, kac) -> AlcovePoint:
    point = system.point_from_kac(kac)
    return alcove_point(system, point)


def alcove_reduce(system: RestrictedRootSystem, x):
    """Deterministic reduction into the closed alcove.

    Returns (v, point) with v(x) = point, v a product of reflections in the
    walls of the fundamental alcove, always crossing the least-index
    violated wall first.
    """
    x = ratlin.vec(x)
    v = AffineMap.identity(system.m)
    for _ in range(REDUCE_CAP):
        kac = system.kac_coordinates(x)
        idx = next((i for i, value in enumerate(kac) if value < 0), None)
        if idx is None:
            return v, AlcovePoint(kac=kac, point=x)
        node = system.affine_nodes[idx]
        r = wall_reflection(system, node.gradient, node.constant)
        x = r(x)
        v = r.compose(v)
    raise NonTermination("alcove reduction did not converge")


@dataclass(frozen=True)
class LocalStabilizer:
    zero_nodes: tuple        # S(x): indices into the affine node list
    vanishing_roots: tuple   # Sigma^aff(x): (root vector, level) pairs
    generators: tuple        # reflections in the vanishing walls
    elements: tuple          # all of W_sc(x)


def vanishing_walls(system: RestrictedRootSystem, x: AlcovePoint):
    """(S(x), Sigma^aff(x)) with the integral-span property asserted."""
    zero_nodes = x.zero_set()
    vanishing = []
    for beta in system.root_vectors:
        level = -ratlin.dot(beta, x.point)
        if level in system.roots[beta].levels:
            vanishing.append((beta, level))
    vanishing = tuple(sorted(vanishing))
    _assert_integral_span(system, zero_nodes, vanishing)
    return zero_nodes, vanishing


def local_stabilizer(system: RestrictedRootSystem, x: AlcovePoint) -> LocalStabilizer:
    """S(x), the vanishing affine roots, and the finite group they generate.

    Also asserts the integral-span property: every vanishing affine root is
    a Z-combination of the vanishing walls of the alcove.
    """
    zero_nodes, vanishing = vanishing_walls(system, x)
    generators = tuple(wall_reflection(system, beta, level) for beta, level in vanishing)
    elements = _close_group(generators, system.m)
    return LocalStabilizer(
        zero_nodes=zero_nodes, vanishing_roots=vanishing, generators=generators, elements=elements
    )


def wall_cartan(system: RestrictedRootSystem, node_indices):
    """Cartan matrix of a set of alcove walls under the restricted pairing."""
    gradients = [system.affine_nodes[i].gradient for i in node_indices]
    rows = []
    for gi in gradients:
        coroot = system.roots[gi].coroot
        row = []
        for gk in gradients:
            value = ratlin.dot(gk, coroot)
            if value.denominator != 1:
                raise InternalInconsistency("non-integral Cartan pairing between walls")
            row.append(int(value))
        rows.append(tuple(row))
    return tuple(rows)


def _assert_integral_span(system, zero_nodes, vanishing):
    walls = [system.affine_nodes[i] for i in zero_nodes]
    if not walls and vanishing:
        raise InternalInconsistency("vanishing roots with empty S(x)")
    columns = [tuple(w.gradient) + (w.constant,) for w in walls]
    matrix = ratlin.transpose(ratlin.mat(columns)) if columns else ()
    for beta, level in vanishing:
        target = ratlin.vec(tuple(beta) + (level,))
        sol = ratlin.solve(matrix, target) if columns else None
        if sol is None or any(c.denominator != 1 for c in sol):
            raise InternalInconsistency(
                f"affine root {beta}[{level}] is not an integral combination of S^aff(x)"
            )


def _close_group(generators, m, cap: int = GROUP_CAP):
    identity = AffineMap.identity(m)
    seen = {identity}
    frontier = [identity]
    while frontier:
        g = frontier.pop()
        for r in generators:
            h = r.compose(g)
            if h not in seen:
                if len(seen) >= cap:
                    raise GroupTooLarge(f"stabilizer closure exceeded {cap} elements")
                seen.add(h)
                frontier.append(h)
    return tuple(sorted(seen, key=lambda a: (a.linear, a.translation)))


def alcove_barycenter(system: RestrictedRootSystem):
    """Barycenter of the fundamental alcove, an interior point."""
    total = ratlin.zeros(system.m)
    count = 0
    for j in range(system.num_components):
        nodes = [system.affine_nodes[i] for i in system.component_nodes(j)]
        comp_total = ratlin.zeros(system.m)
        for node in nodes:
            comp_total = ratlin.vec_add(comp_total, node.vertex)
        total = ratlin.vec_add(total, ratlin.vec_scale(Fraction(1, len(nodes)), comp_total))
        count += 1
    return total


def alcoves_containing(system: RestrictedRootSystem, x: AlcovePoint):
    """The alcoves whose closure contains x, as images v(C) for v in W_sc(x)."""
    stab = local_stabilizer(system, x)
    bary = alcove_barycenter(system)
    keys = set()
    out = []
    for v in stab.elements:
        key = v(bary)
        if key in keys:
            raise InternalInconsistency("two stabilizer elements map the alcove to the same image")
        keys.add(key)
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class OmegaElement:
    """An affine map stabilizing the alcove, with its wall permutation."""

    map: AffineMap
    node_perm: tuple


def _component_pairings(system, nodes):
    a = {}
    for i in nodes:
        gi = system.affine_nodes[i].gradient
        coroot = system.roots[gi].coroot
        for k in nodes:
            a[i, k] = ratlin.dot(system.affine_nodes[k].gradient, coroot)
    return a


def _affine_map_from_vertex_images(system, coords, sources, targets):
    """Affine map on one component factor sending each source vertex to its target."""
    base = sources[0]
    rows = [[sources[k + 1][o] - base[o] for k in range(len(coords))] for o in coords]
    inv = ratlin.mat_inv(ratlin.mat(rows))
    image_base = targets[0]
    diffs = [[targets[k + 1][o] - image_base[o] for o in coords] for k in range(len(coords))]
    local = ratlin.mat_mul(ratlin.transpose(ratlin.mat(diffs)), inv)
    linear = [[Fraction(1 if i == j else 0) for j in range(system.m)] for i in range(system.m)]
    for a, oa in enumerate(coords):
        for b, ob in enumerate(coords):
            linear[oa][ob] = local[a][b]
    translation = [Fraction(0)] * system.m
    lin = ratlin.mat(linear)
    moved = ratlin.mat_vec(lin, ratlin.vec(base))
    for o in coords:
        translation[o] = image_base[o] - moved[o]
    return AffineMap(lin, ratlin.vec(translation))


def _component_alcove_symmetries(system, j):
    """All alcove-stabilizing elements of the extended group on component j."""
    nodes = system.component_nodes(j)
    pairing = _component_pairings(system, nodes)
    marks = {i: system.affine_nodes[i].mark for i in nodes}
    profiles = [
        (marks[i], tuple(sorted((pairing[i, k], pairing[k, i]) for k in nodes if k != i)))
        for i in nodes
    ]

    def compatible(assignment, a, b):
        for k in range(a):
            if assignment[k] is None:
                continue
            if pairing[nodes[a], nodes[k]] != pairing[nodes[b], nodes[assignment[k]]]:
                return False
            if pairing[nodes[k], nodes[a]] != pairing[nodes[assignment[k]], nodes[b]]:
                return False
        return True

    coords = system.component_coords[j]
    sources = [system.affine_nodes[i].vertex for i in nodes]
    found = []
    for perm in iter_node_matchings(profiles, profiles, compatible):
        targets = [system.affine_nodes[nodes[perm[k]]].vertex for k in range(len(nodes))]
        candidate = _affine_map_from_vertex_images(system, coords, sources, targets)
        if is_in_waff(system, candidate):
            found.append((candidate, {nodes[k]: nodes[perm[k]] for k in range(len(nodes))}))
    return found


def compute_omega_group(system: RestrictedRootSystem):
    """The alcove stabilizer, assembled componentwise and cross-checked.

    Candidates come from mark- and pairing-preserving wall permutations;
    each is realized as the unique affine map matching the vertex images and
    kept when its linear part lies in the folded Weyl group and its
    translation in R.  The result must be an abelian group whose order
    equals the index of the reflection translations inside R.
    """
    per_component = [_component_alcove_symmetries(system, j) for j in range(system.num_components)]
    elements = []
    for choice in itertools.product(*per_component):
        combined = AffineMap.identity(system.m)
        perm = {}
        for cmap, cperm in choice:
            combined = combined.compose(cmap)
            perm.update(cperm)
        node_perm = tuple(perm[i] for i in range(len(system.affine_nodes)))
        elements.append(OmegaElement(map=combined, node_perm=node_perm))
    elements.sort(key=lambda w: w.node_perm)

    by_map = {w.map: w for w in elements}
    for a in elements:
        for b in elements:
            ab = a.map.compose(b.map)
            if ab not in by_map:
                raise InternalInconsistency("alcove stabilizer candidates are not closed")
            if ab != b.map.compose(a.map):
                raise InternalInconsistency("alcove stabilizer is not abelian")
    index = system.lattice_R.index_of_sublattice(system.reflection_translation_lattice())
    if index != len(elements):
        raise InternalInconsistency(
            f"|Omega| = {len(elements)} but [R : R_sc] = {index}"
        )
    return tuple(elements)


def omega_group(system: RestrictedRootSystem):
    """compute_omega_group, cached on the system."""
    cached = getattr(system, "_omega_cache", None)
    if cached is None:
        cached = compute_omega_group(system)
        system._omega_cache = cached
    return cached


def decompose(system: RestrictedRootSystem, v: AffineMap):
    """Write v in the extended group as (reflection part, alcove stabilizer)."""
    require_in_waff(system, v)
    bary = alcove_barycenter(system)
    u, reduced = alcove_reduce(system, v(bary))
    if not reduced.interior:
        raise InternalInconsistency("image of the alcove barycenter reduced to a wall")
    omega = u.compose(v)
    v_sc = u.inverse()
    return v_sc, omega


def is_in_waff_sc(system: RestrictedRootSystem, v: AffineMap) -> bool:
    if not is_in_waff(system, v):
        return False
    _, omega = decompose(system, v)
    return omega.is_identity()


def node_permutation_of(system: RestrictedRootSystem, map_: AffineMap) -> tuple:
    """Wall permutation induced by an alcove-preserving affine map."""
    inv_t = ratlin.transpose(map_.inverse().linear)
    gradients = {node.gradient: i for i, node in enumerate(system.affine_nodes)}
    perm = []
    for node in system.affine_nodes:
        image = ratlin.mat_vec(inv_t, node.gradient)
        if image not in gradients:
            raise InternalInconsistency("map does not permute the alcove walls")
        perm.append(gradients[image])
    return tuple(perm)


def affine_diagram_automorphisms(system: RestrictedRootSystem):
    """All mark- and pairing-preserving permutations of the alcove walls.

    Unlike the alcove stabilizer this may move walls across components.
    """
    nodes = tuple(range(len(system.affine_nodes)))
    pairing = _component_pairings(system, nodes)
    marks = {i: system.affine_nodes[i].mark for i in nodes}
    profiles = [
        (marks[i], tuple(sorted((pairing[i, k], pairing[k, i]) for k in nodes if k != i and pairing[i, k] != 0)))
        for i in nodes
    ]

    def compatible(assignment, a, b):
        for k in range(a):
            if assignment[k] is None:
                continue
            if pairing[a, k] != pairing[b, assignment[k]]:
                return False
            if pairing[k, a] != pairing[assignment[k], b]:
                return False
        return True

    return tuple(iter_node_matchings(profiles, profiles, compatible))


def restricted_diagram_automorphisms(system: RestrictedRootSystem):
    """Wall permutations stabilizing the set of lowest-root nodes."""
    lowest = {i for i, node in enumerate(system.affine_nodes) if node.constant != 0}
    return tuple(
        p for p in affine_diagram_automorphisms(system) if {p[i] for i in lowest} == lowest
    )
