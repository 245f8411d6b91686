"""Folding of an adjoint datum by its twisting automorphism.

The fixed subspace of the coweight space is the apartment; restrictions
of absolute roots give a possibly non-reduced system on it.  Each
restricted root carries the size e of the absolute orbit above it, a
divisibility flag, and a discrete set of affine levels; the simple
restricted roots plus one lowest affine root per component cut out the
alcove, with integer marks normalizing the sum of the walls to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import ratlin
from .errors import DegenerateComponent, InternalInconsistency
from .rootdata import BasedRootDatum, PinnedAutomorphism, ReflectionSystem, perm_orbits


@dataclass(frozen=True)
class LevelSet:
    """Arithmetic progression offset + period*Z inside Q."""

    period: Fraction
    offset: Fraction

    def __contains__(self, value) -> bool:
        return ((ratlin.frac(value) - self.offset) / self.period).denominator == 1

    def min_positive(self) -> Fraction:
        return self.offset if self.offset > 0 else self.period


@dataclass(frozen=True)
class RestrictedRoot:
    vector: tuple        # functional on the apartment, coords in the Delta_res basis
    coroot: tuple        # point of the apartment, coords in the orbit-coweight basis
    e: int               # size of the theta-orbit of absolute roots above it
    divisible: bool
    theta_orbit: tuple   # the absolute roots restricting to this root

    @property
    def indivisible(self) -> bool:
        return not self.divisible

    @property
    def levels(self) -> LevelSet:
        period = Fraction(1, self.e)
        offset = Fraction(1, 2 * self.e) if self.divisible else Fraction(0)
        return LevelSet(period, offset)


@dataclass(frozen=True)
class AffineSimpleRoot:
    gradient: tuple      # restricted root vector
    constant: Fraction   # level, 0 for the simple walls
    mark: int
    component: int       # index in I(G)/Theta
    vertex: tuple        # opposite vertex of the alcove (zero outside the component)
    label: str


class ApartmentModel:
    """Coordinate model of the apartment with its two lattices."""

    def __init__(self, system: "RestrictedRootSystem"):
        self.dimension = system.m
        self.e = system.e_of_orbit
        # Cocharacter lattice: integer vectors.  R refines it by 1/e per axis.
        self.cocharacter_lattice = ratlin.Lattice(ratlin.identity(system.m))
        self.translation_lattice = ratlin.Lattice(
            [ratlin.vec_scale(Fraction(1, self.e[o]), row) for o, row in enumerate(ratlin.identity(system.m))]
        )

    def index(self) -> int:
        return self.translation_lattice.index_of_sublattice(self.cocharacter_lattice)


class RestrictedRootSystem:
    """The folded system plus the affine and lattice data hanging off it."""

    def __init__(self, datum: BasedRootDatum, theta: PinnedAutomorphism):
        self.datum = datum
        self.theta = theta
        self.node_orbits = perm_orbits([theta.perm], datum.n)
        self.m = len(self.node_orbits)
        self.orbit_of_node = {i: o for o, orbit in enumerate(self.node_orbits) for i in orbit}
        self.e_of_orbit = tuple(len(o) for o in self.node_orbits)

        self._fold_roots()
        self._fold_components()
        self._build_weyl()
        self.apartment = ApartmentModel(self)
        self._affine_nodes = None

    # -- folding -------------------------------------------------------

    def restrict(self, absolute_root):
        v = ratlin.vec(absolute_root)
        return tuple(sum((v[i] for i in orbit), Fraction(0)) for orbit in self.node_orbits)

    def _theta_on_root(self, root):
        perm = self.theta.perm
        out = [None] * len(root)
        for i, c in enumerate(root):
            out[perm[i]] = c
        return tuple(out)

    def _fold_roots(self):
        datum = self.datum
        remaining = set(datum.all_roots)
        orbits = []
        while remaining:
            seed = min(remaining)
            orbit = [seed]
            cur = self._theta_on_root(seed)
            while cur != seed:
                orbit.append(cur)
                cur = self._theta_on_root(cur)
            remaining.difference_update(orbit)
            orbits.append(tuple(sorted(orbit)))

        by_vector = {}
        for orbit in orbits:
            images = {self.restrict(a) for a in orbit}
            if len(images) != 1:
                raise InternalInconsistency("theta-orbit restricts to several functionals")
            beta = images.pop()
            if beta in by_vector:
                raise InternalInconsistency("two theta-orbits share a restriction")
            by_vector[beta] = orbit

        gram = self._orbit_gram()
        roots = {}
        for beta, orbit in by_vector.items():
            half = tuple(c / 2 for c in beta)
            divisible = half in by_vector
            u = ratlin.solve(gram, beta)
            norm = ratlin.dot(beta, u)
            coroot = tuple(2 * x / norm for x in u)
            roots[beta] = RestrictedRoot(
                vector=beta, coroot=coroot, e=len(orbit), divisible=divisible, theta_orbit=orbit
            )
        self.roots = roots
        self.root_vectors = tuple(sorted(roots))
        self.indivisible_vectors = tuple(v for v in self.root_vectors if not roots[v].divisible)
        # Simple restricted roots are the coordinate functionals, one per orbit.
        basis = ratlin.identity(self.m)
        for v in basis:
            if v not in roots:
                raise InternalInconsistency("restriction of a simple root is not a restricted root")
        self.delta_res = basis

    def _orbit_gram(self):
        inv = self.datum.form_inv
        g = [[Fraction(0)] * self.m for _ in range(self.m)]
        for a, oa in enumerate(self.node_orbits):
            for b, ob in enumerate(self.node_orbits):
                g[a][b] = sum((inv[i][j] for i in oa for j in ob), Fraction(0))
        return ratlin.mat(g)

    def _fold_components(self):
        datum = self.datum
        comp_of_node = {i: k for k, c in enumerate(datum.components) for i in c.nodes}
        # theta permutes the absolute components; group them into orbits.
        k = len(datum.components)
        comp_perm = [None] * k
        for j, comp in enumerate(datum.components):
            comp_perm[j] = comp_of_node[self.theta.perm[comp.nodes[0]]]
        self.absolute_component_orbits = perm_orbits([tuple(comp_perm)], k)
        self.component_of_orbit = {}
        for o, orbit in enumerate(self.node_orbits):
            folded = {self._folded_component(comp_of_node[i]) for i in orbit}
            if len(folded) != 1:
                raise InternalInconsistency("node orbit crosses folded components")
            self.component_of_orbit[o] = folded.pop()
        self.num_components = len(self.absolute_component_orbits)
        self.component_coords = tuple(
            tuple(o for o in range(self.m) if self.component_of_orbit[o] == j)
            for j in range(self.num_components)
        )

    def _folded_component(self, abs_component: int) -> int:
        for j, orbit in enumerate(self.absolute_component_orbits):
            if abs_component in orbit:
                return j
        raise IndexError(abs_component)

    def _build_weyl(self):
        ind = [v for v in ratlin.identity(self.m)]
        coroots = [self.roots[v].coroot for v in ind]
        self.weyl = ReflectionSystem(ind, coroots)
        closure = set(self.weyl.all_roots())
        if closure != set(v for v in self.indivisible_vectors):
            raise InternalInconsistency("indivisible restricted roots are not reflection-closed")

    # -- affine structure ----------------------------------------------

    def positive_roots(self, component: int | None = None):
        out = []
        for v in self.root_vectors:
            if all(c >= 0 for c in v) and any(c > 0 for c in v):
                if component is None or self.component_of_orbit[self._support_orbit(v)] == component:
                    out.append(v)
        return tuple(out)

    def _support_orbit(self, vector) -> int:
        return next(o for o, c in enumerate(vector) if c != 0)

    @property
    def affine_nodes(self):
        if self._affine_nodes is None:
            self._affine_nodes = build_affine_basis(self)
        return self._affine_nodes

    def component_nodes(self, j: int):
        return tuple(i for i, node in enumerate(self.affine_nodes) if node.component == j)

    def kac_coordinates(self, x):
        x = ratlin.vec(x)
        return tuple(ratlin.dot(node.gradient, x) + node.constant for node in self.affine_nodes)

    def point_from_kac(self, kac):
        """Inverse of kac_coordinates; validates the lowest-root coordinates."""
        point = [Fraction(0)] * self.m
        for value, node in zip(kac, self.affine_nodes):
            if node.constant == 0:
                o = self._support_orbit(node.gradient)
                point[o] = ratlin.frac(value)
        point = tuple(point)
        actual = self.kac_coordinates(point)
        if tuple(ratlin.frac(v) for v in kac) != actual:
            raise ValueError("inconsistent Kac coordinates")
        return point

    def in_closed_alcove(self, x) -> bool:
        return all(v >= 0 for v in self.kac_coordinates(x))

    def in_open_alcove(self, x) -> bool:
        return all(v > 0 for v in self.kac_coordinates(x))

    # -- lattices -------------------------------------------------------

    @property
    def lattice_R(self) -> ratlin.Lattice:
        return self.apartment.translation_lattice

    @property
    def lattice_cochar(self) -> ratlin.Lattice:
        return self.apartment.cocharacter_lattice

    def reflection_translation_lattice(self) -> ratlin.Lattice:
        """Translation subgroup of the group generated by affine reflections.

        Per indivisible direction beta the wall levels form
        Lambda(beta) union (1/2)Lambda(2 beta); the differences of that set
        times the coroot generate all translations with linear part 1.
        """
        gens = []
        for v in self.indivisible_vectors:
            beta = self.roots[v]
            spacing = Fraction(1, beta.e)
            double = tuple(2 * c for c in v)
            if double in self.roots:
                e2 = self.roots[double].e
                spacing = ratlin.frac_gcd(spacing, Fraction(1, 4 * e2))
            gens.append(ratlin.vec_scale(spacing, beta.coroot))
        return ratlin.lattice_from_generators(gens, self.m)


def restrict_roots(datum: BasedRootDatum, theta: PinnedAutomorphism) -> RestrictedRootSystem:
    """Fold the datum by theta."""
    return RestrictedRootSystem(datum, theta)


def affine_levels(root: RestrictedRoot) -> LevelSet:
    """The discrete level set of a restricted root: (1/e)Z, shifted by 1/(2e)
    when the root is divisible."""
    return root.levels


def build_affine_basis(system: RestrictedRootSystem):
    """Simple walls plus the lowest affine root of each component, with marks.

    The lowest root is the unique positive restricted root whose first wall
    dominates all others on the dominant cone; the marks solve the relation
    that the mark-weighted sum of the walls is the constant function 1.
    """
    nodes = []
    for j in range(system.num_components):
        coords = system.component_coords[j]
        positives = system.positive_roots(j)
        if not positives:
            raise DegenerateComponent(f"component {j} has no positive restricted roots")
        normalized = {}
        for v in positives:
            c = system.roots[v].levels.min_positive()
            normalized[v] = tuple(x / c for x in v)
        best = None
        for v, n in normalized.items():
            if all(all(a >= b for a, b in zip(n, other)) for other in normalized.values()):
                if best is not None:
                    raise DegenerateComponent(f"component {j} has two dominant walls")
                best = v
        if best is None:
            raise DegenerateComponent(f"component {j} has no dominant wall")
        lowest = tuple(-c for c in best)
        level = system.roots[best].levels.min_positive()
        if level not in system.roots[lowest].levels:
            raise DegenerateComponent("lowest level is not an affine level of the lowest root")

        gradients = [ratlin.identity(system.m)[o] for o in coords] + [lowest]
        constants = [Fraction(0)] * len(coords) + [level]
        # Solve sum(d * gradient) = 0 on the component coordinates and
        # sum(d * constant) = 1.
        rows = [[g[o] for g in gradients] for o in coords]
        rows.append(list(constants))
        rhs = [Fraction(0)] * len(coords) + [Fraction(1)]
        marks = ratlin.solve(ratlin.mat(rows), ratlin.vec(rhs))
        if marks is None or len(ratlin.nullspace(ratlin.mat(rows))) != 0:
            raise DegenerateComponent(f"mark system of component {j} is singular")
        for d in marks:
            if d.denominator != 1 or d <= 0:
                raise DegenerateComponent(f"non-integral or non-positive mark {d}")

        comp_nodes = []
        for idx, (g, c, d) in enumerate(zip(gradients, constants, marks)):
            others = [(gradients[k], constants[k]) for k in range(len(gradients)) if k != idx]
            vertex = _solve_vertex(others, coords, system.m)
            label = f"c{j}.s{idx}" if idx < len(coords) else f"c{j}.0"
            comp_nodes.append(
                AffineSimpleRoot(
                    gradient=g,
                    constant=ratlin.frac(c),
                    mark=int(d),
                    component=j,
                    vertex=vertex,
                    label=label,
                )
            )
        for node in comp_nodes:
            value = ratlin.dot(node.gradient, node.vertex) + node.constant
            if value != Fraction(1, node.mark):
                raise DegenerateComponent("vertex does not sit at height 1/mark")
        nodes.extend(comp_nodes)
    return tuple(nodes)


def _solve_vertex(walls, coords, m):
    rows = [[g[o] for o in coords] for g, _ in walls]
    rhs = [-c for _, c in walls]
    local = ratlin.solve(ratlin.mat(rows), ratlin.vec(rhs))
    if local is None:
        raise DegenerateComponent("vertex system is inconsistent")
    vertex = [Fraction(0)] * m
    for o, value in zip(coords, local):
        vertex[o] = value
    return tuple(vertex)


def translation_lattice(system: RestrictedRootSystem) -> ratlin.Lattice:
    """The lattice R of translations of the extended affine Weyl group."""
    return system.lattice_R
