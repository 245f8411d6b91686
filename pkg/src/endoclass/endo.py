"""Pairs (omega-star, x) over a finite Galois model and their classes.

The Galois group enters only through a finite group acting on the
absolute diagram, commuting with the twist.  A pair consists of a map
into the alcove stabilizer whose twisted composite is a homomorphism
into the affine transformations, together with a fixed point in the
closed alcove.  Two pairs are equivalent when conjugate under the alcove
stabilizer; elliptic pairs minimize the wall-orbit count.

Everything group-sized is precomputed into index tables on the model, so
enumeration over torsion grids costs tuple arithmetic per point.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from fractions import Fraction

from . import ratlin
from .affine import (
    AffineMap,
    AlcovePoint,
    OmegaElement,
    node_permutation_of,
    omega_group,
)
from .errors import (
    InternalInconsistency,
    InvalidGaloisAction,
    ModelMismatch,
    NotFixed,
    NotHomomorphism,
)
from .rootdata import compose_perms, perm_orbits
from .twistfold import RestrictedRootSystem


class FiniteGroup:
    """Finite group with named elements given by a multiplication table."""

    def __init__(self, elements, table, generators=None, name=""):
        self.elements = tuple(elements)
        self.table = dict(table)
        self.name = name or "table"
        idx = {e: i for i, e in enumerate(self.elements)}
        if len(idx) != len(self.elements):
            raise InvalidGaloisAction("duplicate element names")
        for a in self.elements:
            for b in self.elements:
                if (a, b) not in self.table or self.table[a, b] not in idx:
                    raise InvalidGaloisAction(f"multiplication table misses ({a},{b})")
        identity = None
        for e in self.elements:
            if all(self.table[e, a] == a and self.table[a, e] == a for a in self.elements):
                identity = e
                break
        if identity is None:
            raise InvalidGaloisAction("no identity element")
        self.identity = identity
        for a in self.elements:
            for b in self.elements:
                for c in self.elements:
                    if self.table[self.table[a, b], c] != self.table[a, self.table[b, c]]:
                        raise InvalidGaloisAction("multiplication table is not associative")
        self._inverse = {}
        for a in self.elements:
            inv = next((b for b in self.elements if self.table[a, b] == identity), None)
            if inv is None or self.table[inv, a] != identity:
                raise InvalidGaloisAction(f"element {a} has no inverse")
            self._inverse[a] = inv
        self.generators = tuple(generators) if generators else tuple(e for e in self.elements if e != identity)
        if self.subgroup(self.generators) != set(self.elements):
            raise InvalidGaloisAction("declared generators do not generate the group")

    def __len__(self):
        return len(self.elements)

    def mul(self, a, b):
        return self.table[a, b]

    def inverse(self, a):
        return self._inverse[a]

    def order_of(self, a) -> int:
        n = 1
        x = a
        while x != self.identity:
            x = self.mul(x, a)
            n += 1
        return n

    def subgroup(self, gens) -> set:
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            a = frontier.pop()
            for g in gens:
                b = self.mul(a, g)
                if b not in seen:
                    seen.add(b)
                    frontier.append(b)
        return seen

    def cyclic_subgroups(self):
        """One representative list per distinct cyclic subgroup <q>."""
        seen = {}
        for q in self.elements:
            members = frozenset(self.subgroup([q]))
            seen.setdefault(members, q)
        return tuple(sorted(((members, tag) for members, tag in seen.items()),
                            key=lambda mt: (len(mt[0]), mt[1])))

    @classmethod
    def trivial(cls):
        return cls(("1",), {("1", "1"): "1"}, generators=("1",), name="1")

    @classmethod
    def cyclic(cls, n: int):
        elements = tuple(f"g{k}" for k in range(n))
        table = {(f"g{a}", f"g{b}"): f"g{(a + b) % n}" for a in range(n) for b in range(n)}
        return cls(elements, table, generators=("g1",) if n > 1 else ("g0",), name=f"C{n}")

    @classmethod
    def symmetric(cls, n: int):
        perms = sorted(itertools.permutations(range(n)))
        names = {p: "".join(str(i) for i in p) for p in perms}
        table = {}
        for p in perms:
            for q in perms:
                table[names[p], names[q]] = names[compose_perms(p, q)]
        gens = [names[tuple([1, 0] + list(range(2, n)))]] if n >= 2 else [names[perms[0]]]
        if n >= 3:
            gens.append(names[tuple(list(range(1, n)) + [0])])
        return cls(tuple(names[p] for p in perms), table, generators=tuple(gens), name=f"S{n}")

    @classmethod
    def direct_product(cls, g1: "FiniteGroup", g2: "FiniteGroup"):
        elements = tuple(f"{a}|{b}" for a in g1.elements for b in g2.elements)
        table = {}
        for a1 in g1.elements:
            for b1 in g2.elements:
                for a2 in g1.elements:
                    for b2 in g2.elements:
                        table[f"{a1}|{b1}", f"{a2}|{b2}"] = f"{g1.mul(a1, a2)}|{g2.mul(b1, b2)}"
        gens = tuple(f"{g}|{g2.identity}" for g in g1.generators if g != g1.identity) + tuple(
            f"{g1.identity}|{g}" for g in g2.generators if g != g2.identity
        )
        return cls(elements, table, generators=gens or (f"{g1.identity}|{g2.identity}",),
                   name=f"{g1.name}x{g2.name}")


class GaloisModel:
    """A finite group acting on the diagram, with all derived actions cached."""

    def __init__(self, system: RestrictedRootSystem, group: FiniteGroup, generator_action):
        self.system = system
        self.group = group
        datum = system.datum
        action = {group.identity: tuple(range(datum.n))}
        for g in group.generators:
            if g == group.identity:
                continue
            if g not in generator_action:
                raise InvalidGaloisAction(f"no action given for generator {g}")
            action[g] = tuple(generator_action[g])
        # Extend over the Cayley graph and verify the extension is a
        # homomorphism on the whole table.
        frontier = list(action)
        while frontier:
            a = frontier.pop()
            for g in list(action):
                b = group.mul(a, g)
                perm = compose_perms(action[a], action[g])
                if b in action:
                    if action[b] != perm:
                        raise InvalidGaloisAction("generator action does not extend to the group")
                else:
                    action[b] = perm
                    frontier.append(b)
        if set(action) != set(group.elements):
            raise InvalidGaloisAction("generators do not reach the whole group")
        for a in group.elements:
            for b in group.elements:
                if compose_perms(action[a], action[b]) != action[group.mul(a, b)]:
                    raise InvalidGaloisAction("action is not a homomorphism")
        self.node_action = action

        theta = system.theta.perm
        for a, perm in action.items():
            datum._check_perm(perm, f"galois element {a}")
            if compose_perms(perm, theta) != compose_perms(theta, perm):
                raise InvalidGaloisAction(f"galois element {a} does not commute with theta")

        self.sigma_linear = {}
        self.sigma_affine = {}
        self.sigma_wall_perm = {}
        self.component_action = {}
        for a, perm in action.items():
            linear = self._apartment_matrix(perm)
            self.sigma_linear[a] = linear
            amap = AffineMap(linear, ratlin.zeros(system.m))
            self.sigma_affine[a] = amap
            wall = node_permutation_of(system, amap)
            self.sigma_wall_perm[a] = wall
            for i, node in enumerate(system.affine_nodes):
                if system.affine_nodes[wall[i]].mark != node.mark:
                    raise InvalidGaloisAction("galois action does not preserve the marks")
            self.component_action[a] = self._component_perm(wall)
        self.component_orbits = perm_orbits(
            [self.component_action[a] for a in group.elements], system.num_components
        )
        self.i_G = len(self.component_orbits)

        self.omega = omega_group(system)
        self._omega_by_map = {w.map: w for w in self.omega}
        self.omega_index = {w: i for i, w in enumerate(self.omega)}
        k = len(self.omega)
        self.omega_mul = tuple(
            tuple(self.omega_index[self._omega_by_map[a.map.compose(b.map)]] for b in self.omega)
            for a in self.omega
        )
        self.omega_inv = tuple(
            self.omega_index[self._omega_by_map[w.map.inverse()]] for w in self.omega
        )
        # Conjugation of the stabilizer by the Galois action, per element.
        self.omega_conj = {}
        for a in group.elements:
            s = self.sigma_affine[a]
            s_inv = s.inverse()
            row = []
            for w in self.omega:
                conj = s.compose(w.map).compose(s_inv)
                target = self._omega_by_map.get(conj)
                if target is None:
                    raise InternalInconsistency("galois action does not normalize the stabilizer")
                row.append(self.omega_index[target])
            self.omega_conj[a] = tuple(row)
        self._star_tables = None

    def _apartment_matrix(self, perm):
        system = self.system
        orbit_index = {orbit: o for o, orbit in enumerate(system.node_orbits)}
        cols = []
        for o, orbit in enumerate(system.node_orbits):
            image = tuple(sorted(perm[i] for i in orbit))
            if image not in orbit_index:
                raise InvalidGaloisAction("galois action does not permute the node orbits")
            cols.append(orbit_index[image])
        m = system.m
        return ratlin.mat(
            [[Fraction(1 if cols[j] == i else 0) for j in range(m)] for i in range(m)]
        )

    def _component_perm(self, wall_perm):
        system = self.system
        perm = [None] * system.num_components
        for i, node in enumerate(system.affine_nodes):
            target = system.affine_nodes[wall_perm[i]].component
            if perm[node.component] is None:
                perm[node.component] = target
            elif perm[node.component] != target:
                raise InvalidGaloisAction("galois action tears a component apart")
        return tuple(perm)

    def omega_element(self, map_: AffineMap) -> OmegaElement:
        try:
            return self._omega_by_map[map_]
        except KeyError:
            raise InternalInconsistency("affine map expected in the alcove stabilizer")

    def conjugate_omega(self, a: str, w: OmegaElement) -> OmegaElement:
        """sigma_G(omega): conjugation of the stabilizer by the Galois action."""
        return self.omega[self.omega_conj[a][self.omega_index[w]]]

    def star_tables(self):
        """All admissible omega-star tables, with shared derived data."""
        if self._star_tables is None:
            tables = _find_star_tables(self)
            self._star_tables = tables
            self._star_by_indices = {t.indices: t for t in tables}
        return self._star_tables

    def star_table_for(self, indices) -> "StarTable":
        self.star_tables()
        try:
            return self._star_by_indices[tuple(indices)]
        except KeyError:
            raise InternalInconsistency("omega-star table is not an admissible homomorphism")


class StarTable:
    """One admissible omega-star table and everything derived from it."""

    __slots__ = ("indices", "omega_star", "star", "wall_perm", "wall_orbits")

    def __init__(self, indices, omega_star, star, wall_perm, wall_orbits):
        self.indices = indices          # omega index per group element, in element order
        self.omega_star = omega_star    # element -> OmegaElement
        self.star = star                # element -> AffineMap
        self.wall_perm = wall_perm      # element -> wall permutation
        self.wall_orbits = wall_orbits  # orbits of the star action on the walls


def _make_star_table(model: GaloisModel, omega_star) -> StarTable:
    group = model.group
    star = {a: omega_star[a].map.compose(model.sigma_affine[a]) for a in group.elements}
    wall_perm = {
        a: compose_perms(omega_star[a].node_perm, model.sigma_wall_perm[a])
        for a in group.elements
    }
    orbits = perm_orbits([wall_perm[a] for a in group.elements], len(model.system.affine_nodes))
    indices = tuple(model.omega_index[omega_star[a]] for a in group.elements)
    return StarTable(indices, dict(omega_star), star, wall_perm, orbits)


def _find_star_tables(model: GaloisModel):
    """Exhaustive search over generator images in the alcove stabilizer."""
    group = model.group
    gens = [g for g in group.generators if g != group.identity]
    out = []
    seen = set()
    for images in itertools.product(model.omega, repeat=len(gens)):
        star = {group.identity: AffineMap.identity(model.system.m)}
        conflict = False
        for g, w in zip(gens, images):
            candidate = w.map.compose(model.sigma_affine[g])
            if g in star and star[g] != candidate:
                conflict = True
                break
            star[g] = candidate
        if conflict:
            continue
        frontier = list(star)
        ok = True
        while frontier and ok:
            a = frontier.pop()
            for g in gens:
                b = group.mul(a, g)
                value = star[a].compose(star[g])
                if b in star:
                    if star[b] != value:
                        ok = False
                        break
                else:
                    star[b] = value
                    frontier.append(b)
        if not ok or set(star) != set(group.elements):
            continue
        if any(
            star[a].compose(star[b]) != star[group.mul(a, b)]
            for a in group.elements
            for b in group.elements
        ):
            continue
        table = {}
        for a in group.elements:
            shifted = star[a].compose(model.sigma_affine[a].inverse())
            w = model._omega_by_map.get(shifted)
            if w is None:
                break
            table[a] = w
        else:
            st = _make_star_table(model, table)
            if st.indices not in seen:
                seen.add(st.indices)
                out.append(st)
    return tuple(out)


def omega_star_homomorphisms(model: GaloisModel):
    """The admissible omega-star tables, as element -> OmegaElement dicts."""
    return [dict(t.omega_star) for t in model.star_tables()]


class EndoPair:
    """A validated pair: omega-star table plus fixed alcove point."""

    def __init__(self, model: GaloisModel, table: StarTable, x: AlcovePoint):
        self.model = model
        self.table = table
        self.x = x

    @property
    def omega_star(self):
        return self.table.omega_star

    @property
    def star(self):
        return self.table.star

    @property
    def star_wall_perm(self):
        return self.table.wall_perm

    def key(self):
        return self.table.indices, self.x.kac

    def orbit_count(self) -> int:
        """Number of star-action orbits on the walls outside S(x)."""
        zero = set(self.x.zero_set())
        return sum(1 for orbit in self.table.wall_orbits if not zero.issuperset(orbit))

    def wall_orbits_outside(self):
        zero = set(self.x.zero_set())
        return tuple(orbit for orbit in self.table.wall_orbits if not zero.issuperset(orbit))


def _kac_is_fixed(table: StarTable, kac) -> bool:
    """x is star-fixed iff its Kac vector is constant on the wall orbits."""
    for orbit in table.wall_orbits:
        first = kac[orbit[0]]
        for i in orbit[1:]:
            if kac[i] != first:
                return False
    return True


def validate_endo_pair(model: GaloisModel, omega_star, x: AlcovePoint) -> EndoPair:
    """Check the homomorphism and fixed-point conditions and cache the actions."""
    group = model.group
    table = {}
    for a in group.elements:
        if a not in omega_star:
            raise NotHomomorphism(f"omega-star is not defined on {a}")
        w = omega_star[a]
        if not isinstance(w, OmegaElement):
            w = model.omega_element(w)
        table[a] = w
    star = {a: table[a].map.compose(model.sigma_affine[a]) for a in group.elements}
    if not star[group.identity].is_identity():
        raise NotHomomorphism("identity does not act trivially")
    for a in group.elements:
        for b in group.elements:
            if star[a].compose(star[b]) != star[group.mul(a, b)]:
                raise NotHomomorphism(f"star action fails on ({a},{b})")
    for a in group.elements:
        if star[a](x.point) != x.point:
            raise NotFixed(f"star action of {a} moves the point")
    st = model.star_table_for(tuple(model.omega_index[table[a]] for a in group.elements))
    pair = EndoPair(model, st, x)
    if pair.orbit_count() < model.i_G:
        raise InternalInconsistency("wall-orbit count fell below the component-orbit count")
    return pair


def ellipticity(pair: EndoPair):
    """(orbit count i(x), elliptic flag)."""
    i_x = pair.orbit_count()
    if i_x < pair.model.i_G:
        raise InternalInconsistency("orbit count below lower bound")
    return i_x, i_x == pair.model.i_G


def _conjugate_key(model: GaloisModel, pair: EndoPair, w_index: int):
    """(indices, kac) of the conjugate of the pair by stabilizer element w."""
    w = model.omega[w_index]
    mul = model.omega_mul
    inv = model.omega_inv
    indices = []
    for pos, a in enumerate(model.group.elements):
        conj = model.omega_conj[a][w_index]
        indices.append(mul[mul[w_index][pair.table.indices[pos]]][inv[conj]])
    kac = [None] * len(pair.x.kac)
    for i, v in enumerate(pair.x.kac):
        kac[w.node_perm[i]] = v
    return tuple(indices), tuple(kac)


def equivalence_witness(pair1: EndoPair, pair2: EndoPair):
    """First stabilizer element conjugating pair1 to pair2, if any."""
    if pair1.model is not pair2.model:
        raise ModelMismatch("pairs live over different models")
    model = pair1.model
    target = pair2.key()
    for w_index, w in enumerate(model.omega):
        if _conjugate_key(model, pair1, w_index) == target:
            return w
    return None


def isom_and_aut_sets(pair1: EndoPair, pair2: EndoPair):
    """(Omega(x1;x2), Isom(pair1;pair2), Omega(x2), Aut(pair2)).

    When nonempty, the first two are torsors under the last two; the
    cardinality identities are asserted here.
    """
    if pair1.model is not pair2.model:
        raise ModelMismatch("pairs live over different models")
    model = pair1.model
    target = pair2.key()
    omega_x1_x2 = []
    isom = []
    for w_index, w in enumerate(model.omega):
        indices, kac = _conjugate_key(model, pair1, w_index)
        if kac != target[1]:
            continue
        omega_x1_x2.append(w)
        if indices == target[0]:
            isom.append(w)
    omega_x = []
    aut = []
    for w_index, w in enumerate(model.omega):
        indices, kac = _conjugate_key(model, pair2, w_index)
        if kac != target[1]:
            continue
        omega_x.append(w)
        if indices == target[0]:
            aut.append(w)
    if omega_x1_x2 and len(omega_x1_x2) != len(omega_x):
        raise InternalInconsistency("Omega(x1;x2) is not a torsor under Omega(x2)")
    if isom and len(isom) != len(aut):
        raise InternalInconsistency("Isom set is not a torsor under Aut")
    return tuple(omega_x1_x2), tuple(isom), tuple(omega_x), tuple(aut)


class EndoClass:
    """Equivalence class with its canonical representative."""

    def __init__(self, representative: EndoPair, elliptic: bool):
        self.representative = representative
        self.elliptic = elliptic
        self.class_id = _class_id(representative)

    @property
    def model(self):
        return self.representative.model


def canonicalize(pair: EndoPair) -> EndoPair:
    """Lexicographically least conjugate under the alcove stabilizer."""
    model = pair.model
    best_key = None
    best_index = None
    for w_index in range(len(model.omega)):
        key = _conjugate_key(model, pair, w_index)
        if best_key is None or key < best_key:
            best_key = key
            best_index = w_index
    if best_key == pair.key():
        return pair
    w = model.omega[best_index]
    point = w.map(pair.x.point)
    x = AlcovePoint(kac=best_key[1], point=point)
    return EndoPair(model, model.star_table_for(best_key[0]), x)


def _class_id(pair: EndoPair) -> str:
    model = pair.model
    system = model.system
    payload = {
        "components": [list(c) for c in system.datum.spec.components],
        "theta": list(system.theta.perm),
        "group": list(model.group.elements),
        "action": {a: list(model.node_action[a]) for a in model.group.elements},
        "omega_star": list(pair.key()[0]),
        "kac": [str(v) for v in pair.x.kac],
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return "cls-" + digest[:12]


def class_of_pair(pair: EndoPair) -> EndoClass:
    canonical = canonicalize(pair)
    _, elliptic = ellipticity(canonical)
    return EndoClass(canonical, elliptic)


def _alcove_point_from_grid(system, kac) -> AlcovePoint:
    """Kac vectors built from valid mark compositions need no re-validation."""
    point = [Fraction(0)] * system.m
    for value, node in zip(kac, system.affine_nodes):
        if node.constant == 0:
            o = next(i for i, c in enumerate(node.gradient) if c != 0)
            point[o] = value
    return AlcovePoint(kac=tuple(kac), point=tuple(point))


def enumerate_elliptic(model: GaloisModel):
    """All elliptic classes: one wall orbit per component orbit stays positive.

    For each admissible omega-star table the star action permutes the
    walls; a candidate keeps exactly one wall orbit per Galois orbit of
    components, and the positive Kac coordinate on an orbit is pinned by
    the normalization of the marks.
    """
    system = model.system
    classes = []
    for table in model.star_tables():
        orbit_component_orbit = []
        for orbit in table.wall_orbits:
            comp_orbits = {
                _component_orbit_index(model, system.affine_nodes[i].component) for i in orbit
            }
            if len(comp_orbits) != 1:
                raise InternalInconsistency("wall orbit crosses several component orbits")
            orbit_component_orbit.append(comp_orbits.pop())
        grouped = [
            [k for k, co in enumerate(orbit_component_orbit) if co == target]
            for target in range(model.i_G)
        ]
        for selection in itertools.product(*grouped):
            kac = [Fraction(0)] * len(system.affine_nodes)
            for k in selection:
                orbit = table.wall_orbits[k]
                value = _orbit_value(system, orbit)
                for i in orbit:
                    kac[i] = value
            x = _alcove_point_from_grid(system, kac)
            pair = EndoPair(model, table, x)
            i_x, elliptic = ellipticity(pair)
            if not elliptic:
                raise InternalInconsistency("constructed candidate is not elliptic")
            classes.append(class_of_pair(pair))
    return _dedup_classes(classes, use_witness=True)


def _component_orbit_index(model, component):
    for k, orbit in enumerate(model.component_orbits):
        if component in orbit:
            return k
    raise IndexError(component)


def _orbit_value(system, orbit):
    """Kac value making the marks sum to 1 on each touched component."""
    totals = {}
    for i in orbit:
        node = system.affine_nodes[i]
        totals[node.component] = totals.get(node.component, 0) + node.mark
    values = set(totals.values())
    if len(values) != 1:
        raise InternalInconsistency("orbit has asymmetric mark totals across components")
    return Fraction(1, values.pop())


def enumerate_torsion(model: GaloisModel, order: int):
    """All classes with Kac coordinates in (1/order)Z.

    Every point of the closed alcove whose Kac vector lies on the grid is
    combined with every admissible omega-star table fixing it.
    """
    if order < 1:
        raise ValueError("order must be positive")
    system = model.system
    tables = model.star_tables()
    classes = []
    for kac in _kac_grid(system, order):
        x = None
        for table in tables:
            if not _kac_is_fixed(table, kac):
                continue
            if x is None:
                x = _alcove_point_from_grid(system, kac)
            classes.append(class_of_pair(EndoPair(model, table, x)))
    return _dedup_classes(classes, use_witness=False)


def _kac_grid(system, order):
    per_component = []
    for j in range(system.num_components):
        nodes = system.component_nodes(j)
        marks = [system.affine_nodes[i].mark for i in nodes]
        solutions = []
        _compositions(order, marks, [], solutions)
        per_component.append((nodes, solutions))
    for combo in itertools.product(*(sols for _, sols in per_component)):
        kac = [Fraction(0)] * len(system.affine_nodes)
        for (nodes, _), values in zip(per_component, combo):
            for i, v in zip(nodes, values):
                kac[i] = Fraction(v, order)
        yield tuple(kac)


def _compositions(budget, marks, prefix, out):
    if len(prefix) == len(marks) - 1:
        rest, remainder = divmod(budget, marks[-1])
        if remainder == 0 and rest >= 0:
            out.append(tuple(prefix + [rest]))
        return
    k = len(prefix)
    for value in range(budget // marks[k] + 1):
        _compositions(budget - value * marks[k], marks, prefix + [value], out)


def _dedup_classes(classes, use_witness: bool):
    unique = {}
    for cls in classes:
        key = cls.representative.key()
        if key in unique:
            continue
        if use_witness:
            duplicate = False
            for other in unique.values():
                if equivalence_witness(cls.representative, other.representative) is not None:
                    duplicate = True
                    break
            if duplicate:
                continue
        unique[key] = cls
    return tuple(sorted(unique.values(), key=lambda c: c.representative.key()))
