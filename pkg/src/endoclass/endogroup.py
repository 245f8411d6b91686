"""Root datum of a class and the torus-side oracle it must agree with.

A point of the apartment determines a set of restricted roots by exact
level membership; the same set is recomputed from the corresponding
torsion torus element through absolute orbit sums, which is the
independent route used for cross-checking.  The datum of a class is the
Cartan matrix over its vanishing walls together with the Galois action
and the center-invariant count.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from . import ratlin
from .affine import wall_cartan
from .endo import EndoClass
from .errors import CheckFailed, InternalInconsistency
from .rootdata import classify_cartan
from .twistfold import RestrictedRootSystem


@dataclass(frozen=True)
class TorusElement:
    """Torsion point of the folded unitary torus, as rotation numbers mod 1."""

    rot: tuple

    def order(self) -> int:
        return lcm(*(v.denominator for v in self.rot)) if self.rot else 1


def s_from_x(system: RestrictedRootSystem, x) -> TorusElement:
    """Reduce apartment coordinates modulo the cocharacter lattice."""
    return TorusElement(rot=tuple(ratlin.frac(v) % 1 for v in ratlin.vec(x)))


def x_from_s(system: RestrictedRootSystem, s: TorusElement):
    """The representative with coordinates in [0, 1)."""
    return ratlin.vec(s.rot)


def sigma_x(system: RestrictedRootSystem, x):
    """Restricted roots whose value at x is an affine level."""
    x = ratlin.vec(x)
    out = []
    for beta in system.root_vectors:
        if ratlin.dot(beta, x) in system.roots[beta].levels:
            out.append(beta)
    return frozenset(out)


def oracle_sigma_from_s(system: RestrictedRootSystem, s: TorusElement):
    """Same set computed on the torus side, via absolute orbit sums.

    The e-th power of a restricted root on the fixed torus is the product
    of the absolute roots in the orbit above it; the value is accumulated
    from absolute pairings and compared against 1 for indivisible roots
    and -1 for divisible ones.
    """
    abs_rot = [s.rot[system.orbit_of_node[i]] for i in range(system.datum.n)]
    out = []
    for beta in system.root_vectors:
        root = system.roots[beta]
        total = Fraction(0)
        for absolute in root.theta_orbit:
            total += ratlin.dot(absolute, abs_rot)
        value = total % 1
        target = Fraction(1, 2) if root.divisible else Fraction(0)
        if value == target:
            out.append(beta)
    return frozenset(out)


def roundtrip_matches(system: RestrictedRootSystem, x) -> bool:
    """x -> s -> x returns the input up to a cocharacter translation."""
    back = x_from_s(system, s_from_x(system, x))
    return ratlin.vec_sub(ratlin.vec(x), back) in system.lattice_cochar


def lattice_lemma_check(system: RestrictedRootSystem, bound: int = 24, samples: int = 200, seed: int = 0):
    """Match the finite kernel subgroup against R modulo the cocharacters.

    One side is the set of torsion points killed coordinatewise by the
    orbit sizes (checked through the absolute orbit-sum criterion), the
    other the closure of the R basis modulo 1.  Random torsion points of
    order up to the bound serve as negative controls for both membership
    tests.
    """
    if bound > 24:
        raise ValueError("order bound is capped at 24")
    exponent = lcm(*system.e_of_orbit)
    if exponent > bound:
        raise ValueError(f"bound {bound} does not cover the group exponent {exponent}")

    mu_side = set()
    for combo in _product_of_ranges(system.e_of_orbit):
        rot = tuple(Fraction(k, e) for k, e in zip(combo, system.e_of_orbit))
        if not _absolute_kernel_criterion(system, rot):
            raise CheckFailed("orbit-sum criterion rejects a coordinatewise torsion point",
                              witness=rot)
        mu_side.add(rot)

    lattice_side = set()
    frontier = [tuple(Fraction(0) for _ in range(system.m))]
    lattice_side.add(frontier[0])
    basis = system.lattice_R.basis
    while frontier:
        current = frontier.pop()
        for b in basis:
            nxt = tuple((c + v) % 1 for c, v in zip(current, b))
            if nxt not in lattice_side:
                lattice_side.add(nxt)
                frontier.append(nxt)

    if mu_side != lattice_side:
        diff = sorted(mu_side ^ lattice_side)[0]
        raise CheckFailed("kernel subgroup and R/X_* disagree", witness=diff)

    rng = random.Random(seed)
    checked = 0
    for _ in range(samples):
        order = rng.randint(1, bound)
        rot = tuple(Fraction(rng.randrange(order), order) for _ in range(system.m))
        element = TorusElement(rot=rot)
        if element.order() > bound:
            continue
        in_mu = _absolute_kernel_criterion(system, rot)
        in_lattice = x_from_s(system, element) in system.lattice_R
        in_set = rot in lattice_side
        if not (in_mu == in_lattice == in_set):
            raise CheckFailed("membership tests disagree on a sampled torsion point",
                              witness=rot)
        checked += 1
    return {
        "group_order": len(mu_side),
        "exponent": exponent,
        "samples_checked": checked,
    }


def _absolute_kernel_criterion(system: RestrictedRootSystem, rot) -> bool:
    """Orbit-constant lift is killed by every absolute orbit sum."""
    for orbit in system.node_orbits:
        total = sum((rot[system.orbit_of_node[i]] for i in orbit), Fraction(0))
        if total % 1 != 0:
            return False
    return True


def _product_of_ranges(sizes):
    if not sizes:
        yield ()
        return
    head, *tail = sizes
    for k in range(head):
        for rest in _product_of_ranges(tail):
            yield (k,) + rest


@dataclass(frozen=True)
class EndoscopicDatum:
    nodes: tuple              # indices into the affine node list (S(x))
    cartan: tuple             # Cartan matrix over the vanishing walls
    type_labels: tuple        # simple type of each connected block
    galois_node_action: dict  # group element -> permutation of positions in `nodes`
    elliptic: bool
    center_rank: int


def endoscopic_datum(cls: EndoClass) -> EndoscopicDatum:
    """Read the datum off the vanishing walls of the class representative.

    The center rank is computed twice: as the dimension of star-invariants
    of the annihilator of S(x), and as the wall-orbit count minus the
    component-orbit count; the two must coincide.
    """
    pair = cls.representative
    model = pair.model
    system = model.system
    nodes = pair.x.zero_set()
    gradients = [system.affine_nodes[i].gradient for i in nodes]
    cartan = wall_cartan(system, nodes)

    labels = []
    for block in _connected_blocks(cartan):
        sub = tuple(tuple(cartan[i][j] for j in block) for i in block)
        label = classify_cartan(sub)
        if label is None:
            raise InternalInconsistency("vanishing walls do not span a finite Cartan matrix")
        labels.append(label)
    labels = tuple(sorted(labels))

    position = {node: k for k, node in enumerate(nodes)}
    galois_action = {}
    for a in model.group.elements:
        perm = pair.star_wall_perm[a]
        images = []
        for node in nodes:
            if perm[node] not in position:
                raise InternalInconsistency("star action does not stabilize S(x)")
            images.append(position[perm[node]])
        galois_action[a] = tuple(images)

    rank_a = _invariant_annihilator_rank(system, model, pair, gradients)
    i_x = pair.orbit_count()
    rank_b = i_x - model.i_G
    if rank_a != rank_b:
        raise InternalInconsistency(
            f"center rank disagrees: annihilator gives {rank_a}, orbit count gives {rank_b}"
        )
    elliptic = i_x == model.i_G
    return EndoscopicDatum(
        nodes=nodes,
        cartan=cartan,
        type_labels=labels,
        galois_node_action=galois_action,
        elliptic=elliptic,
        center_rank=rank_a,
    )


def _connected_blocks(cartan):
    n = len(cartan)
    unseen = set(range(n))
    blocks = []
    while unseen:
        seed = min(unseen)
        block = {seed}
        frontier = [seed]
        while frontier:
            i = frontier.pop()
            for j in range(n):
                if j not in block and cartan[i][j] != 0:
                    block.add(j)
                    frontier.append(j)
        unseen -= block
        blocks.append(sorted(block))
    return blocks


def _invariant_annihilator_rank(system, model, pair, gradients) -> int:
    if gradients:
        basis = ratlin.nullspace(ratlin.mat(gradients))
    else:
        basis = tuple(ratlin.identity(system.m))
    k = len(basis)
    if k == 0:
        return 0
    columns = ratlin.transpose(ratlin.mat(basis))
    restricted = []
    for a in model.group.elements:
        linear = pair.star[a].linear
        images = [ratlin.mat_vec(linear, z) for z in basis]
        coords = []
        for img in images:
            c = ratlin.solve(columns, img)
            if c is None:
                raise InternalInconsistency("star action does not preserve the annihilator")
            coords.append(c)
        restricted.append(ratlin.transpose(ratlin.mat(coords)))
    scale = Fraction(1, len(model.group.elements))
    average = tuple(
        tuple(sum((mat[i][j] for mat in restricted), Fraction(0)) * scale for j in range(k))
        for i in range(k)
    )
    return ratlin.rank(average)


def wsc_order_matches_type(system: RestrictedRootSystem, cls: EndoClass) -> bool:
    """|W_sc(x)| equals the Weyl order of the extracted Cartan type."""
    from .affine import local_stabilizer
    from .rootdata import WEYL_ORDERS

    datum = endoscopic_datum(cls)
    stab = local_stabilizer(system, cls.representative.x)
    expected = 1
    for label in datum.type_labels:
        expected *= WEYL_ORDERS[label[0]](int(label[1:]))
    return len(stab.elements) == expected
