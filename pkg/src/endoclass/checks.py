"""Machine checks for the structural claims behind the classification.

Each check returns a small report dict and raises CheckFailed with a
witness when a counterexample shows up.  They are deliberately
oracle-flavored: wherever a quantity can be recomputed along a second
route, both routes run and must agree.
"""

from __future__ import annotations

import random
from fractions import Fraction

from . import ratlin
from .affine import (
    alcove_barycenter,
    alcove_point,
    alcove_point_from_kac,
    alcove_reduce,
    affine_diagram_automorphisms,
    local_stabilizer,
    node_permutation_of,
    omega_group,
    restricted_diagram_automorphisms,
    vanishing_walls,
    wall_cartan,
    wall_reflection,
)
from .endo import (
    GaloisModel,
    canonicalize,
    ellipticity,
    enumerate_elliptic,
    enumerate_torsion,
    equivalence_witness,
    isom_and_aut_sets,
)
from .endogroup import (
    endoscopic_datum,
    lattice_lemma_check,
    oracle_sigma_from_s,
    roundtrip_matches,
    s_from_x,
    sigma_x,
    wsc_order_matches_type,
    x_from_s,
)
from .errors import CheckFailed
from .localglobal import hasse_check, split_equivalence_criterion
from .twistfold import RestrictedRootSystem

CHECK_NAMES = ("alcove", "omega", "oracle", "lattice", "classify", "torsor", "endoscopic", "hasse")


def _grid_solutions(system, j, order):
    """Cached nonnegative solutions of sum(mark * n) = order on component j."""
    cache = getattr(system, "_kac_solution_cache", None)
    if cache is None:
        cache = {}
        system._kac_solution_cache = cache
    key = (j, order)
    if key not in cache:
        from .endo import _compositions

        nodes = system.component_nodes(j)
        marks = [system.affine_nodes[i].mark for i in nodes]
        solutions = []
        _compositions(order, marks, [], solutions)
        cache[key] = tuple(solutions)
    return cache[key]


def random_torsion_kac(system, rng, max_order):
    """Random Kac vector on a 1/N grid with N <= max_order.

    Orders with no grid point (the marks need not represent every integer)
    are redrawn.
    """
    for _ in range(1000):
        order = rng.randint(1, max_order)
        per_component = []
        for j in range(system.num_components):
            solutions = _grid_solutions(system, j, order)
            if not solutions:
                per_component = None
                break
            per_component.append((system.component_nodes(j), solutions))
        if per_component is None:
            continue
        kac = [Fraction(0)] * len(system.affine_nodes)
        for nodes, solutions in per_component:
            values = solutions[rng.randrange(len(solutions))]
            for i, v in zip(nodes, values):
                kac[i] = Fraction(v, order)
        return tuple(kac)
    raise CheckFailed("no torsion grid point found within the order bound",
                      witness=max_order)


def check_alcove(system: RestrictedRootSystem, samples: int = 100, seed: int = 0):
    """Marks, the normalization identity, facets, and simple transitivity."""
    for node in system.affine_nodes:
        if node.mark <= 0:
            raise CheckFailed("non-positive mark", witness=node.label)

    bary = alcove_barycenter(system)
    for j in range(system.num_components):
        nodes = [system.affine_nodes[i] for i in system.component_nodes(j)]
        probes = [n.vertex for n in nodes] + [bary]
        for p in probes:
            total = sum(
                (n.mark * (ratlin.dot(n.gradient, p) + n.constant) for n in nodes), Fraction(0)
            )
            if total != 1:
                raise CheckFailed("mark-weighted wall sum is not 1", witness=(j, p))

    # Every wall is a facet: it carries a point where all other walls are
    # strictly positive.
    for idx, node in enumerate(system.affine_nodes):
        comp_nodes = system.component_nodes(node.component)
        others = [i for i in comp_nodes if i != idx]
        point = ratlin.zeros(system.m)
        for i in others:
            point = ratlin.vec_add(point, system.affine_nodes[i].vertex)
        point = ratlin.vec_scale(Fraction(1, len(others)), point)
        for j in range(system.num_components):
            if j != node.component:
                sub = [system.affine_nodes[i] for i in system.component_nodes(j)]
                comp_bary = ratlin.zeros(system.m)
                for n in sub:
                    comp_bary = ratlin.vec_add(comp_bary, n.vertex)
                point = ratlin.vec_add(point, ratlin.vec_scale(Fraction(1, len(sub)), comp_bary))
        values = system.kac_coordinates(point)
        if values[idx] != 0 or any(v <= 0 for i, v in enumerate(values) if i != idx):
            raise CheckFailed("wall is not a facet", witness=node.label)

    rng = random.Random(seed)
    transitivity_checked = 0
    for _ in range(samples):
        kac = random_torsion_kac(system, rng, 12)
        x = alcove_point_from_kac(system, kac)
        zero_nodes, _ = vanishing_walls(system, x)
        expected = _stabilizer_order_from_type(system, zero_nodes)
        adjacent = _alcoves_through(system, x)
        if len(adjacent) != expected:
            raise CheckFailed("alcove count through x does not match the stabilizer order",
                              witness=x.kac)
        if expected <= 64:
            stab = local_stabilizer(system, x)
            images = {v(bary) for v in stab.elements}
            if images != adjacent:
                raise CheckFailed("stabilizer does not match the alcoves through x",
                                  witness=x.kac)
        transitivity_checked += 1
    return {"components": system.num_components, "transitivity_samples": transitivity_checked}


def _stabilizer_order_from_type(system, zero_nodes):
    """Weyl order of the Cartan type spanned by the vanishing walls."""
    from .endogroup import _connected_blocks
    from .rootdata import WEYL_ORDERS, classify_cartan

    if not zero_nodes:
        return 1
    cartan = wall_cartan(system, zero_nodes)
    order = 1
    for block in _connected_blocks(cartan):
        sub = tuple(tuple(cartan[i][j] for j in block) for i in block)
        label = classify_cartan(sub)
        if label is None:
            raise CheckFailed("vanishing walls have no finite Cartan type", witness=zero_nodes)
        order *= WEYL_ORDERS[label[0]](int(label[1:]))
    return order


def _alcoves_through(system, x):
    """Barycenter keys of all alcoves whose closure contains x, by wall BFS.

    Neighbors are only crossed through walls containing x, so the reached
    transformations are words in reflections fixing x.
    """
    bary = alcove_barycenter(system)
    from .affine import AffineMap

    reflections = [
        wall_reflection(system, node.gradient, node.constant) for node in system.affine_nodes
    ]
    reflected_bary = [r(bary) for r in reflections]
    start = AffineMap.identity(system.m)
    seen = {bary}
    frontier = [(start, start)]
    while frontier:
        v, v_inv = frontier.pop()
        pre = v_inv(x.point)
        for idx, node in enumerate(system.affine_nodes):
            if ratlin.dot(node.gradient, pre) + node.constant != 0:
                continue
            key = v(reflected_bary[idx])
            if key not in seen:
                seen.add(key)
                frontier.append((v.compose(reflections[idx]), reflections[idx].compose(v_inv)))
    return seen


def check_omega(system: RestrictedRootSystem):
    """Stabilizer structure and the wall-diagram factorization."""
    omega = omega_group(system)
    vertex_set = {node.vertex for node in system.affine_nodes}
    for w in omega:
        mapped = {w.map(v) for v in vertex_set}
        if mapped != vertex_set:
            raise CheckFailed("stabilizer element does not permute the vertices",
                              witness=w.node_perm)
        if node_permutation_of(system, w.map) != w.node_perm:
            raise CheckFailed("stored wall permutation disagrees with the map",
                              witness=w.node_perm)
    all_autos = set(affine_diagram_automorphisms(system))
    res_autos = set(restricted_diagram_automorphisms(system))
    omega_perms = {w.node_perm for w in omega}
    if len(all_autos) != len(omega_perms) * len(res_autos):
        raise CheckFailed(
            "wall-diagram automorphisms do not factor through the stabilizer",
            witness=(len(all_autos), len(omega_perms), len(res_autos)),
        )
    if omega_perms & res_autos != {tuple(range(len(system.affine_nodes)))}:
        raise CheckFailed("stabilizer meets the lowest-wall automorphisms nontrivially",
                          witness=sorted(omega_perms & res_autos))
    if not omega_perms.issubset(all_autos):
        raise CheckFailed("stabilizer permutation is not a diagram automorphism",
                          witness=sorted(omega_perms - all_autos))
    return {"omega_order": len(omega), "diagram_autos": len(all_autos)}


def check_oracle(system: RestrictedRootSystem, samples: int = 1000, seed: int = 0,
                 max_order: int = 24):
    """Level membership against the torus-side orbit sums, plus roundtrips."""
    rng = random.Random(seed)
    omega = omega_group(system)
    agreed = 0
    for _ in range(samples):
        kac = random_torsion_kac(system, rng, max_order)
        x = alcove_point_from_kac(system, kac)
        level_side = sigma_x(system, x.point)
        torus_side = oracle_sigma_from_s(system, s_from_x(system, x.point))
        if level_side != torus_side:
            raise CheckFailed("level membership disagrees with the torus oracle",
                              witness=x.kac)
        if not roundtrip_matches(system, x.point):
            raise CheckFailed("x -> s -> x does not return modulo cocharacters",
                              witness=x.kac)
        _, reduced = alcove_reduce(system, x_from_s(system, s_from_x(system, x.point)))
        if not any(w.map(reduced.point) == x.point for w in omega):
            raise CheckFailed("reduced lift is not stabilizer-equivalent to the input",
                              witness=x.kac)
        agreed += 1
    return {"samples": agreed}


def check_lattice(system: RestrictedRootSystem, bound: int = 24):
    return lattice_lemma_check(system, bound=bound)


def check_classify(model: GaloisModel, torsion_bound: int | None = None):
    """Elliptic enumeration coherence and the exhaustive torsion cross-check."""
    classes = enumerate_elliptic(model)
    for cls in classes:
        pair = cls.representative
        if canonicalize(pair).key() != pair.key():
            raise CheckFailed("canonical representative is not idempotent",
                              witness=cls.class_id)
        i_x, elliptic = ellipticity(pair)
        if not elliptic or i_x != model.i_G:
            raise CheckFailed("enumerated class is not elliptic", witness=cls.class_id)

    if torsion_bound is None:
        product = 1
        for node in model.system.affine_nodes:
            product *= node.mark
        torsion_bound = product * len(model.omega)
    elliptic_keys = {cls.representative.key() for cls in classes}
    seen_elliptic = set()
    torsion_total = 0
    for order in range(1, torsion_bound + 1):
        for cls in enumerate_torsion(model, order):
            torsion_total += 1
            i_x, elliptic = ellipticity(cls.representative)
            if i_x < model.i_G:
                raise CheckFailed("orbit count below the component-orbit count",
                                  witness=cls.class_id)
            if elliptic:
                if cls.representative.key() not in elliptic_keys:
                    raise CheckFailed("torsion sweep found an elliptic class outside "
                                      "the elliptic enumeration", witness=cls.class_id)
                seen_elliptic.add(cls.representative.key())
    if seen_elliptic != elliptic_keys:
        raise CheckFailed("elliptic enumeration contains classes the torsion sweep missed",
                          witness=sorted(elliptic_keys - seen_elliptic))
    return {
        "elliptic_classes": len(classes),
        "torsion_bound": torsion_bound,
        "torsion_classes_scanned": torsion_total,
    }


def check_torsor(model: GaloisModel, classes=None):
    """Cardinality identities for the Isom/Aut sets over all class pairs."""
    if classes is None:
        classes = enumerate_elliptic(model)
    pairs_checked = 0
    for c1 in classes:
        for c2 in classes:
            omega_12, isom, omega_x, aut = isom_and_aut_sets(c1.representative, c2.representative)
            pairs_checked += 1
            aut_maps = {w.map for w in aut}
            for a in aut:
                for b in aut:
                    if a.map.compose(b.map) not in aut_maps:
                        raise CheckFailed("Aut set is not closed under composition",
                                          witness=(c1.class_id, c2.class_id))
            if isom and len(isom) != len(aut):
                raise CheckFailed("Isom set has the wrong cardinality",
                                  witness=(c1.class_id, c2.class_id))
    return {"pairs_checked": pairs_checked}


def check_endoscopic(model: GaloisModel, classes=None):
    """Datum extraction actually produces consistent finite-type data."""
    if classes is None:
        classes = enumerate_elliptic(model)
    for cls in classes:
        datum = endoscopic_datum(cls)
        if datum.elliptic != cls.elliptic:
            raise CheckFailed("ellipticity flag disagrees with the datum", witness=cls.class_id)
        if cls.elliptic and datum.center_rank != 0:
            raise CheckFailed("elliptic class with nonzero center rank", witness=cls.class_id)
        if not wsc_order_matches_type(model.system, cls):
            raise CheckFailed("local stabilizer order does not match the extracted type",
                              witness=cls.class_id)
        level_side = sigma_x(model.system, cls.representative.x.point)
        torus_side = oracle_sigma_from_s(
            model.system, s_from_x(model.system, cls.representative.x.point)
        )
        if level_side != torus_side:
            raise CheckFailed("class representative fails the torus oracle", witness=cls.class_id)
    return {"classes_checked": len(classes)}


def check_hasse(model: GaloisModel, classes=None):
    """Local equivalence everywhere must coincide with global equivalence."""
    if classes is None:
        classes = enumerate_elliptic(model)
    report = hasse_check(model, classes)
    if report["violations"]:
        raise CheckFailed("local-global violation", witness=report["violations"][0])
    is_split_case = _is_split_case(model)
    if is_split_case:
        for c1 in classes:
            for c2 in classes:
                expected = split_equivalence_criterion(c1, c2)
                actual = equivalence_witness(c1.representative, c2.representative) is not None
                if expected != actual:
                    raise CheckFailed("split criterion disagrees with the witness search",
                                      witness=(c1.class_id, c2.class_id))
    return {
        "pairs_checked": report["pairs_checked"],
        "violations": len(report["violations"]),
        "split_criterion_checked": is_split_case,
    }


def _is_split_case(model: GaloisModel) -> bool:
    """One component orbit, nontrivial twist, Galois acting trivially on the apartment."""
    system = model.system
    if system.num_components != 1 or system.theta.order == 1:
        return False
    identity = ratlin.identity(system.m)
    return all(model.sigma_linear[a] == identity for a in model.group.elements)


def run_checks(model: GaloisModel, names=None, samples: int = 100, seed: int = 0,
               oracle_samples: int = 200, lattice_bound: int = 24):
    """Run the named checks (all by default) and collect their reports."""
    system = model.system
    names = tuple(names) if names else CHECK_NAMES
    reports = {}
    for name in names:
        if name == "alcove":
            reports[name] = check_alcove(system, samples=samples, seed=seed)
        elif name == "omega":
            reports[name] = check_omega(system)
        elif name == "oracle":
            reports[name] = check_oracle(system, samples=oracle_samples, seed=seed)
        elif name == "lattice":
            reports[name] = check_lattice(system, bound=lattice_bound)
        elif name == "classify":
            reports[name] = check_classify(model)
        elif name == "torsor":
            reports[name] = check_torsor(model)
        elif name == "endoscopic":
            reports[name] = check_endoscopic(model)
        elif name == "hasse":
            reports[name] = check_hasse(model)
        else:
            raise ValueError(f"unknown check {name!r}")
    return reports
