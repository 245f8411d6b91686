"""Finite surrogate for places and the local-global scan.

A place is a cyclic subgroup of the Galois model; every group element
generates one, so restricting to the full cyclic family plays the role
of almost-all completions.  Localization restricts the omega-star table,
keeps the point, and lands in the model over the subgroup.
"""

from __future__ import annotations

from dataclasses import dataclass

from .endo import EndoClass, EndoPair, FiniteGroup, GaloisModel, equivalence_witness, validate_endo_pair
from .errors import ModelMismatch


@dataclass(frozen=True)
class PlaceModel:
    members: frozenset
    tag: str  # a generator of the subgroup


def places(model: GaloisModel):
    """One place per cyclic subgroup of the Galois group."""
    return tuple(
        PlaceModel(members=members, tag=tag) for members, tag in model.group.cyclic_subgroups()
    )


def restricted_model(model: GaloisModel, members) -> GaloisModel:
    """The model over a subgroup, cached on the parent."""
    cache = getattr(model, "_submodels", None)
    if cache is None:
        cache = {}
        model._submodels = cache
    key = frozenset(members)
    if key not in cache:
        group = model.group
        elements = tuple(e for e in group.elements if e in key)
        table = {(a, b): group.mul(a, b) for a in elements for b in elements}
        if any(v not in key for v in table.values()):
            raise ModelMismatch("member set is not closed under multiplication")
        sub = FiniteGroup(elements, table, generators=elements,
                          name=f"{group.name}|{len(elements)}")
        action = {g: model.node_action[g] for g in elements}
        cache[key] = GaloisModel(model.system, sub, action)
    return cache[key]


def localize(cls: EndoClass | EndoPair, place: PlaceModel) -> EndoPair:
    """Restrict the omega-star table to the place's subgroup."""
    pair = cls.representative if isinstance(cls, EndoClass) else cls
    sub = restricted_model(pair.model, place.members)
    omega_star = {a: pair.omega_star[a] for a in sub.group.elements}
    return validate_endo_pair(sub, omega_star, pair.x)


def locally_equivalent_everywhere(c1: EndoClass, c2: EndoClass):
    """(verdict, per-place witness table) over the cyclic place family."""
    if c1.model is not c2.model:
        raise ModelMismatch("classes live over different models")
    table = []
    verdict = True
    for place in places(c1.model):
        w = equivalence_witness(localize(c1, place), localize(c2, place))
        table.append({"place": place.tag, "order": len(place.members),
                      "witness": None if w is None else w.node_perm})
        if w is None:
            verdict = False
    return verdict, table


def hasse_check(model: GaloisModel, classes):
    """Scan all class pairs: local equivalence everywhere must match global.

    Violations are collected into the report rather than raised; an empty
    violation list is the expected outcome.
    """
    violations = []
    pairs_checked = 0
    rows = []
    for i, c1 in enumerate(classes):
        for j, c2 in enumerate(classes):
            if j < i:
                continue
            pairs_checked += 1
            global_w = equivalence_witness(c1.representative, c2.representative)
            local_ok, table = locally_equivalent_everywhere(c1, c2)
            row = {
                "pair": (c1.class_id, c2.class_id),
                "global": None if global_w is None else global_w.node_perm,
                "local": table,
            }
            rows.append(row)
            if (global_w is not None) != local_ok:
                violations.append(row)
    return {"pairs_checked": pairs_checked, "violations": violations, "rows": rows}


def split_equivalence_criterion(c1: EndoClass, c2: EndoClass) -> bool:
    """Point-matching plus equal omega-star tables.

    For an absolutely simple model with nontrivial twist the Galois action
    is trivial on the apartment, and this criterion characterizes global
    equivalence; it is asserted against the witness search in the checks.
    """
    model = c1.model
    p1, p2 = c1.representative, c2.representative
    if not any(w.map(p1.x.point) == p2.x.point for w in model.omega):
        return False
    return all(p1.omega_star[a] == p2.omega_star[a] for a in model.group.elements)
