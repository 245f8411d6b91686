"""Batch command line: classify, check, explain.

Configuration is one JSON file; results are canonical JSON bundles with
every rational printed exactly as p/q.  Identical config and seed yield
byte-identical output.  Exit codes: 0 success, 1 check failure, 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import SCHEMA_VERSION, __version__
from .affine import alcove_point_from_kac
from .checks import CHECK_NAMES, run_checks
from .endo import (
    EndoClass,
    FiniteGroup,
    GaloisModel,
    enumerate_elliptic,
    enumerate_torsion,
)
from .endogroup import endoscopic_datum, s_from_x
from .errors import CheckFailed, ConfigError, EndoError, UnknownClassId
from .rootdata import CartanSpec, build_based_root_datum
from .twistfold import restrict_roots

JOB_SCHEMA = "endoclass-job/1.0"
RESULT_SCHEMA = f"endoclass-result/{SCHEMA_VERSION[0]}.{SCHEMA_VERSION[1]}"

_RUN_DEFAULTS = {
    "torsion": None,
    "checks": list(CHECK_NAMES),
    "samples": 100,
    "oracle_samples": 200,
    "seed": 0,
}


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def to_jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(to_jsonable(v) for v in value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    return value


def _require_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")


def parse_config(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    _require_keys(raw, ("schema", "datum", "galois", "run"), ("schema", "datum", "galois"), "config")
    if raw["schema"] != JOB_SCHEMA:
        raise ConfigError(f"config schema must be {JOB_SCHEMA!r}")
    _require_keys(raw["datum"], ("components", "theta"), ("components", "theta"), "config.datum")
    components = raw["datum"]["components"]
    if not isinstance(components, list) or not components:
        raise ConfigError("config.datum.components: expected a nonempty list")
    for entry in components:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)
                and isinstance(entry[1], int)):
            raise ConfigError("config.datum.components: entries are [label, rank]")
    theta = raw["datum"]["theta"]
    if not (isinstance(theta, list) and all(isinstance(i, int) for i in theta)):
        raise ConfigError("config.datum.theta: expected a list of node indices")
    _require_keys(raw["galois"], ("group", "action"), ("group",), "config.galois")
    run = dict(_RUN_DEFAULTS)
    if "run" in raw:
        _require_keys(raw["run"], tuple(_RUN_DEFAULTS), (), "config.run")
        run.update(raw["run"])
    if run["checks"] is not None:
        bad = set(run["checks"]) - set(CHECK_NAMES)
        if bad:
            raise ConfigError(f"config.run.checks: unknown checks {sorted(bad)}")
    config = {
        "schema": raw["schema"],
        "datum": {"components": components, "theta": theta},
        "galois": {
            "group": raw["galois"]["group"],
            "action": raw["galois"].get("action", {}),
        },
        "run": run,
    }
    return config


def _build_group(spec) -> FiniteGroup:
    if isinstance(spec, str):
        if spec == "trivial":
            return FiniteGroup.trivial()
        kind, _, arg = spec.partition(":")
        if kind == "cyclic" and arg.isdigit() and 1 <= int(arg) <= 24:
            return FiniteGroup.cyclic(int(arg))
        if kind == "symmetric" and arg.isdigit() and 1 <= int(arg) <= 4:
            return FiniteGroup.symmetric(int(arg))
        raise ConfigError(f"unknown group name {spec!r}")
    _require_keys(spec, ("elements", "table", "generators", "name"), ("elements", "table"),
                  "config.galois.group")
    elements = spec["elements"]
    table = {}
    for a, row in spec["table"].items():
        for b, c in row.items():
            table[a, b] = c
    return FiniteGroup(tuple(elements), table, generators=spec.get("generators"),
                       name=spec.get("name", "table"))


def build_model(config) -> GaloisModel:
    try:
        group = _build_group(config["galois"]["group"])
        action = {g: tuple(p) for g, p in config["galois"]["action"].items()}
        spec = CartanSpec(
            components=tuple((l, r) for l, r in config["datum"]["components"]),
            theta=tuple(config["datum"]["theta"]),
            galois_perms=tuple(action[g] for g in sorted(action)),
        )
        datum = build_based_root_datum(spec)
        system = restrict_roots(datum, datum.theta)
        return GaloisModel(system, group, action)
    except ConfigError:
        raise
    except EndoError as exc:
        raise ConfigError(f"invalid model: {exc}")


def _class_entry(model: GaloisModel, cls: EndoClass) -> dict:
    system = model.system
    pair = cls.representative
    datum = endoscopic_datum(cls)
    omega_index = {w: i for i, w in enumerate(model.omega)}
    labels = [node.label for node in system.affine_nodes]
    return {
        "id": cls.class_id,
        "kac": to_jsonable(pair.x.kac),
        "point": to_jsonable(pair.x.point),
        "rotation": to_jsonable(s_from_x(system, pair.x.point).rot),
        "omega_star": {a: omega_index[pair.omega_star[a]] for a in model.group.elements},
        "elliptic": cls.elliptic,
        "orbit_count": pair.orbit_count(),
        "vanishing_walls": [labels[i] for i in pair.x.zero_set()],
        "wall_orbits_outside": [[labels[i] for i in orbit] for orbit in pair.wall_orbits_outside()],
        "endoscopic": {
            "types": list(datum.type_labels),
            "cartan": to_jsonable(datum.cartan),
            "nodes": [labels[i] for i in datum.nodes],
            "center_rank": datum.center_rank,
            "galois_node_action": to_jsonable(datum.galois_node_action),
        },
    }


def _system_summary(model: GaloisModel) -> dict:
    system = model.system
    return {
        "dimension": system.m,
        "walls": [
            {
                "label": node.label,
                "gradient": to_jsonable(node.gradient),
                "level": to_jsonable(node.constant),
                "mark": node.mark,
                "component": node.component,
            }
            for node in system.affine_nodes
        ],
        "orbit_sizes": list(system.e_of_orbit),
        "component_orbits": to_jsonable(model.component_orbits),
        "component_orbit_count": model.i_G,
        "omega_order": len(model.omega),
    }


def _bundle(config, model, classes, torsion, check_reports) -> dict:
    return {
        "schema": RESULT_SCHEMA,
        "tool_version": __version__,
        "config": config,
        "seed": config["run"]["seed"],
        "system": _system_summary(model),
        "omega": [list(w.node_perm) for w in model.omega],
        "classes": [_class_entry(model, c) for c in classes],
        "torsion": torsion,
        "checks": check_reports,
    }


def cmd_classify(config) -> dict:
    model = build_model(config)
    classes = enumerate_elliptic(model)
    torsion = None
    order = config["run"]["torsion"]
    if order:
        torsion = {
            "order": order,
            "classes": [_class_entry(model, c) for c in enumerate_torsion(model, order)],
        }
    return _bundle(config, model, classes, torsion, None)


def cmd_check(config) -> dict:
    model = build_model(config)
    run = config["run"]
    reports = run_checks(
        model,
        names=run["checks"],
        samples=run["samples"],
        seed=run["seed"],
        oracle_samples=run["oracle_samples"],
    )
    classes = enumerate_elliptic(model)
    return _bundle(config, model, classes, None, to_jsonable(reports))


def _all_classes(config, model):
    classes = list(enumerate_elliptic(model))
    order = config["run"]["torsion"]
    if order:
        known = {c.representative.key() for c in classes}
        for cls in enumerate_torsion(model, order):
            if cls.representative.key() not in known:
                classes.append(cls)
    return classes


def cmd_explain(config, class_id: str, fmt: str = "text") -> str:
    model = build_model(config)
    for cls in _all_classes(config, model):
        if cls.class_id == class_id:
            if fmt == "dot":
                return _explain_dot(model, cls)
            if fmt == "json":
                return canonical_dumps(_class_entry(model, cls))
            return _explain_text(model, cls)
    raise UnknownClassId(class_id)


def _wall_edges(model):
    system = model.system
    nodes = range(len(system.affine_nodes))
    edges = []
    for i in nodes:
        for k in nodes:
            if k <= i:
                continue
            gi = system.affine_nodes[i].gradient
            gk = system.affine_nodes[k].gradient
            a = int(sum(x * y for x, y in zip(gk, system.roots[gi].coroot)))
            b = int(sum(x * y for x, y in zip(gi, system.roots[gk].coroot)))
            if a != 0 or b != 0:
                edges.append((i, k, a, b))
    return edges


def _explain_text(model: GaloisModel, cls: EndoClass) -> str:
    system = model.system
    pair = cls.representative
    labels = [node.label for node in system.affine_nodes]
    zero = set(pair.x.zero_set())
    orbit_of = {}
    for n, orbit in enumerate(pair.wall_orbits_outside()):
        for i in orbit:
            orbit_of[i] = n
    lines = [f"class {cls.class_id}", f"elliptic: {cls.elliptic}"]
    lines.append("walls:")
    for i, node in enumerate(system.affine_nodes):
        state = "S(x)" if i in zero else f"orbit {orbit_of[i]}"
        lines.append(
            f"  {labels[i]:>8}  mark {node.mark}  level {node.constant}  "
            f"kac {pair.x.kac[i]}  [{state}]"
        )
    lines.append("edges:")
    for i, k, a, b in _wall_edges(model):
        lines.append(f"  {labels[i]} -- {labels[k]}  pairing ({a},{b})")
    lines.append("omega_star:")
    omega_index = {w: i for i, w in enumerate(model.omega)}
    for a in model.group.elements:
        lines.append(f"  {a}: omega[{omega_index[pair.omega_star[a]]}]")
    datum = endoscopic_datum(cls)
    lines.append(f"endoscopic type: {' + '.join(datum.type_labels) if datum.type_labels else '(torus)'}")
    lines.append(f"center rank: {datum.center_rank}")
    return "\n".join(lines) + "\n"


def _explain_dot(model: GaloisModel, cls: EndoClass) -> str:
    system = model.system
    pair = cls.representative
    labels = [node.label for node in system.affine_nodes]
    zero = set(pair.x.zero_set())
    palette = ["lightblue", "lightgreen", "lightyellow", "lightpink", "lightcyan", "orange"]
    orbit_of = {}
    for n, orbit in enumerate(pair.wall_orbits_outside()):
        for i in orbit:
            orbit_of[i] = n
    lines = [f'graph "{cls.class_id}" {{']
    for i, node in enumerate(system.affine_nodes):
        if i in zero:
            style = 'style=filled, fillcolor=black, fontcolor=white'
        else:
            color = palette[orbit_of[i] % len(palette)]
            style = f'style=filled, fillcolor={color}'
        lines.append(
            f'  n{i} [label="{labels[i]}\\nd={node.mark} kac={pair.x.kac[i]}", {style}];'
        )
    for i, k, a, b in _wall_edges(model):
        bond = max(abs(a), abs(b))
        lines.append(f'  n{i} -- n{k} [label="{a},{b}", penwidth={bond}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_text(bundle: dict) -> str:
    lines = [f"endoclass {bundle['tool_version']}  ({bundle['schema']})"]
    system = bundle["system"]
    lines.append(
        f"apartment dim {system['dimension']}, {len(system['walls'])} walls, "
        f"|Omega| = {system['omega_order']}, component orbits = {system['component_orbit_count']}"
    )
    lines.append(f"elliptic classes: {len(bundle['classes'])}")
    for entry in bundle["classes"]:
        kac = " ".join(entry["kac"])
        types = "+".join(entry["endoscopic"]["types"]) or "(torus)"
        lines.append(f"  {entry['id']}  kac [{kac}]  type {types}  elliptic={entry['elliptic']}")
    if bundle.get("torsion"):
        lines.append(f"torsion classes at order {bundle['torsion']['order']}:")
        for entry in bundle["torsion"]["classes"]:
            kac = " ".join(entry["kac"])
            lines.append(f"  {entry['id']}  kac [{kac}]  elliptic={entry['elliptic']}")
    if bundle.get("checks"):
        lines.append("checks:")
        for name, report in sorted(bundle["checks"].items()):
            lines.append(f"  {name}: pass {report}")
    return "\n".join(lines) + "\n"


def load_result(text: str) -> dict:
    bundle = json.loads(text)
    schema = bundle.get("schema", "")
    prefix, _, version = schema.partition("/")
    if prefix != "endoclass-result":
        raise ConfigError(f"not a result bundle: {schema!r}")
    major = int(version.split(".")[0])
    if major > SCHEMA_VERSION[0]:
        raise ConfigError(f"result schema {schema!r} is newer than this reader")
    return bundle


def _write_output(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="endoclass",
                                     description="classify and check twisted endoscopic data")
    parser.add_argument("command", choices=("classify", "check", "explain"))
    parser.add_argument("class_id", nargs="?", help="class id (explain only)")
    parser.add_argument("--config", required=True, help="path to the job config JSON")
    parser.add_argument("--torsion", type=int, default=None, help="torsion order override")
    parser.add_argument("--checks", default=None, help="comma-separated check names")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--format", dest="fmt", choices=("json", "text", "dot"), default="json")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0

    try:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
        if args.torsion is not None:
            config["run"]["torsion"] = args.torsion
        if args.seed is not None:
            config["run"]["seed"] = args.seed
        if args.checks is not None:
            names = [n for n in args.checks.split(",") if n]
            bad = set(names) - set(CHECK_NAMES)
            if bad:
                raise ConfigError(f"unknown checks {sorted(bad)}")
            config["run"]["checks"] = names
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "classify":
            bundle = cmd_classify(config)
            text = render_text(bundle) if args.fmt == "text" else canonical_dumps(bundle)
            _write_output(text, args.out)
            return 0
        if args.command == "check":
            bundle = cmd_check(config)
            text = render_text(bundle) if args.fmt == "text" else canonical_dumps(bundle)
            _write_output(text, args.out)
            return 0
        if args.command == "explain":
            if not args.class_id:
                print("error: explain requires a class id", file=sys.stderr)
                return 2
            text = cmd_explain(config, args.class_id, fmt=args.fmt)
            _write_output(text, args.out)
            return 0
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness: {to_jsonable(exc.witness)}", file=sys.stderr)
        return 1
    except UnknownClassId as exc:
        print(f"unknown class id: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
