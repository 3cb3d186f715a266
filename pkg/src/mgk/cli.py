"""Bundle ingestion, command dispatch, and batch classification sweeps.

A bundle is one JSON document naming algebras, partitions, homomorphisms,
relation-pair objects and morphisms, squares, reflexive graphs, precrossed
modules, and element subsets.  Every named object is validated on load;
failures carry the object name and a witness.  Reports are deterministic:
fields are emitted in a fixed order and all enumeration is sorted.

Exit codes: 0 verdict computed, 2 input/parse error, 3 validation error,
4 precondition error, 5 internal disagreement.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    Homomorphism,
    InternalDisagreementError,
    Limits,
    ParseError,
    PreconditionError,
    ValidationError,
    check_homomorphism,
    validate_algebra,
)
from .commutator import NonCentralizingError, centralizes, commutator, connector
from .congruence import Partition, congruence_lattice, kernel_pair, meet
from .galois import (
    DoubleExtensionSquare,
    TwoEqMorphism,
    TwoEqObject,
    classify_morphism,
    is_central_extension,
    is_double_central,
    is_double_extension,
    is_normal_extension_oracle,
    is_trivial_extension,
    quotient_extension,
)
from .instances import (
    GROUP_CATALOG,
    GraphMorphism,
    PrecrossedModule,
    ReflexiveGraphOverB,
    build_group,
    build_lie_algebra,
    graph_double_central,
    graph_extension_central,
    graph_is_internal_groupoid,
    peiffer_commutator,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_PRECONDITION = 4
EXIT_DISAGREEMENT = 5

COMMANDS = (
    "validate", "lattice", "commutator", "centralizes", "connector",
    "classify-morphism", "check-trivial", "check-central", "check-normal",
    "check-double", "check-double-central", "graph-central", "graph-groupoid",
    "graph-double-central", "peiffer", "sweep",
)


@dataclass
class WorkspaceBundle:
    """All named objects of one input document, fully validated."""

    algebras: dict = field(default_factory=dict)
    lie_algebras: dict = field(default_factory=dict)
    partitions: dict = field(default_factory=dict)
    homomorphisms: dict = field(default_factory=dict)
    objects: dict = field(default_factory=dict)
    morphisms: dict = field(default_factory=dict)
    squares: dict = field(default_factory=dict)
    graphs: dict = field(default_factory=dict)
    graph_morphisms: dict = field(default_factory=dict)
    graph_squares: dict = field(default_factory=dict)
    modules: dict = field(default_factory=dict)
    subsets: dict = field(default_factory=dict)


def _need(entry: dict, key: str, ctx: str):
    if key not in entry:
        raise ParseError(f"{ctx}: missing field {key!r}")
    return entry[key]


def _lookup(table: dict, name: str, ctx: str, kind: str):
    if name not in table:
        raise ParseError(f"{ctx}: reference to unknown {kind} {name!r}")
    return table[name]


def _parse_algebra(name: str, entry: dict, bundle: WorkspaceBundle) -> FiniteAlgebra:
    """Parse one algebra entry: explicit tables, a catalog group, or Lie
    structure constants (the Lie wrapper is also registered for module use)."""
    ctx = f"algebra {name!r}"
    if "group" in entry:
        return build_group(entry["group"])
    if "lie" in entry:
        spec = entry["lie"]
        brackets = {}
        for item in spec.get("brackets", []):
            (i, j), vec = item
            brackets[(int(i), int(j))] = vec
        lie = build_lie_algebra(int(_need(spec, "prime", ctx)),
                                int(_need(spec, "dim", ctx)),
                                brackets, name=name)
        bundle.lie_algebras[name] = lie
        return lie.alg
    size = int(_need(entry, "size", ctx))
    ops = []
    for op in _need(entry, "operations", ctx):
        ops.append((str(_need(op, "name", ctx)), int(_need(op, "arity", ctx)),
                    _need(op, "table", ctx)))
    alg = FiniteAlgebra(size, ops, str(_need(entry, "maltsev", ctx)), name=name)
    report = validate_algebra(alg)
    if report:
        raise ValidationError(f"{ctx}: {report[0]}")
    return alg


def _parse_partition(name: str, entry: dict, bundle: WorkspaceBundle) -> Partition:
    ctx = f"partition {name!r}"
    alg = _lookup(bundle.algebras, str(_need(entry, "algebra", ctx)), ctx, "algebra")
    rep = [int(v) for v in _need(entry, "rep", ctx)]
    if len(rep) != alg.size:
        raise ValidationError(f"{ctx}: array length {len(rep)} != carrier size {alg.size}")
    part = Partition(rep)
    if [int(v) for v in part.rep] != rep:
        bad = next(i for i in range(alg.size) if int(part.rep[i]) != rep[i])
        raise ValidationError(
            f"{ctx}: not a canonical representative array at index {bad} "
            f"(expected {int(part.rep[bad])}, got {rep[bad]})")
    return part


def load_bundle(path: str, limits: Limits = DEFAULT_LIMITS) -> WorkspaceBundle:
    """Parse and validate one bundle document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"no such bundle: {path}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"bundle {path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError(f"bundle {path}: top level must be an object")

    b = WorkspaceBundle()
    for name in sorted(doc.get("algebras", {})):
        b.algebras[name] = _parse_algebra(name, doc["algebras"][name], b)
    for name in sorted(doc.get("partitions", {})):
        b.partitions[name] = (_parse_partition(name, doc["partitions"][name], b),
                              str(doc["partitions"][name]["algebra"]))
    for name in sorted(doc.get("homomorphisms", {})):
        entry = doc["homomorphisms"][name]
        ctx = f"homomorphism {name!r}"
        src = _lookup(b.algebras, str(_need(entry, "source", ctx)), ctx, "algebra")
        tgt = _lookup(b.algebras, str(_need(entry, "target", ctx)), ctx, "algebra")
        hom = Homomorphism(src, tgt, [int(v) for v in _need(entry, "map", ctx)])
        verdict = check_homomorphism(hom)
        if verdict == "not-hom":
            raise ValidationError(f"{ctx}: map does not preserve the operations")
        b.homomorphisms[name] = hom
    for name in sorted(doc.get("objects", {})):
        entry = doc["objects"][name]
        ctx = f"object {name!r}"
        alg = _lookup(b.algebras, str(_need(entry, "algebra", ctx)), ctx, "algebra")
        r = _lookup(b.partitions, str(_need(entry, "r", ctx)), ctx, "partition")[0]
        s = _lookup(b.partitions, str(_need(entry, "s", ctx)), ctx, "partition")[0]
        b.objects[name] = TwoEqObject(alg, r, s)
    for name in sorted(doc.get("morphisms", {})):
        entry = doc["morphisms"][name]
        ctx = f"morphism {name!r}"
        src = _lookup(b.objects, str(_need(entry, "source", ctx)), ctx, "object")
        tgt = _lookup(b.objects, str(_need(entry, "target", ctx)), ctx, "object")
        hom = _lookup(b.homomorphisms, str(_need(entry, "hom", ctx)), ctx, "homomorphism")
        b.morphisms[name] = TwoEqMorphism(src, tgt, hom)
    for name in sorted(doc.get("squares", {})):
        entry = doc["squares"][name]
        ctx = f"square {name!r}"
        sides = {side: _lookup(b.morphisms, str(_need(entry, side, ctx)), ctx, "morphism")
                 for side in ("top", "left", "bottom", "right")}
        b.squares[name] = DoubleExtensionSquare(**sides)
    for name in sorted(doc.get("graphs", {})):
        entry = doc["graphs"][name]
        ctx = f"graph {name!r}"
        b.graphs[name] = ReflexiveGraphOverB(
            x1=_lookup(b.algebras, str(_need(entry, "x1", ctx)), ctx, "algebra"),
            x0=_lookup(b.algebras, str(_need(entry, "x0", ctx)), ctx, "algebra"),
            d=_lookup(b.homomorphisms, str(_need(entry, "d", ctx)), ctx, "homomorphism"),
            c=_lookup(b.homomorphisms, str(_need(entry, "c", ctx)), ctx, "homomorphism"),
            i=_lookup(b.homomorphisms, str(_need(entry, "i", ctx)), ctx, "homomorphism"))
    for name in sorted(doc.get("graph_morphisms", {})):
        entry = doc["graph_morphisms"][name]
        ctx = f"graph morphism {name!r}"
        b.graph_morphisms[name] = GraphMorphism(
            source=_lookup(b.graphs, str(_need(entry, "source", ctx)), ctx, "graph"),
            target=_lookup(b.graphs, str(_need(entry, "target", ctx)), ctx, "graph"),
            hom=_lookup(b.homomorphisms, str(_need(entry, "hom", ctx)), ctx, "homomorphism"))
    for name in sorted(doc.get("graph_squares", {})):
        entry = doc["graph_squares"][name]
        ctx = f"graph square {name!r}"
        b.graph_squares[name] = {
            side: _lookup(b.graph_morphisms, str(_need(entry, side, ctx)), ctx,
                          "graph morphism")
            for side in ("top", "left", "bottom", "right")}
    for name in sorted(doc.get("modules", {})):
        entry = doc["modules"][name]
        ctx = f"module {name!r}"
        kind = str(_need(entry, "kind", ctx))
        if kind == "lie":
            base = _lookup(b.lie_algebras, str(_need(entry, "base", ctx)), ctx,
                           "lie algebra")
            algebra = _lookup(b.lie_algebras, str(_need(entry, "algebra", ctx)), ctx,
                              "lie algebra")
        else:
            base = _lookup(b.algebras, str(_need(entry, "base", ctx)), ctx, "algebra")
            algebra = _lookup(b.algebras, str(_need(entry, "algebra", ctx)), ctx, "algebra")
        b.modules[name] = PrecrossedModule(
            kind, base, algebra,
            np.array(_need(entry, "action", ctx), dtype=np.int64),
            np.array(_need(entry, "boundary", ctx), dtype=np.int64))
    for name in sorted(doc.get("subsets", {})):
        entry = doc["subsets"][name]
        ctx = f"subset {name!r}"
        ref = str(_need(entry, "algebra", ctx))
        if ref not in b.algebras and ref not in b.lie_algebras:
            raise ParseError(f"{ctx}: reference to unknown algebra {ref!r}")
        b.subsets[name] = (ref, sorted(int(v) for v in _need(entry, "elements", ctx)))
    return b


def _fmt_partition(p: Partition) -> str:
    return "[" + ",".join(str(int(v)) for v in p.rep) + "]"


def _fmt(value) -> str:
    if isinstance(value, Partition):
        return _fmt_partition(value)
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    return str(value)


def _machine(value):
    if isinstance(value, Partition):
        return [int(v) for v in value.rep]
    if isinstance(value, (list, tuple)):
        return [_machine(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _args_for(bundle_args, count, what):
    if len(bundle_args) != count:
        raise ParseError(f"expected {count} --object argument(s): {what}")
    return bundle_args


def run_command(bundle: WorkspaceBundle, command: str, objects: list[str],
                limits: Limits = DEFAULT_LIMITS, max_size: int | None = None):
    """Dispatch one command; returns an ordered field list [(key, value)...]."""
    if command == "validate":
        names = objects or sorted(bundle.algebras)
        fields = []
        for nm in names:
            alg = _lookup(bundle.algebras, nm, "validate", "algebra")
            report = validate_algebra(alg)
            fields.append((f"algebra {nm}", "ok" if not report else "; ".join(report)))
        return fields

    if command == "lattice":
        (nm,) = _args_for(objects, 1, "algebra")
        alg = _lookup(bundle.algebras, nm, "lattice", "algebra")
        lat = congruence_lattice(alg, limits)
        fields = [("algebra", nm), ("count", len(lat))]
        for k, p in enumerate(lat):
            fields.append((f"congruence {k}", p))
        return fields

    if command in ("commutator", "centralizes", "connector"):
        nm, rn, sn = _args_for(objects, 3, "algebra partition partition")
        alg = _lookup(bundle.algebras, nm, command, "algebra")
        r = _resolve_partition(bundle, rn, alg, command)
        s = _resolve_partition(bundle, sn, alg, command)
        if command == "commutator":
            cert = commutator(alg, r, s, limits)
            return [("algebra", nm), ("r", r), ("s", s), ("commutator", cert),
                    ("is-diagonal", cert == Partition.diagonal(alg.size))]
        if command == "centralizes":
            verdict = centralizes(alg, r, s, limits)
            return [("algebra", nm), ("r", r), ("s", s), ("centralize", verdict)]
        try:
            table = connector(alg, r, s, limits)
        except NonCentralizingError as exc:
            a, bb, c, d, dp = exc.witness
            return [("algebra", nm), ("connector", "none"),
                    ("witness", f"a={a} b={bb} c={c} d={d} d'={dp}")]
        entries = table.domain()
        fields = [("algebra", nm), ("connector", "ok"), ("domain-size", len(entries))]
        for key in entries:
            fields.append((f"p{key}", table.entries[key]))
        return fields

    if command == "classify-morphism":
        (nm,) = _args_for(objects, 1, "morphism")
        m = _lookup(bundle.morphisms, nm, command, "morphism")
        return [("morphism", nm), ("class", classify_morphism(m))]

    if command in ("check-trivial", "check-central", "check-normal"):
        (nm,) = _args_for(objects, 1, "morphism")
        m = _lookup(bundle.morphisms, nm, command, "morphism")
        if command == "check-trivial":
            return [("morphism", nm), ("trivial", is_trivial_extension(m, limits))]
        if command == "check-central":
            verdict, cert = is_central_extension(m, limits)
            return [("morphism", nm), ("central", verdict), ("certificate", cert)]
        return [("morphism", nm), ("normal", is_normal_extension_oracle(m, limits))]

    if command in ("check-double", "check-double-central"):
        (nm,) = _args_for(objects, 1, "square")
        sq = _lookup(bundle.squares, nm, command, "square")
        if command == "check-double":
            verdict, fib = is_double_extension(sq, limits)
            return [("square", nm), ("double-extension", verdict),
                    ("fibration-class", fib)]
        verdict, (c1, c2) = is_double_central(sq, limits)
        return [("square", nm), ("double-central", verdict),
                ("certificate-kernels", c1), ("certificate-join", c2)]

    if command == "graph-central":
        (nm,) = _args_for(objects, 1, "graph morphism")
        gm = _lookup(bundle.graph_morphisms, nm, command, "graph morphism")
        verdict, cert = graph_extension_central(gm, limits)
        return [("graph-morphism", nm), ("central", verdict), ("certificate", cert)]

    if command == "graph-groupoid":
        (nm,) = _args_for(objects, 1, "graph")
        g = _lookup(bundle.graphs, nm, command, "graph")
        return [("graph", nm), ("internal-groupoid", graph_is_internal_groupoid(g, limits))]

    if command == "graph-double-central":
        (nm,) = _args_for(objects, 1, "graph square")
        gsq = _lookup(bundle.graph_squares, nm, command, "graph square")
        verdict, (c1, c2) = graph_double_central(
            gsq["left"], gsq["top"], gsq["bottom"], gsq["right"], limits)
        return [("graph-square", nm), ("double-central", verdict),
                ("certificate-kernels", c1), ("certificate-join", c2)]

    if command == "peiffer":
        mn, kn = _args_for(objects, 2, "module subset")
        mod = _lookup(bundle.modules, mn, command, "module")
        ref, elems = _lookup(bundle.subsets, kn, command, "subset")
        ideal = peiffer_commutator(mod, elems, limits)
        return [("module", mn), ("subset", kn),
                ("peiffer-commutator", sorted(ideal)),
                ("is-zero", ideal == frozenset({0}))]

    if command == "sweep":
        names = objects or sorted(GROUP_CATALOG)
        rows, summary, ok = enumerate_and_classify(names, max_size or 8, limits)
        fields = [("groups", ",".join(names)), ("rows", len(rows))]
        for k, row in enumerate(rows):
            fields.append((f"row {k}", row))
        fields.extend(summary)
        if not ok:
            raise InternalDisagreementError(
                "sweep found a disagreement between the commutator criterion "
                "and the normality oracle")
        return fields

    raise ParseError(f"unknown command {command!r}; have {', '.join(COMMANDS)}")


def _resolve_partition(bundle: WorkspaceBundle, name: str, alg: FiniteAlgebra,
                       ctx: str) -> Partition:
    """A named partition, or the shorthands 'delta' / 'nabla'."""
    if name == "delta":
        return Partition.diagonal(alg.size)
    if name == "nabla":
        return Partition.full(alg.size)
    part, alg_name = _lookup(bundle.partitions, name, ctx, "partition")
    if part.size != alg.size:
        raise PreconditionError(
            f"{ctx}: partition {name!r} lives on {alg_name!r}, not on the given algebra")
    return part


def enumerate_and_classify(group_names, max_size: int,
                           limits: Limits = DEFAULT_LIMITS):
    """Sweep catalog groups: every congruence pair (R,S) and every quotient
    surjection, classified four ways, plus span squares in the abelian case.

    Returns (rows, summary_fields, ok).  Any central-vs-normal disagreement
    flips ok to False.
    """
    rows = []
    checked = agreements = skipped = 0
    squares_checked = 0
    ok = True
    for gname in sorted(group_names):
        alg = build_group(gname)
        if alg.size > max_size:
            continue
        lattice = congruence_lattice(alg, limits)
        obj_cache = {}
        for ti, t in enumerate(lattice):
            for ri, r in enumerate(lattice):
                for si, s in enumerate(lattice):
                    tag = f"{gname} R={_fmt_partition(r)} S={_fmt_partition(s)} T={_fmt_partition(t)}"
                    if not t.leq(meet(r, s)):
                        rows.append(f"{tag} skipped (not in F)")
                        skipped += 1
                        continue
                    key = (ri, si)
                    if key not in obj_cache:
                        obj_cache[key] = TwoEqObject(alg, r, s)
                    m = quotient_extension(obj_cache[key], t, limits)
                    cls = classify_morphism(m)
                    trivial = is_trivial_extension(m, limits)
                    central, _ = is_central_extension(m, limits)
                    if alg.size <= limits.oracle_max:
                        normal = is_normal_extension_oracle(m, limits)
                        agree = central == normal
                        checked += 1
                        agreements += int(agree)
                        if not agree:
                            ok = False
                        rows.append(
                            f"{tag} class={cls} trivial={trivial} central={central} "
                            f"normal={normal} agree={agree}")
                    else:
                        rows.append(
                            f"{tag} class={cls} trivial={trivial} central={central} "
                            f"normal=skipped (oracle bound)")
        # span squares in the abelian case: X -> X/T1, X -> X/T2
        nabla = Partition.full(alg.size)
        top_obj = TwoEqObject(alg, nabla, nabla)
        for t1 in lattice:
            for t2 in lattice:
                f = quotient_extension(top_obj, t1, limits)
                g = quotient_extension(top_obj, t2, limits)
                join_t = Partition.from_pairs(
                    alg.size, t1.generator_pairs() + t2.generator_pairs())
                jq = quotient_extension(f.target, _push(t1, join_t), limits)
                hq = quotient_extension(g.target, _push(t2, join_t), limits)
                sq = DoubleExtensionSquare(top=g, left=f, bottom=jq, right=hq)
                is_ext, fib = is_double_extension(sq, limits)
                dc = None
                if is_ext and fib:
                    dc, _ = is_double_central(sq, limits)
                rows.append(
                    f"{gname} square T1={_fmt_partition(t1)} T2={_fmt_partition(t2)} "
                    f"double-extension={is_ext} double-central={dc}")
                squares_checked += 1
    summary = [("instances-checked", checked), ("agreements", agreements),
               ("skipped", skipped), ("squares-checked", squares_checked),
               ("all-agree", checked == agreements)]
    return rows, summary, ok


def _push(t: Partition, join_t: Partition) -> Partition:
    """The congruence induced by join_t on the quotient by t (t <= join_t)."""
    reps = np.unique(t.rep)
    return Partition(join_t.rep[reps])


def render_text(fields) -> str:
    return "\n".join(f"{k}: {_fmt(v)}" for k, v in fields)


def render_machine(fields) -> str:
    return json.dumps({k: _machine(v) for k, v in fields}, sort_keys=False, indent=2)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mgk",
        description="Commutator calculus and extension classifiers for finite "
                    "Mal'tsev algebras")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--bundle", help="path to a JSON bundle document")
    parser.add_argument("--object", action="append", default=[],
                        help="object name argument (repeatable, order matters)")
    parser.add_argument("--max-size", type=int, default=None,
                        help="carrier bound for sweeps")
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    args = parser.parse_args(argv)

    try:
        if args.command == "sweep":
            bundle = WorkspaceBundle()
        else:
            if not args.bundle:
                raise ParseError("--bundle is required for this command")
            bundle = load_bundle(args.bundle)
        fields = run_command(bundle, args.command, list(args.object),
                             max_size=args.max_size)
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InternalDisagreementError as exc:
        print(f"internal disagreement: {exc}", file=sys.stderr)
        return EXIT_DISAGREEMENT

    out = render_text(fields) if args.format == "text" else render_machine(fields)
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
