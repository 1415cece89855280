"""Command-line entry point.

Exit codes: 0 success, 2 parse error, 3 dialect or schema violation,
4 unknown verdict / budget exhausted, 5 internal cap exceeded.
Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import surface
from .model import Database, FULL_SCHEMA, OMQ, Ontology, QueryError, Schema, DialectError
from .chase import ChaseCapExceeded, InconsistentInput, canonical_model, oblivious_chase
from .entailment import UnsupportedDialect, is_consistent
from .evaluation import SchemaViolation, TreewidthPrecondition, evaluate_fpt, evaluate_naive
from .graphalg import CapExceeded, cq_treewidth, k_unravel
from .homtools import core
from .pebble import PebblePrecondition, pebble_answers
from .surface import ParseError
from .treelike import (
    SchemaPrecondition,
    contains_dllite_horn,
    contains_full_schema,
    decide_tw_equiv_general,
    rewriting,
    ucq_k_approximation,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DIALECT = 3
EXIT_UNKNOWN = 4
EXIT_CAP = 5


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _load_schema(arg: str | None) -> Schema:
    if arg is None or arg == "full":
        return FULL_SCHEMA
    return surface.parse_schema(_read(arg))


def _load_omq(args) -> OMQ:
    onto = surface.parse_ontology(_read(args.onto)) if args.onto else Ontology((),)
    query = surface.parse_query(_read(args.query))
    return OMQ(onto, _load_schema(args.schema), query)


def _default_budget(args) -> int:
    env = os.environ.get("OMQLAB_BUDGET")
    if args.budget is not None:
        return args.budget
    if env:
        return int(env)
    return 5


def _emit_answers(args, result) -> None:
    if args.json:
        print(surface.serialize_answers(result.consistent, sorted(result.answers)))
        return
    if not result.consistent:
        print("inconsistent: every tuple is a certain answer", file=sys.stderr)
    if result.answers and next(iter(result.answers)) == ():
        print("true")
    elif not result.answers:
        print("false" if _boolean(args) else "")
    else:
        for t in sorted(result.answers):
            print(",".join(t))


def _boolean(args) -> bool:
    return getattr(args, "_arity", 1) == 0


def cmd_eval(args) -> int:
    Q = _load_omq(args)
    args._arity = Q.arity
    d = surface.parse_database(_read(args.db))
    if args.algo == "naive":
        res = evaluate_naive(Q, d)
    elif args.algo == "fpt":
        k = args.k if args.k is not None else max(
            cq_treewidth(cq) for cq in Q.query.disjuncts)
        res = evaluate_fpt(Q, d, max(1, k))
    elif args.algo == "pebble":
        k = args.k if args.k is not None else 1
        answers = pebble_answers(Q, d, k)
        consistent = is_consistent(d, Q.ontology)

        class R:
            pass

        res = R()
        res.consistent = consistent
        res.answers = answers
    else:
        raise ValueError(f"unknown algorithm {args.algo}")
    _emit_answers(args, res)
    return EXIT_OK


def cmd_consistent(args) -> int:
    onto = surface.parse_ontology(_read(args.onto))
    d = surface.parse_database(_read(args.db))
    ok = is_consistent(d, onto)
    print(json.dumps({"consistent": ok}) if args.json else ("true" if ok else "false"))
    return EXIT_OK


def cmd_chase(args) -> int:
    onto = surface.parse_ontology(_read(args.onto))
    d = surface.parse_database(_read(args.db))
    if args.canonical:
        cm = canonical_model(d, onto, args.steps, require_consistent=False)
        ch = cm.chase_db()
    else:
        ch = oblivious_chase(d, onto, args.depth)
    prov = {c: {"kind": p.kind,
                **({"parent": p.parent} if p.parent else {}),
                **({"via": str(p.via)} if p.via else {}),
                "depth": p.depth}
            for c, p in sorted(ch.provenance.items())}
    if args.json:
        print(json.dumps({"facts": sorted(str(f) for f in ch.facts.facts),
                          "provenance": prov}, indent=None, sort_keys=True))
        return EXIT_OK
    print(surface.serialize_database(ch.facts), end="")
    if args.provenance:
        Path(args.provenance).write_text(json.dumps(prov, sort_keys=True),
                                         encoding="utf-8")
        print(f"provenance written to {args.provenance}", file=sys.stderr)
    return EXIT_OK


def cmd_treewidth(args) -> int:
    q = surface.parse_query(_read(args.query))
    widths = [cq_treewidth(cq) for cq in q.disjuncts]
    if args.json:
        print(json.dumps({"disjuncts": widths, "max": max(widths)}))
        return EXIT_OK
    for i, w in enumerate(widths, start=1):
        print(f"disjunct {i}: {w}")
    print(f"max: {max(widths)}")
    return EXIT_OK


def cmd_core(args) -> int:
    q = surface.parse_query(_read(args.query))
    from .model import UCQ
    cored = UCQ(tuple(core(cq) for cq in q.disjuncts))
    print(surface.serialize_query(cored), end="")
    return EXIT_OK


def cmd_approx(args) -> int:
    Q = _load_omq(args)
    Qa = ucq_k_approximation(Q, args.k)
    print(surface.serialize_query(Qa.query), end="")
    return EXIT_OK


def cmd_tw_equiv(args) -> int:
    Q = _load_omq(args)
    budget = _default_budget(args)
    verdict = decide_tw_equiv_general(Q, args.k, budget=budget)
    if args.json:
        payload = {"outcome": verdict.outcome}
        if verdict.witness is not None:
            payload["witness"] = surface.serialize_query(verdict.witness.query)
        if verdict.counterexample is not None:
            payload["counterexample"] = surface.serialize_database(verdict.counterexample)
        if verdict.note:
            payload["note"] = verdict.note
        print(json.dumps(payload, sort_keys=True))
    else:
        print(verdict.outcome.upper())
        if verdict.counterexample is not None:
            print("counterexample:", file=sys.stderr)
            print(surface.serialize_database(verdict.counterexample),
                  end="", file=sys.stderr)
    if verdict.outcome == "yes" and args.out:
        Path(args.out + ".cq").write_text(
            surface.serialize_query(verdict.witness.query), encoding="utf-8")
        Path(args.out + ".dl").write_text(
            surface.serialize_ontology(verdict.witness.ontology), encoding="utf-8")
        print(f"witness written to {args.out}.cq / {args.out}.dl", file=sys.stderr)
    return EXIT_OK if verdict.outcome != "unknown" else EXIT_UNKNOWN


def cmd_contain(args) -> int:
    Q1 = _load_omq(args)
    onto2 = surface.parse_ontology(_read(args.onto2)) if args.onto2 else Q1.ontology
    query2 = surface.parse_query(_read(args.query2))
    Q2 = OMQ(onto2, Q1.schema, query2)
    if Q1.schema.full:
        ok = contains_full_schema(Q1, Q2)
    else:
        ok = contains_dllite_horn(Q1, Q2)
    print(json.dumps({"contained": ok}) if args.json else ("true" if ok else "false"))
    return EXIT_OK


def cmd_rewrite(args) -> int:
    Q = _load_omq(args)
    out = rewriting(Q)
    print(surface.serialize_query(out.query), end="")
    return EXIT_OK


def cmd_unravel(args) -> int:
    d = surface.parse_database(_read(args.db))
    anchors = tuple(args.tuple.split(",")) if args.tuple else ()
    u = k_unravel(d, anchors, args.k, args.depth)
    if args.json:
        print(json.dumps({
            "facts": sorted(str(f) for f in u.database.facts),
            "projection": dict(sorted(u.projection().items())),
        }, sort_keys=True))
    else:
        print(surface.serialize_database(u.database), end="")
    return EXIT_OK


def cmd_dlf_rew(args) -> int:
    from .dllitef import rew
    Q = _load_omq(args)
    out = rew(Q)
    print(surface.serialize_query(out), end="")
    return EXIT_OK


def cmd_dlf_equiv1(args) -> int:
    from .dllitef import decide_ubcq1_equiv
    Q = _load_omq(args)
    verdict = decide_ubcq1_equiv(Q)
    if args.json:
        payload = {"outcome": verdict.outcome}
        if verdict.witness is not None:
            payload["witness"] = surface.serialize_query(verdict.witness.query)
        print(json.dumps(payload, sort_keys=True))
    else:
        print(verdict.outcome.upper())
    if verdict.outcome == "yes" and args.out:
        Path(args.out + ".cq").write_text(
            surface.serialize_query(verdict.witness.query), encoding="utf-8")
        Path(args.out + ".dl").write_text(
            surface.serialize_ontology(verdict.witness.ontology), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="omqlab",
        description="Ontology-mediated query evaluation and analysis")
    p.add_argument("--jobs", type=int, default=1,
                   help="upper bound on internal parallelism (evaluation is "
                        "deterministic regardless)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, onto=True, query=True, db=False, schema=True, k=False):
        if onto:
            sp.add_argument("--onto", help="ontology file (.dl), or - for stdin")
        if query:
            sp.add_argument("--query", required=True, help="query file (.cq)")
        if db:
            sp.add_argument("--db", required=True, help="database file (.db)")
        if schema:
            sp.add_argument("--schema", default="full",
                            help="'full' or a .schema file listing names")
        if k:
            sp.add_argument("-k", type=int, required=True, help="treewidth bound")
        sp.add_argument("--json", action="store_true", help="JSON output")

    sp = sub.add_parser("eval", help="evaluate an OMQ over a database")
    common(sp, db=True)
    sp.add_argument("--algo", choices=["naive", "fpt", "pebble"], default="naive")
    sp.add_argument("-k", type=int, help="treewidth bound (fpt/pebble)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("consistent", help="database consistency with an ontology")
    sp.add_argument("--onto", required=True)
    sp.add_argument("--db", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_consistent)

    sp = sub.add_parser("chase", help="materialize the chase of a database")
    sp.add_argument("--onto", required=True)
    sp.add_argument("--db", required=True)
    sp.add_argument("--depth", type=int, default=3,
                    help="anonymous forest depth (oblivious chase)")
    sp.add_argument("--canonical", action="store_true",
                    help="build the truncated canonical model instead")
    sp.add_argument("--steps", type=int, default=3,
                    help="successor rounds for --canonical")
    sp.add_argument("--provenance", help="write the JSON provenance sidecar here")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_chase)

    sp = sub.add_parser("treewidth", help="treewidth of each disjunct")
    sp.add_argument("--query", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_treewidth)

    sp = sub.add_parser("core", help="core of each disjunct")
    sp.add_argument("--query", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_core)

    sp = sub.add_parser("approx", help="width-k approximation of an OMQ")
    common(sp, k=True)
    sp.set_defaults(func=cmd_approx)

    sp = sub.add_parser("tw-equiv", help="decide width-k equivalence")
    common(sp, k=True)
    sp.add_argument("--budget", type=int,
                    help="counterexample search budget (constants); "
                         "OMQLAB_BUDGET overrides the default of 5")
    sp.add_argument("--out", help="prefix for witness .cq/.dl files")
    sp.set_defaults(func=cmd_tw_equiv)

    sp = sub.add_parser("contain", help="OMQ containment Q1 <= Q2")
    common(sp)
    sp.add_argument("--onto2", help="right-hand ontology (defaults to --onto)")
    sp.add_argument("--query2", required=True, help="right-hand query")
    sp.set_defaults(func=cmd_contain)

    sp = sub.add_parser("rewrite", help="equivalence-preserving rewriting")
    common(sp)
    sp.set_defaults(func=cmd_rewrite)

    sp = sub.add_parser("unravel", help="width-k unraveling of a database")
    sp.add_argument("--db", required=True)
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--tuple", help="comma-separated anchor constants")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_unravel)

    sp = sub.add_parser("dlf-rew", help="functionality-eliminating rewriting")
    common(sp)
    sp.set_defaults(func=cmd_dlf_rew)

    sp = sub.add_parser("dlf-equiv1", help="width-1 equivalence for DL-LiteF")
    common(sp)
    sp.add_argument("--out", help="prefix for witness .cq/.dl files")
    sp.set_defaults(func=cmd_dlf_equiv1)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (DialectError, SchemaViolation, SchemaPrecondition, UnsupportedDialect,
            PebblePrecondition, TreewidthPrecondition, InconsistentInput,
            QueryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIALECT
    except (CapExceeded, ChaseCapExceeded) as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIALECT


if __name__ == "__main__":
    sys.exit(main())
