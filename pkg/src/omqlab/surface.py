"""Text formats: `.dl` ontologies, `.db` databases, `.cq` queries,
`.schema` name lists, and the JSON answer format.

Grammar (identifiers ``[A-Za-z_][A-Za-z0-9_]*``, comments ``#`` to end of
line, UTF-8, LF or CRLF):

    concept  :=  "top" | "bot" | IDENT | concept "&" concept
               | "exists" role "." concept | "(" concept ")"
    role     :=  IDENT | "inv(" IDENT ")"
    axiom    :=  concept "<=" concept | role "<=" role
               | "range" IDENT "<=" concept
               | "disjoint-roles" IDENT ("," IDENT)+
               | "func" IDENT
    rule     :=  IDENT "(" vars? ")" ":-" atom ("," atom)*

``exists`` binds tighter than ``&``.  A bare ``X <= Y`` line is read as a
role inclusion when either side occurs in a role position elsewhere in
the file, and as a concept inclusion otherwise.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .model import (
    sorted_facts,
    Atomic,
    Axiom,
    BOT,
    CQ,
    ConceptFact,
    ConceptInclusion,
    Concept,
    Conj,
    Database,
    Dialect,
    Exists,
    Fact,
    Functionality,
    Ontology,
    RangeRestriction,
    Role,
    RoleDisjointness,
    RoleFact,
    RoleInclusion,
    Schema,
    TOP,
    UCQ,
    conj,
    infer_dialect,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1


class ParseError(ValueError):
    def __init__(self, span: SourceSpan, message: str, expected: tuple = ()):
        self.span = span
        self.message = message
        self.expected = tuple(expected)
        loc = f"line {span.line}, column {span.column}"
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{loc}: {message}{hint}")


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow><=|:-)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_-]*)
  | (?P<punct>[().,&:])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize_line(line: str, lineno: int) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if not m:
            raise ParseError(SourceSpan(lineno, pos + 1), f"unexpected character {line[pos]!r}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), SourceSpan(lineno, pos + 1, m.end() - pos)))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, tokens: list[Token], lineno: int, line_len: int):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno
        self.line_len = line_len

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, *expected: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(SourceSpan(self.lineno, self.line_len + 1),
                             "unexpected end of line", expected)
        if expected and tok.text not in expected and tok.kind not in expected:
            raise ParseError(tok.span, f"unexpected {tok.text!r}", expected)
        self.i += 1
        return tok

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def expect_end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise ParseError(tok.span, f"trailing input {tok.text!r}")


def _logical_lines(text: str):
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        tokens = _tokenize_line(line, lineno)
        if tokens:
            yield lineno, line, tokens


_KEYWORDS = {"top", "bot", "exists", "inv", "range", "func", "disjoint-roles", "dialect"}


def _name(tok: Token) -> str:
    """Plain identifier; hyphens are reserved for keywords and dialect names."""
    if "-" in tok.text:
        raise ParseError(tok.span, f"bad identifier {tok.text!r}")
    return tok.text


# ---------------------------------------------------------------------------
# Concept / role parsing


def _parse_role(cur: _Cursor, role_idents: set[str]) -> Role:
    tok = cur.next("ident")
    if tok.kind != "ident":
        raise ParseError(tok.span, f"expected role, got {tok.text!r}", ("IDENT", "inv("))
    if tok.text == "inv":
        cur.next("(")
        name = _name(cur.next("ident"))
        cur.next(")")
        role_idents.add(name)
        return Role(name, True)
    role_idents.add(_name(tok))
    return Role(tok.text)


def _parse_concept(cur: _Cursor, role_idents: set[str], concept_idents: set[str]) -> Concept:
    parts = [_parse_unary(cur, role_idents, concept_idents)]
    while (tok := cur.peek()) is not None and tok.text == "&":
        cur.next("&")
        parts.append(_parse_unary(cur, role_idents, concept_idents))
    return conj(*parts)


def _parse_unary(cur: _Cursor, role_idents: set[str], concept_idents: set[str]) -> Concept:
    tok = cur.peek()
    if tok is None:
        raise ParseError(SourceSpan(cur.lineno, cur.line_len + 1), "expected a concept",
                         ("top", "bot", "IDENT", "exists", "("))
    if tok.text == "(":
        cur.next("(")
        c = _parse_concept(cur, role_idents, concept_idents)
        cur.next(")")
        return c
    if tok.text == "exists":
        cur.next("exists")
        role = _parse_role(cur, role_idents)
        cur.next(".")
        filler = _parse_unary(cur, role_idents, concept_idents)
        return Exists(role, filler)
    if tok.text == "top":
        cur.next("top")
        return TOP
    if tok.text == "bot":
        cur.next("bot")
        return BOT
    if tok.kind == "ident" and tok.text not in _KEYWORDS:
        cur.next("ident")
        concept_idents.add(_name(tok))
        return Atomic(tok.text)
    raise ParseError(tok.span, f"expected a concept, got {tok.text!r}",
                     ("top", "bot", "IDENT", "exists", "("))


# ---------------------------------------------------------------------------
# Ontologies


def parse_ontology(text: str) -> Ontology:
    """Parse a ``.dl`` ontology.  Raises :class:`ParseError` on bad input."""
    lines = list(_logical_lines(text))
    declared: Dialect | None = None

    # classification pass: which identifiers occur in unambiguous role
    # positions, and which in concept positions
    role_idents: set[str] = set()
    concept_idents: set[str] = set()
    ambiguous: list[tuple[int, str, list[Token]]] = []
    plain: list[tuple[int, str, list[Token]]] = []

    for lineno, line, tokens in lines:
        texts = [t.text for t in tokens]
        if texts[0] == "dialect":
            plain.append((lineno, line, tokens))
            continue
        if texts[0] in ("func", "range"):
            idents = [t.text for t in tokens[1:] if t.kind == "ident"]
            if idents:
                role_idents.add(idents[0])
        elif texts[0] == "disjoint-roles":
            role_idents.update(t.text for t in tokens[1:] if t.kind == "ident")
        # role names always follow 'exists' or sit inside 'inv(...)'
        for i, t in enumerate(tokens):
            if t.text == "exists" and i + 1 < len(tokens):
                nxt = tokens[i + 1]
                if nxt.text == "inv":
                    if i + 3 < len(tokens) and tokens[i + 2].text == "(":
                        role_idents.add(tokens[i + 3].text)
                elif nxt.kind == "ident":
                    role_idents.add(nxt.text)
            elif t.text == "inv" and i + 2 < len(tokens) and tokens[i + 1].text == "(":
                role_idents.add(tokens[i + 2].text)
        if (len(tokens) == 3 and tokens[0].kind == "ident" and tokens[1].text == "<="
                and tokens[2].kind == "ident"
                and tokens[0].text not in _KEYWORDS and tokens[2].text not in _KEYWORDS):
            ambiguous.append((lineno, line, tokens))
        else:
            plain.append((lineno, line, tokens))

    axioms: list[Axiom] = []

    for lineno, line, tokens in plain:
        cur = _Cursor(tokens, lineno, len(line))
        head = cur.peek()
        assert head is not None
        if head.text == "dialect":
            cur.next("dialect")
            cur.next(":")
            name = cur.next("ident")
            cur.expect_end()
            try:
                declared = Dialect(name.text)
            except ValueError:
                raise ParseError(name.span, f"unknown dialect {name.text!r}",
                                 tuple(d.value for d in Dialect)) from None
            continue
        if head.text == "func":
            cur.next("func")
            role = cur.next("ident")
            cur.expect_end()
            axioms.append(Functionality(_name(role)))
            continue
        if head.text == "range":
            cur.next("range")
            role = cur.next("ident")
            role_idents.add(_name(role))
            cur.next("<=")
            filler = _parse_concept(cur, role_idents, concept_idents)
            cur.expect_end()
            axioms.append(RangeRestriction(role.text, filler))
            continue
        if head.text == "disjoint-roles":
            cur.next("disjoint-roles")
            roles = [_name(cur.next("ident"))]
            while not cur.at_end():
                cur.next(",")
                roles.append(_name(cur.next("ident")))
            if len(roles) < 2:
                raise ParseError(head.span, "disjoint-roles needs at least two roles")
            axioms.append(RoleDisjointness(tuple(roles)))
            continue
        # role inclusion with an explicit inv(...) on either side
        if _looks_like_role_inclusion(tokens):
            lhs = _parse_role(cur, role_idents)
            cur.next("<=")
            rhs = _parse_role(cur, role_idents)
            cur.expect_end()
            axioms.append(RoleInclusion(lhs, rhs))
            continue
        lhs = _parse_concept(cur, role_idents, concept_idents)
        cur.next("<=")
        rhs = _parse_concept(cur, role_idents, concept_idents)
        cur.expect_end()
        axioms.append(ConceptInclusion(lhs, rhs))

    for lineno, line, tokens in ambiguous:
        a, b = tokens[0], tokens[2]
        as_role = a.text in role_idents or b.text in role_idents
        as_concept = a.text in concept_idents or b.text in concept_idents
        if as_role and as_concept:
            raise ParseError(tokens[1].span,
                             f"{a.text} <= {b.text} mixes role and concept names")
        if as_role:
            axioms.append(RoleInclusion(Role(a.text), Role(b.text)))
        else:
            axioms.append(ConceptInclusion(Atomic(a.text), Atomic(b.text)))

    dialect = declared if declared is not None else infer_dialect(axioms)
    return Ontology(axioms, dialect)


def _looks_like_role_inclusion(tokens: list[Token]) -> bool:
    texts = [t.text for t in tokens]
    if "<=" not in texts:
        return False
    return "inv" in texts and "exists" not in texts


def serialize_ontology(o: Ontology) -> str:
    lines = [f"dialect: {o.dialect.value}"]
    lines += [str(a) for a in o.sorted_axioms()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Databases


_FACT_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([A-Za-z0-9_]+)\s*(?:,\s*([A-Za-z0-9_]+)\s*)?\)\s*$")


def parse_database(text: str) -> Database:
    facts: list[Fact] = []
    arity: dict[str, int] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _FACT_RE.match(line)
        if not m:
            raise ParseError(SourceSpan(lineno, 1, len(line)),
                             f"malformed fact {line!r}", ("Name(c)", "Name(c,d)"))
        name, a, b = m.group(1), m.group(2), m.group(3)
        n = 1 if b is None else 2
        if arity.setdefault(name, n) != n:
            raise ParseError(SourceSpan(lineno, 1, len(name)),
                             f"{name} used with both arity 1 and 2")
        facts.append(ConceptFact(name, a) if b is None else RoleFact(name, a, b))
    return Database(facts)


def serialize_database(d: Database) -> str:
    return "\n".join(str(f) for f in sorted_facts(d.facts)) + ("\n" if d.facts else "")


# ---------------------------------------------------------------------------
# Queries


def parse_query(text: str) -> UCQ:
    heads: list[tuple] = []
    disjuncts: list[CQ] = []
    arity: dict[str, int] = {}
    for lineno, line, tokens in _logical_lines(text):
        cur = _Cursor(tokens, lineno, len(line))
        head_tok = cur.next("ident")
        _name(head_tok)
        cur.next("(")
        avs: list[str] = []
        tok = cur.peek()
        if tok is not None and tok.text != ")":
            avs.append(_name(cur.next("ident")))
            while (tok := cur.peek()) is not None and tok.text == ",":
                cur.next(",")
                avs.append(_name(cur.next("ident")))
        cur.next(")")
        cur.next(":-")
        if len(set(avs)) != len(avs):
            raise ParseError(head_tok.span, f"repeated answer variable in {tuple(avs)}")
        atoms: list[Fact] = []
        while True:
            name = cur.next("ident")
            _name(name)
            cur.next("(")
            t1 = _name(cur.next("ident"))
            t2 = None
            if (tok := cur.peek()) is not None and tok.text == ",":
                cur.next(",")
                t2 = _name(cur.next("ident"))
            cur.next(")")
            n = 1 if t2 is None else 2
            if arity.setdefault(name.text, n) != n:
                raise ParseError(name.span, f"{name.text} used with both arity 1 and 2")
            atoms.append(ConceptFact(name.text, t1) if t2 is None
                         else RoleFact(name.text, t1, t2))
            if cur.at_end():
                break
            cur.next(",")
        body_vars = {t for at in atoms for t in at.terms()}
        for x in avs:
            if x not in body_vars:
                raise ParseError(head_tok.span, f"answer variable {x} not bound in the body")
        heads.append((head_tok, tuple(avs)))
        disjuncts.append(CQ(tuple(avs), atoms))
    if not disjuncts:
        raise ParseError(SourceSpan(1, 1), "no query rules found")
    first = heads[0][1]
    for head_tok, avs in heads[1:]:
        if avs != first:
            raise ParseError(head_tok.span,
                             f"rule heads disagree: {first} vs {avs}")
    return UCQ(disjuncts)


def serialize_query(q: UCQ, head: str = "q") -> str:
    lines = []
    for d in q.disjuncts:
        body = ", ".join(str(a) for a in d.sorted_atoms())
        if not body:
            body = ""
        lines.append(f"{head}({','.join(d.answer_vars)}) :- {body}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Schemas and answers


def parse_schema(text: str) -> Schema:
    names = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "full":
            return Schema.full_schema()
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", line):
            raise ParseError(SourceSpan(lineno, 1, len(line)), f"bad schema name {line!r}")
        names.append(line)
    return Schema.of(names)


def serialize_schema(s: Schema) -> str:
    if s.full:
        return "full\n"
    return "\n".join(sorted(s.names)) + ("\n" if s.names else "")


def serialize_answers(consistent: bool, answers) -> str:
    """JSON answer format; answer tuples are sorted lexicographically."""
    tuples = sorted([list(t) for t in answers])
    return json.dumps({"consistent": bool(consistent), "answers": tuples})


def parse_answers(text: str) -> tuple[bool, list[tuple]]:
    data = json.loads(text)
    return bool(data["consistent"]), [tuple(t) for t in data["answers"]]
