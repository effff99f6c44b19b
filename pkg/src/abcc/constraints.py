"""TGDs and DCs over the schema extended with ``Com``: AST, parser, printer, checker.

Textual form, one constraint per line::

    DC: Supervise(c1,c2) & Com(c1) & Com(c2)
    TGD: Topic(t) -> EXISTS c,p . Author(c,p) & Pub(p,t) & Com(c)
    TGD: true -> EXISTS c . Author(c,"p1") & Com(c)

Body variables are implicitly universal; ``EXISTS`` lists head existentials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from abcc.errors import ArityMismatch, ConstraintSyntaxError, UnknownRelation, UnsafeVariable
from abcc.relational import COM, Database, Schema, Value, atom_variables, ground_conjunction

VARIABLE_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
OPERATORS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Var:
    name: str
    is_variable = True

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: Value
    is_variable = False

    def __str__(self):
        if isinstance(self.value, int):
            return str(self.value)
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


Term = Union[Var, Const]


@dataclass(frozen=True)
class RelAtom:
    relation: str
    terms: Tuple[Term, ...]

    @property
    def is_com(self) -> bool:
        return self.relation == COM

    def __str__(self):
        return f"{self.relation}({','.join(map(str, self.terms))})"


@dataclass(frozen=True)
class CmpAtom:
    left: Term
    op: str
    right: Term

    @property
    def terms(self) -> Tuple[Term, Term]:
        return (self.left, self.right)

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


Atom = Union[RelAtom, CmpAtom]


@dataclass(frozen=True)
class Tgd:
    """forall x [body -> exists y [head]]; an empty body means ``true``."""

    body: Tuple[RelAtom, ...]
    existential_vars: Tuple[str, ...]
    head: Tuple[RelAtom, ...]

    @property
    def universal_vars(self) -> List[str]:
        return atom_variables(self.body)

    @property
    def body_com_terms(self) -> List[Term]:
        return [a.terms[0] for a in self.body if a.is_com]

    @property
    def head_com_terms(self) -> List[Term]:
        return [a.terms[0] for a in self.head if a.is_com]

    def __str__(self):
        body = " & ".join(map(str, self.body)) if self.body else "true"
        head = " & ".join(map(str, self.head))
        if self.existential_vars:
            return f"TGD: {body} -> EXISTS {','.join(self.existential_vars)} . {head}"
        return f"TGD: {body} -> {head}"


@dataclass(frozen=True)
class Dc:
    """forall x not(relational_atoms and comparison_atoms)."""

    relational_atoms: Tuple[RelAtom, ...]
    comparison_atoms: Tuple[CmpAtom, ...] = ()

    @property
    def universal_vars(self) -> List[str]:
        return atom_variables(self.relational_atoms)

    @property
    def com_terms(self) -> List[Term]:
        return [a.terms[0] for a in self.relational_atoms if a.is_com]

    def __str__(self):
        return "DC: " + " & ".join(map(str, self.relational_atoms + self.comparison_atoms))


Constraint = Union[Tgd, Dc]


@dataclass(frozen=True)
class ConstraintSet:
    tgds: Tuple[Tgd, ...] = ()
    dcs: Tuple[Dc, ...] = ()

    def __iter__(self):
        yield from self.tgds
        yield from self.dcs

    def __len__(self):
        return len(self.tgds) + len(self.dcs)

    @classmethod
    def of(cls, constraints: Iterable[Constraint]) -> "ConstraintSet":
        constraints = list(constraints)
        return cls(
            tuple(c for c in constraints if isinstance(c, Tgd)),
            tuple(c for c in constraints if isinstance(c, Dc)),
        )


def pretty_print(gamma: Union[ConstraintSet, Constraint]) -> str:
    if isinstance(gamma, (Tgd, Dc)):
        return str(gamma)
    return "".join(f"{c}\n" for c in gamma)


# -- parsing --------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<arrow>->)
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.&:])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    column: int  # 1-based


def _tokenize(line: str, lineno: int) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise ConstraintSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1, line)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(_Token("eol", "", len(line) + 1))
    return tokens


class _LineParser:
    def __init__(self, line: str, lineno: int, schema: Schema):
        self.line = line
        self.lineno = lineno
        self.schema = schema
        self.tokens = _tokenize(line, lineno)
        self.i = 0

    def error(self, message, token=None):
        token = token or self.peek()
        return ConstraintSyntaxError(message, self.lineno, token.column, self.line)

    def peek(self, offset=0) -> _Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def take(self, kind=None, text=None) -> _Token:
        tok = self.peek()
        if (kind and tok.kind != kind) or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of line"
            raise self.error(f"expected {want!r}, found {got!r}")
        self.i += 1
        return tok

    def at(self, kind, text=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def parse(self) -> Constraint:
        head_tok = self.take("name")
        self.take("punct", ":")
        if head_tok.text == "DC":
            atoms = self.conj()
            self.take("eol")
            rel = tuple(a for a in atoms if isinstance(a, RelAtom))
            cmps = tuple(a for a in atoms if isinstance(a, CmpAtom))
            dc = Dc(rel, cmps)
            self.check_dc(dc, head_tok)
            return dc
        if head_tok.text == "TGD":
            if self.at("name", "true") and not self.at_atom_start():
                self.take()
                body: Tuple = ()
            else:
                body = tuple(self.conj())
            self.take("arrow")
            existentials: Tuple[str, ...] = ()
            if self.at("name", "EXISTS"):
                self.take()
                names = [self.variable_name()]
                while self.at("punct", ","):
                    self.take()
                    names.append(self.variable_name())
                self.take("punct", ".")
                existentials = tuple(names)
            head = tuple(self.conj())
            self.take("eol")
            for atom in body + head:
                if isinstance(atom, CmpAtom):
                    raise ConstraintSyntaxError(
                        "comparison atoms are not allowed in TGDs", self.lineno, 1, self.line
                    )
            tgd = Tgd(body, existentials, head)
            self.check_tgd(tgd, head_tok)
            return tgd
        raise self.error(f"expected 'DC' or 'TGD', found {head_tok.text!r}", head_tok)

    def at_atom_start(self) -> bool:
        return self.peek(1).kind == "punct" and self.peek(1).text == "("

    def variable_name(self) -> str:
        tok = self.take("name")
        if not VARIABLE_RE.match(tok.text) or tok.text == "true":
            raise self.error(f"{tok.text!r} is not a variable name", tok)
        return tok.text

    def conj(self) -> List[Atom]:
        atoms = [self.atom()]
        while self.at("punct", "&"):
            self.take()
            atoms.append(self.atom())
        return atoms

    def atom(self) -> Atom:
        tok = self.peek()
        if tok.kind == "name" and self.at_atom_start():
            self.take()
            self.take("punct", "(")
            terms = [self.term()]
            while self.at("punct", ","):
                self.take()
                terms.append(self.term())
            self.take("punct", ")")
            self.check_relation(tok, len(terms))
            return RelAtom(tok.text, tuple(terms))
        left = self.term()
        op = self.take("op").text
        right = self.term()
        return CmpAtom(left, op, right)

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "int":
            self.take()
            return Const(int(tok.text))
        if tok.kind == "string":
            self.take()
            body = tok.text[1:-1]
            return Const(re.sub(r"\\(.)", r"\1", body))
        if tok.kind == "name":
            return Var(self.variable_name())
        raise self.error(f"expected a term, found {tok.text or 'end of line'!r}")

    def check_relation(self, tok: _Token, arity: int):
        if tok.text == COM:
            expected = 1
        elif tok.text in self.schema:
            expected = self.schema[tok.text].arity
        else:
            raise UnknownRelation(f"line {self.lineno}, column {tok.column}: unknown relation {tok.text!r}")
        if arity != expected:
            raise ArityMismatch(
                f"line {self.lineno}, column {tok.column}: {tok.text} takes {expected} terms, got {arity}"
            )

    def check_dc(self, dc: Dc, tok):
        bound = set(dc.universal_vars)
        for c in dc.comparison_atoms:
            for t in c.terms:
                if isinstance(t, Var) and t.name not in bound:
                    raise UnsafeVariable(
                        f"line {self.lineno}: variable {t.name!r} occurs only in a comparison"
                    )

    def check_tgd(self, tgd: Tgd, tok):
        universal = set(tgd.universal_vars)
        clash = universal & set(tgd.existential_vars)
        if clash:
            raise UnsafeVariable(
                f"line {self.lineno}: existential variable(s) {sorted(clash)} also occur in the body"
            )
        if len(set(tgd.existential_vars)) != len(tgd.existential_vars):
            raise UnsafeVariable(f"line {self.lineno}: repeated existential variable")
        allowed = universal | set(tgd.existential_vars)
        for name in atom_variables(tgd.head):
            if name not in allowed:
                raise UnsafeVariable(
                    f"line {self.lineno}: head variable {name!r} is neither universal nor existential"
                )


def parse_constraint(line: str, schema: Schema, lineno: int = 1) -> Constraint:
    return _LineParser(line, lineno, schema).parse()


def parse_constraints(text: str, schema: Schema) -> ConstraintSet:
    """Parse a constraint file. Blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        out.append(parse_constraint(line, schema, lineno))
    return ConstraintSet.of(out)


def _strip_comment(line: str) -> str:
    in_string = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and in_string:
            escaped = True
        elif ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


# -- satisfaction -----------------------------------------------------------


def check_constraint(db: Database, committee: Iterable[Value], constraint: Constraint) -> bool:
    """Does ``constraint`` hold in D ⊎ B, with ``Com`` read as ``committee``?"""
    ext = db.with_committee(committee)
    if isinstance(constraint, Dc):
        violations = ground_conjunction(ext, constraint.relational_atoms, constraint.comparison_atoms)
        return next(violations, None) is None
    for alpha in ground_conjunction(ext, constraint.body, order=constraint.universal_vars):
        if next(ground_conjunction(ext, constraint.head, seed=alpha), None) is None:
            return False
    return True


def is_legal(db: Database, committee: Iterable[Value], gamma: ConstraintSet, k: int) -> bool:
    committee = set(committee)
    if len(committee) != k:
        return False
    return all(check_constraint(db, committee, c) for c in gamma)
