"""In-memory relational database with key checks and conjunctive-query grounding.

Values are plain Python ``str`` or ``int``. Equality is Python equality,
so ``1`` and ``"1"`` are different values.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from abcc.errors import ArityMismatch, InputFormatError, UnknownRelation, UnsafeVariable

logger = logging.getLogger(__name__)

Value = Union[str, int]
Assignment = Dict[str, Value]

COM = "Com"


@dataclass(frozen=True)
class RelationSchema:
    name: str
    arity: int
    attribute_names: Tuple[str, ...] = ()
    key_attributes: frozenset = frozenset()  # 1-based indices
    types: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"relation {self.name}: arity must be positive")
        if not self.attribute_names:
            object.__setattr__(
                self, "attribute_names", tuple(f"a{i}" for i in range(1, self.arity + 1))
            )
        if len(self.attribute_names) != self.arity:
            raise ValueError(f"relation {self.name}: {len(self.attribute_names)} attribute names for arity {self.arity}")
        if not self.types:
            object.__setattr__(self, "types", ("text",) * self.arity)
        if len(self.types) != self.arity or not set(self.types) <= {"text", "int"}:
            raise ValueError(f"relation {self.name}: types must be 'text' or 'int', one per attribute")
        object.__setattr__(self, "key_attributes", frozenset(self.key_attributes))
        for i in self.key_attributes:
            if not 1 <= i <= self.arity:
                raise ValueError(f"relation {self.name}: key attribute {i} outside 1..{self.arity}")


class Schema:
    """Named relations with arities and declared key attributes.

    ``Com`` is reserved for the virtual committee relation; only an extended
    schema (see :meth:`extended`) may carry it.
    """

    def __init__(self, relations: Iterable[RelationSchema], *, _extended: bool = False):
        self._relations: Dict[str, RelationSchema] = {}
        for rel in relations:
            if rel.name in self._relations:
                raise ValueError(f"duplicate relation name {rel.name!r}")
            if rel.name == COM and not _extended:
                raise ValueError("relation name 'Com' is reserved for the committee")
            self._relations[rel.name] = rel
        self.is_extended = _extended
        self._extended_cache: Optional[Schema] = None

    def __contains__(self, name):
        return name in self._relations

    def __getitem__(self, name) -> RelationSchema:
        try:
            return self._relations[name]
        except KeyError:
            raise UnknownRelation(f"unknown relation {name!r}") from None

    def __iter__(self):
        return iter(self._relations.values())

    def __len__(self):
        return len(self._relations)

    def __eq__(self, other):
        return isinstance(other, Schema) and self._relations == other._relations

    @property
    def names(self) -> List[str]:
        return list(self._relations)

    def extended(self) -> "Schema":
        """The schema plus ``Com/1``."""
        if self.is_extended:
            return self
        if self._extended_cache is None:
            self._extended_cache = Schema(
                list(self) + [RelationSchema(COM, 1, ("candidate",))], _extended=True
            )
        return self._extended_cache

    @classmethod
    def from_json(cls, doc: Mapping) -> "Schema":
        rels = []
        for entry in doc["relations"]:
            attrs = tuple(entry.get("attributes", ()))
            arity = entry.get("arity", len(attrs))
            rels.append(
                RelationSchema(
                    name=entry["name"],
                    arity=arity,
                    attribute_names=attrs,
                    key_attributes=frozenset(entry.get("keys", ())),
                    types=tuple(entry.get("types", ())),
                )
            )
        return cls(rels)

    def to_json(self) -> dict:
        return {
            "relations": [
                {
                    "name": r.name,
                    "attributes": list(r.attribute_names),
                    "keys": sorted(r.key_attributes),
                    "types": list(r.types),
                }
                for r in self
                if r.name != COM
            ]
        }


def value_sort_key(v: Value):
    # ints before text; never compares an int with a str
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


class Database:
    """Immutable set-semantics relations over a schema.

    Key constraints are *not* enforced on construction; use
    :func:`validate_keys` to list violations.
    """

    def __init__(self, schema: Schema, relations: Mapping[str, Iterable[Sequence[Value]]] = ()):
        self.schema = schema
        rels: Dict[str, frozenset] = {}
        for name, rows in dict(relations).items():
            rel = schema[name]
            tuples = set()
            for row in rows:
                row = tuple(row)
                if len(row) != rel.arity:
                    raise ArityMismatch(f"tuple {row!r} has length {len(row)}, {name} has arity {rel.arity}")
                tuples.add(row)
            rels[name] = frozenset(tuples)
        for rel in schema:
            rels.setdefault(rel.name, frozenset())
        self._relations = rels
        self._indexes: Dict[Tuple[str, Tuple[int, ...]], Dict[tuple, List[tuple]]] = {}
        self._sorted: Dict[str, List[tuple]] = {}
        self._base: Optional[Database] = None

    def __getitem__(self, name) -> frozenset:
        try:
            return self._relations[name]
        except KeyError:
            raise UnknownRelation(f"unknown relation {name!r}") from None

    def __contains__(self, name):
        return name in self._relations

    @property
    def relation_names(self) -> List[str]:
        return list(self._relations)

    def sorted_tuples(self, name) -> List[tuple]:
        if self._base is not None and name != COM:
            return self._base.sorted_tuples(name)
        cached = self._sorted.get(name)
        if cached is None:
            cached = sorted(self[name], key=lambda t: tuple(value_sort_key(v) for v in t))
            self._sorted[name] = cached
        return cached

    def index(self, name: str, positions: Tuple[int, ...]) -> Dict[tuple, List[tuple]]:
        """Hash index of relation ``name`` on the given 0-based positions."""
        if self._base is not None and name != COM:
            return self._base.index(name, positions)
        key = (name, positions)
        idx = self._indexes.get(key)
        if idx is None:
            idx = {}
            for t in self.sorted_tuples(name):
                idx.setdefault(tuple(t[p] for p in positions), []).append(t)
            self._indexes[key] = idx
        return idx

    def with_committee(self, committee: Iterable[Value]) -> "Database":
        """The extended database D ⊎ B, with ``Com`` interpreted as ``committee``."""
        base = self._base if self._base is not None else self
        ext = Database.__new__(Database)
        ext.schema = base.schema.extended()
        ext._relations = dict(base._relations)
        ext._relations[COM] = frozenset((c,) for c in committee)
        ext._indexes = {}
        ext._sorted = {}
        ext._base = base
        return ext

    # -- loading -------------------------------------------------------

    @classmethod
    def load(cls, schema: Schema, directory: Union[str, Path]) -> "Database":
        """Read one header-less CSV file per relation, ``<name>.csv``.

        Missing files are empty relations; CSV files for relations outside the
        schema raise :class:`UnknownRelation`.
        """
        directory = Path(directory)
        for path in sorted(directory.glob("*.csv")):
            if path.stem not in schema:
                raise UnknownRelation(f"{path}: relation {path.stem!r} is not in the schema")
        relations = {}
        for rel in schema:
            path = directory / f"{rel.name}.csv"
            if not path.exists():
                logger.info("no data file for relation %s; treating it as empty", rel.name)
                continue
            rows = []
            with open(path, newline="", encoding="utf-8") as fh:
                for lineno, raw in enumerate(csv.reader(fh), start=1):
                    if not raw:
                        continue
                    if len(raw) != rel.arity:
                        raise InputFormatError(
                            f"{path}:{lineno}: expected {rel.arity} fields, got {len(raw)}"
                        )
                    row = []
                    for field_value, typ in zip(raw, rel.types):
                        if typ == "int":
                            try:
                                row.append(int(field_value))
                            except ValueError:
                                raise InputFormatError(
                                    f"{path}:{lineno}: {field_value!r} is not an integer"
                                ) from None
                        else:
                            row.append(field_value)
                    rows.append(tuple(row))
            relations[rel.name] = rows
        return cls(schema, relations)


def load_schema(path: Union[str, Path]) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    try:
        return Schema.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}: invalid schema ({exc})") from None


@dataclass(frozen=True)
class KeyViolation:
    relation: str
    attribute: int
    first: tuple
    second: tuple

    def __str__(self):
        return (
            f"{self.relation}: key attribute {self.attribute} violated by "
            f"{self.first!r} and {self.second!r}"
        )


def validate_keys(db: Database, schema: Optional[Schema] = None) -> List[KeyViolation]:
    """Every pair of tuples that agree on a declared key attribute.

    Returns an empty list iff all declared keys hold.
    """
    schema = schema if schema is not None else db.schema
    violations = []
    for name in db.relation_names:
        if name == COM:
            continue
        if name not in schema:
            raise UnknownRelation(f"relation {name!r} is not in the schema")
        rel = schema[name]
        for attr in sorted(rel.key_attributes):
            groups = db.index(name, (attr - 1,))
            for key_value in sorted(groups, key=lambda k: value_sort_key(k[0])):
                tuples = groups[key_value]
                for i in range(len(tuples)):
                    for j in range(i + 1, len(tuples)):
                        violations.append(KeyViolation(name, attr, tuples[i], tuples[j]))
    return violations


# -- grounding ----------------------------------------------------------


def _is_var(term) -> bool:
    return getattr(term, "is_variable", False)


def compare(left: Value, op: str, right: Value) -> bool:
    if op == "=":
        return type(left) is type(right) and left == right
    if op == "!=":
        return not (type(left) is type(right) and left == right)
    if not (isinstance(left, int) and isinstance(right, int)):
        raise TypeError(f"comparison {op!r} needs two integers, got {left!r} and {right!r}")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown comparison operator {op!r}")


def _term_value(term, binding):
    return binding[term.name] if _is_var(term) else term.value


def atom_variables(atoms) -> List[str]:
    """Variables of ``atoms`` in order of first appearance."""
    seen: Dict[str, None] = {}
    for atom in atoms:
        for term in atom.terms:
            if _is_var(term):
                seen.setdefault(term.name)
    return list(seen)


def ground_conjunction(
    db: Database,
    relational_atoms: Sequence,
    comparison_atoms: Sequence = (),
    seed: Optional[Mapping[str, Value]] = None,
    order: Optional[Sequence[str]] = None,
) -> Iterator[Assignment]:
    """Yield every extension of ``seed`` satisfying all atoms in ``db``.

    Atoms are evaluated as a nested-loop join, smallest relation first, with a
    hash lookup on the positions already bound. Results come out sorted by the
    bound values, variables compared in ``order`` (default: seed variables,
    then first appearance in the atoms).
    """
    seed = dict(seed or {})
    for atom in relational_atoms:
        rel = db.schema[atom.relation] if atom.relation in db.schema else None
        if rel is None or atom.relation not in db:
            raise UnknownRelation(f"unknown relation {atom.relation!r}")
        if len(atom.terms) != rel.arity:
            raise ArityMismatch(
                f"atom {atom.relation} has {len(atom.terms)} terms, relation arity is {rel.arity}"
            )

    variables = list(seed) + [v for v in atom_variables(relational_atoms) if v not in seed]
    bindable = set(variables)
    for cmp_atom in comparison_atoms:
        for term in cmp_atom.terms:
            if _is_var(term) and term.name not in bindable:
                raise UnsafeVariable(
                    f"variable {term.name!r} appears only in a comparison atom"
                )
    if order is None:
        order = variables
    else:
        order = list(order) + [v for v in variables if v not in order]

    # cheapest relation first; original position breaks ties
    plan = sorted(
        range(len(relational_atoms)), key=lambda i: (len(db[relational_atoms[i].relation]), i)
    )
    atoms = [relational_atoms[i] for i in plan]

    # comparisons fire at the first depth where all their variables are bound
    bound = set(seed)
    ready: List[List] = [[] for _ in range(len(atoms) + 1)]
    pending = list(comparison_atoms)
    for depth in range(len(atoms) + 1):
        if depth > 0:
            bound.update(t.name for t in atoms[depth - 1].terms if _is_var(t))
        still = []
        for c in pending:
            if all(t.name in bound for t in c.terms if _is_var(t)):
                ready[depth].append(c)
            else:
                still.append(c)
        pending = still

    results: List[Assignment] = []

    def check(depth, binding):
        return all(compare(_term_value(c.left, binding), c.op, _term_value(c.right, binding)) for c in ready[depth])

    def search(depth, binding):
        if depth == len(atoms):
            results.append(dict(binding))
            return
        atom = atoms[depth]
        positions = []
        key = []
        free = []
        for pos, term in enumerate(atom.terms):
            if not _is_var(term):
                positions.append(pos)
                key.append(term.value)
            elif term.name in binding:
                positions.append(pos)
                key.append(binding[term.name])
            else:
                free.append((pos, term.name))
        if positions:
            candidates = db.index(atom.relation, tuple(positions)).get(tuple(key), ())
        else:
            candidates = db.sorted_tuples(atom.relation)
        for tup in candidates:
            # types must match exactly: 1 and True hash alike, 1 and "1" do not
            if any(type(tup[p]) is not type(k) for p, k in zip(positions, key)):
                continue
            new = {}
            ok = True
            for pos, name in free:
                val = tup[pos]
                prev = new.get(name)
                if prev is not None and not (type(prev) is type(val) and prev == val):
                    ok = False
                    break
                new[name] = val
            if not ok:
                continue
            binding.update(new)
            if check(depth + 1, binding):
                search(depth + 1, binding)
            for name in new:
                del binding[name]

    if check(0, seed):
        search(0, dict(seed))

    def sort_key(a):
        return tuple(value_sort_key(a[v]) for v in order if v in a)

    results.sort(key=sort_key)
    yield from results
