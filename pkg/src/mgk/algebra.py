"""Finite algebras with a designated Mal'tsev operation.

Carriers are dense integer ranges 0..n-1 and every operation is stored as a
flat row-major table, so all structural computations reduce to numpy index
arithmetic.  Values are immutable after construction; every function here is
pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np


class ParseError(Exception):
    """Malformed input document or unresolved reference."""


class ValidationError(Exception):
    """An object violates its structural invariants; message carries a witness."""


class PreconditionError(Exception):
    """An operation was called outside its stated precondition."""


class InternalDisagreementError(Exception):
    """Two redundant computations of the same fact disagree (a bug, not bad input)."""


@dataclass(frozen=True)
class Limits:
    """Size guards for the exhaustive computations.

    max_carrier bounds any algebra whose operation tables are materialized,
    oracle_max bounds the lattice-filter commutator oracle, lattice_max bounds
    congruence lattice enumeration, quad_members_max bounds materialized
    quadruple relations, and closure_work_max bounds the vectorized work of
    the double-relation fixpoint (index operations, roughly).
    """

    max_carrier: int = 64
    oracle_max: int = 8
    lattice_max: int = 16
    quad_members_max: int = 400_000
    closure_work_max: int = 20_000_000_000


DEFAULT_LIMITS = Limits()


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Operation:
    """A named finitary operation given by its flat row-major value table."""

    __slots__ = ("name", "arity", "table")

    def __init__(self, name: str, arity: int, table) -> None:
        if arity < 0:
            raise ValidationError(f"operation {name!r}: negative arity {arity}")
        self.name = str(name)
        self.arity = int(arity)
        self.table = _frozen(np.ascontiguousarray(table, dtype=np.int32).reshape(-1))

    def view(self, size: int) -> np.ndarray:
        """The table reshaped to one axis per argument."""
        return self.table.reshape((size,) * self.arity)

    def __repr__(self) -> str:
        return f"Operation({self.name!r}, arity={self.arity})"


class FiniteAlgebra:
    """A finite carrier 0..size-1 with named operations and a designated
    ternary Mal'tsev operation (stored as a basic operation of the signature)."""

    __slots__ = ("size", "operations", "maltsev_op", "name", "_cache")

    def __init__(self, size: int, operations, maltsev_op: str, name: str = "") -> None:
        if size <= 0:
            raise ValidationError(f"carrier size must be positive, got {size}")
        self.size = int(size)
        ops = []
        for entry in operations:
            if isinstance(entry, Operation):
                ops.append(entry)
            else:
                nm, ar, tab = entry
                ops.append(Operation(nm, ar, tab))
        self.operations = tuple(ops)
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate operation names in signature: {sorted(names)}")
        self.maltsev_op = str(maltsev_op)
        self.name = str(name)
        self._cache = {}
        by_name = {op.name: op for op in self.operations}
        if self.maltsev_op not in by_name:
            raise ValidationError(f"designated Mal'tsev operation {self.maltsev_op!r} not in signature")
        self._cache["by_name"] = by_name

    def op(self, name: str) -> Operation:
        try:
            return self._cache["by_name"][name]
        except KeyError:
            raise KeyError(f"algebra {self.name or '?'} has no operation {name!r}") from None

    def has_op(self, name: str) -> bool:
        return name in self._cache["by_name"]

    def apply(self, name: str, *args: int) -> int:
        op = self.op(name)
        if len(args) != op.arity:
            raise PreconditionError(f"{name} expects {op.arity} arguments, got {len(args)}")
        idx = 0
        for a in args:
            idx = idx * self.size + int(a)
        return int(op.table[idx])

    def signature(self):
        """The (name, arity) pairs, sorted by name."""
        return tuple(sorted((op.name, op.arity) for op in self.operations))

    @property
    def maltsev_table(self) -> np.ndarray:
        return self.op(self.maltsev_op).view(self.size)

    def elements(self) -> range:
        return range(self.size)

    def __repr__(self) -> str:
        sig = ",".join(f"{n}/{a}" for n, a in self.signature())
        return f"FiniteAlgebra({self.name or '?'}, size={self.size}, ops=[{sig}])"


class Homomorphism:
    """A total map between algebra carriers, intended to preserve all operations."""

    __slots__ = ("source", "target", "map")

    def __init__(self, source: FiniteAlgebra, target: FiniteAlgebra, mapping) -> None:
        self.source = source
        self.target = target
        self.map = _frozen(np.ascontiguousarray(mapping, dtype=np.int32).reshape(-1))
        if self.map.shape[0] != source.size:
            raise ValidationError(
                f"map has length {self.map.shape[0]}, source carrier has size {source.size}")
        if self.map.size and (self.map.min() < 0 or self.map.max() >= target.size):
            bad = int(np.argmax((self.map < 0) | (self.map >= target.size)))
            raise ValidationError(f"map sends {bad} to {int(self.map[bad])}, outside target carrier")

    def __call__(self, x: int) -> int:
        return int(self.map[x])

    def is_surjective(self) -> bool:
        return len(np.unique(self.map)) == self.target.size

    def compose(self, first: "Homomorphism") -> "Homomorphism":
        """self after first (self ∘ first)."""
        if first.target is not self.source and first.target.size != self.source.size:
            raise PreconditionError("composition mismatch")
        return Homomorphism(first.source, self.target, self.map[first.map])

    @staticmethod
    def identity(alg: FiniteAlgebra) -> "Homomorphism":
        return Homomorphism(alg, alg, np.arange(alg.size, dtype=np.int32))

    def __repr__(self) -> str:
        return f"Homomorphism({self.source.name or '?'} -> {self.target.name or '?'}, {self.map.tolist()})"


class QuadrupleRelation:
    """A set of quadruples (a, b, d, c) over a carrier, read as the matrix with
    top row (a, b) and bottom row (d, c).  Stored sorted and deduplicated."""

    __slots__ = ("base", "members")

    def __init__(self, base: FiniteAlgebra, members) -> None:
        self.base = base
        self.members = tuple(sorted(set((int(a), int(b), int(d), int(c)) for a, b, d, c in members)))
        n = base.size
        for q in self.members:
            if any(x < 0 or x >= n for x in q):
                raise ValidationError(f"quadruple {q} outside carrier 0..{n - 1}")

    def __contains__(self, quad) -> bool:
        a, b, d, c = quad
        import bisect
        key = (int(a), int(b), int(d), int(c))
        i = bisect.bisect_left(self.members, key)
        return i < len(self.members) and self.members[i] == key

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __eq__(self, other) -> bool:
        return (isinstance(other, QuadrupleRelation)
                and self.base.size == other.base.size
                and self.members == other.members)

    def __hash__(self) -> int:
        return hash((self.base.size, self.members))

    def __repr__(self) -> str:
        return f"QuadrupleRelation(n={self.base.size}, members={len(self.members)})"


def _arg_grids(size: int, arity: int):
    """Index grids enumerating all argument tuples of the given arity."""
    if arity == 0:
        return ()
    return np.indices((size,) * arity)


def validate_algebra(alg: FiniteAlgebra) -> list[str]:
    """Exhaustively check all structural invariants; return a list of violations.

    An empty report means: every table is total with entries in the carrier,
    the designated operation is ternary, and both Mal'tsev laws
    p(x,y,y) = x and p(x,x,y) = y hold for all x, y.
    """
    report = []
    n = alg.size
    for op in alg.operations:
        expected = n ** op.arity
        if op.table.shape[0] != expected:
            report.append(
                f"operation {op.name!r}: table has {op.table.shape[0]} entries, expected {expected}")
            continue
        if op.table.size and (op.table.min() < 0 or op.table.max() >= n):
            flat = int(np.argmax((op.table < 0) | (op.table >= n)))
            args = np.unravel_index(flat, (n,) * op.arity) if op.arity else ()
            report.append(
                f"operation {op.name!r}: entry at {tuple(int(a) for a in args)} is "
                f"{int(op.table[flat])}, out of range 0..{n - 1}")
    if report:
        return report

    p = alg.op(alg.maltsev_op)
    if p.arity != 3:
        report.append(f"designated Mal'tsev operation {alg.maltsev_op!r} has arity {p.arity}, expected 3")
        return report
    view = p.view(n)
    idx = np.arange(n)
    # p(x, y, y) = x for all x, y
    left = view[:, idx, idx]
    bad = np.argwhere(left != idx[:, None])
    if bad.size:
        x, y = (int(v) for v in bad[0])
        report.append(f"{alg.maltsev_op}({x},{y},{y}) = {int(left[x, y])} != {x}")
    # p(x, x, y) = y for all x, y
    right = view[idx, idx, :]
    bad = np.argwhere(right != idx[None, :])
    if bad.size:
        x, y = (int(v) for v in bad[0])
        report.append(f"{alg.maltsev_op}({x},{x},{y}) = {int(right[x, y])} != {y}")
    return report


def is_valid(alg: FiniteAlgebra) -> bool:
    """validate_algebra with a memoized empty-report check."""
    cached = alg._cache.get("valid")
    if cached is None:
        cached = not validate_algebra(alg)
        alg._cache["valid"] = cached
    return cached


def require_valid(alg: FiniteAlgebra) -> None:
    if not is_valid(alg):
        raise PreconditionError(
            f"algebra {alg.name or '?'} fails validation: {validate_algebra(alg)[0]}")


def product_algebra(a: FiniteAlgebra, b: FiniteAlgebra,
                    limits: Limits = DEFAULT_LIMITS):
    """Componentwise product algebra on pairs, encoded as x*b.size + y.

    Returns (product, proj1, proj2).  Signatures must match exactly by
    (name, arity).
    """
    if a.signature() != b.signature():
        raise PreconditionError(
            f"signature mismatch: {a.signature()} vs {b.signature()}")
    if a.maltsev_op != b.maltsev_op:
        raise PreconditionError("factors designate different Mal'tsev operations")
    n = a.size * b.size
    if n > limits.max_carrier:
        raise PreconditionError(f"product carrier {n} exceeds limit {limits.max_carrier}")
    ops = []
    for op_a in a.operations:
        op_b = b.op(op_a.name)
        k = op_a.arity
        if k == 0:
            table = np.array([op_a.table[0] * b.size + op_b.table[0]])
        else:
            grids = _arg_grids(n, k)
            xs = tuple(g // b.size for g in grids)
            ys = tuple(g % b.size for g in grids)
            table = op_a.view(a.size)[xs] * b.size + op_b.view(b.size)[ys]
        ops.append(Operation(op_a.name, k, table))
    prod = FiniteAlgebra(n, ops, a.maltsev_op, name=f"({a.name}x{b.name})")
    idx = np.arange(n)
    p1 = Homomorphism(prod, a, idx // b.size)
    p2 = Homomorphism(prod, b, idx % b.size)
    return prod, p1, p2


def quotient_algebra(alg: FiniteAlgebra, part, limits: Limits = DEFAULT_LIMITS):
    """Quotient by a congruence: carrier = blocks ordered by least element.

    Returns (quotient, q) with q the canonical projection.  Raises
    PreconditionError when `part` is not a congruence of `alg`.
    """
    from . import congruence as _c
    if part.size != alg.size:
        raise PreconditionError("partition size does not match the carrier")
    if not _c.is_congruence(alg, part):
        raise PreconditionError("partition is not a congruence; quotient undefined")
    reps = np.unique(part.rep)
    m = reps.shape[0]
    block_of = np.zeros(alg.size, dtype=np.int32)
    block_of[reps] = np.arange(m, dtype=np.int32)
    q_map = block_of[part.rep]
    ops = []
    for op in alg.operations:
        k = op.arity
        if k == 0:
            table = q_map[op.table]
        else:
            grids = tuple(reps[g] for g in _arg_grids(m, k))
            table = q_map[op.view(alg.size)[grids]]
        ops.append(Operation(op.name, k, table))
    quot = FiniteAlgebra(m, ops, alg.maltsev_op, name=f"{alg.name}/~" if alg.name else "quotient")
    return quot, Homomorphism(alg, quot, q_map)


def check_homomorphism(f: Homomorphism) -> str:
    """Classify a map: 'not-hom', 'hom', or 'surjective-hom'."""
    a, b = f.source, f.target
    if a.signature() != b.signature():
        return "not-hom"
    for op_a in a.operations:
        op_b = b.op(op_a.name)
        k = op_a.arity
        if k == 0:
            ok = f.map[op_a.table[0]] == op_b.table[0]
        else:
            grids = tuple(_arg_grids(a.size, k))
            mapped = tuple(f.map[g] for g in grids)
            ok = np.array_equal(f.map[op_a.view(a.size)[grids]], op_b.view(b.size)[mapped])
        if not ok:
            return "not-hom"
    return "surjective-hom" if f.is_surjective() else "hom"


def subalgebra_closure(alg: FiniteAlgebra, seed) -> frozenset:
    """Smallest subset containing `seed` and closed under every operation."""
    n = alg.size
    members = np.zeros(n, dtype=bool)
    for s in seed:
        if s < 0 or s >= n:
            raise PreconditionError(f"seed element {s} outside carrier 0..{n - 1}")
        members[s] = True
    for op in alg.operations:
        if op.arity == 0:
            members[op.table[0]] = True
    changed = True
    while changed:
        changed = False
        cur = np.flatnonzero(members)
        if cur.size == 0:
            break
        for op in alg.operations:
            k = op.arity
            if k == 0:
                continue
            grids = np.meshgrid(*([cur] * k), indexing="ij") if k > 1 else [cur]
            vals = np.unique(op.view(n)[tuple(grids)])
            fresh = vals[~members[vals]]
            if fresh.size:
                members[fresh] = True
                changed = True
    return frozenset(int(x) for x in np.flatnonzero(members))


def subalgebra(alg: FiniteAlgebra, subset, name: str = "",
               limits: Limits = DEFAULT_LIMITS):
    """Reindex a closed subset as a dense algebra.

    Returns (sub, elems) where elems[i] is the original carrier element of
    the new element i.  Raises if the subset is not closed.
    """
    elems = np.array(sorted(set(int(x) for x in subset)), dtype=np.int32)
    m = elems.shape[0]
    if m == 0:
        raise PreconditionError("subalgebra carrier must be nonempty")
    if m > limits.max_carrier:
        raise PreconditionError(f"subalgebra carrier {m} exceeds limit {limits.max_carrier}")
    back = -np.ones(alg.size, dtype=np.int32)
    back[elems] = np.arange(m, dtype=np.int32)
    ops = []
    for op in alg.operations:
        k = op.arity
        if k == 0:
            table = back[op.table]
        else:
            grids = tuple(elems[g] for g in _arg_grids(m, k))
            table = back[op.view(alg.size)[grids]]
        if (table < 0).any():
            flat = int(np.argmax(table.reshape(-1) < 0))
            args = np.unravel_index(flat, (m,) * k) if k else ()
            witness = tuple(int(elems[a]) for a in args)
            raise PreconditionError(
                f"subset not closed: {op.name}{witness} lands outside it")
        ops.append(Operation(op.name, k, table))
    sub = FiniteAlgebra(m, ops, alg.maltsev_op, name=name or f"{alg.name}|sub")
    return sub, elems


def pair_algebra(alg: FiniteAlgebra, pairs, name: str = "",
                 limits: Limits = DEFAULT_LIMITS):
    """The subalgebra of alg x alg on an explicit list of pairs.

    Used to realize a relation (e.g. a kernel pair) as an algebra of its own.
    Returns (sub, pairs_array) with pairs_array of shape (m, 2) sorted
    lexicographically.
    """
    pr = np.array(sorted(set((int(x), int(y)) for x, y in pairs)), dtype=np.int32)
    m = pr.shape[0]
    if m > limits.max_carrier:
        raise PreconditionError(f"pair carrier {m} exceeds limit {limits.max_carrier}")
    n = alg.size
    back = -np.ones((n, n), dtype=np.int32)
    back[pr[:, 0], pr[:, 1]] = np.arange(m, dtype=np.int32)
    ops = []
    for op in alg.operations:
        k = op.arity
        view = op.view(n)
        if k == 0:
            table = back[op.table[0], op.table[0]]
            if table < 0:
                raise PreconditionError(f"pair set not closed: constant {op.name} missing")
            table = np.array([table])
        else:
            grids = _arg_grids(m, k)
            xs = tuple(pr[g, 0] for g in grids)
            ys = tuple(pr[g, 1] for g in grids)
            table = back[view[xs], view[ys]]
            if (table < 0).any():
                flat = int(np.argmax(table.reshape(-1) < 0))
                args = np.unravel_index(flat, (m,) * k)
                witness = tuple((int(pr[a, 0]), int(pr[a, 1])) for a in args)
                raise PreconditionError(
                    f"pair set not closed under {op.name} at {witness}")
        ops.append(Operation(op.name, k, table))
    sub = FiniteAlgebra(m, ops, alg.maltsev_op, name=name or f"{alg.name}^pairs")
    return sub, pr


def brute_force_generated_subset(alg: FiniteAlgebra, tuple_width: int, seeds) -> set:
    """Close a set of `tuple_width`-tuples under the componentwise operations.

    Reference-oracle path: works on the power algebra alg^tuple_width without
    materializing its tables.  Exponential; intended for small carriers only.
    """
    members = set(tuple(int(x) for x in s) for s in seeds)
    tables = {op.name: op.view(alg.size) for op in alg.operations}
    for op in alg.operations:
        if op.arity == 0:
            members.add((int(op.table[0]),) * tuple_width)
    frontier = list(members)
    while frontier:
        new = []
        cur = list(members)
        for op in alg.operations:
            k = op.arity
            if k == 0:
                continue
            view = tables[op.name]
            for combo in iproduct(*([cur] * (k - 1))):
                for pos in range(k):
                    for f in frontier:
                        args = list(combo[:pos]) + [f] + list(combo[pos:])
                        val = tuple(int(view[tuple(a[i] for a in args)])
                                    for i in range(tuple_width))
                        if val not in members:
                            members.add(val)
                            new.append(val)
        frontier = new
    return members
