"""Equivalence relations as canonical partitions, and congruence machinery.

A Partition stores, for every carrier element, the least element of its
block; equality of partitions is then plain array equality.  Congruence
generation runs a union-find worklist interleaved with one-step operation
compatibility closure (basic translations of each newly merged pair).
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    Homomorphism,
    Limits,
    PreconditionError,
    ValidationError,
    _arg_grids,
)


class Partition:
    """An equivalence relation on 0..size-1, canonicalized by least-element
    representatives."""

    __slots__ = ("size", "rep")

    def __init__(self, labels) -> None:
        lab = np.ascontiguousarray(labels, dtype=np.int32).reshape(-1)
        n = lab.shape[0]
        if n == 0:
            raise ValidationError("partition on empty carrier")
        # canonicalize: representative = least element with the same label
        first = {}
        rep = np.empty(n, dtype=np.int32)
        for i in range(n):
            rep[i] = first.setdefault(int(lab[i]), i)
        self.size = n
        rep.setflags(write=False)
        self.rep = rep

    @staticmethod
    def diagonal(n: int) -> "Partition":
        return Partition(np.arange(n))

    @staticmethod
    def full(n: int) -> "Partition":
        return Partition(np.zeros(n, dtype=np.int32))

    @staticmethod
    def from_blocks(n: int, blocks) -> "Partition":
        lab = -np.ones(n, dtype=np.int32)
        for i, blk in enumerate(blocks):
            for x in blk:
                if x < 0 or x >= n:
                    raise ValidationError(f"block element {x} outside carrier 0..{n - 1}")
                if lab[x] != -1:
                    raise ValidationError(f"element {x} occurs in two blocks")
                lab[x] = i
        if (lab == -1).any():
            missing = int(np.argmax(lab == -1))
            raise ValidationError(f"element {missing} not covered by any block")
        return Partition(lab)

    @staticmethod
    def from_pairs(n: int, pairs) -> "Partition":
        """Least equivalence relation containing the given pairs."""
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise PreconditionError(f"pair ({a},{b}) outside carrier 0..{n - 1}")
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        return Partition([find(i) for i in range(n)])

    def same(self, a: int, b: int) -> bool:
        return self.rep[a] == self.rep[b]

    def block_of(self, x: int):
        return tuple(int(i) for i in np.flatnonzero(self.rep == self.rep[x]))

    def blocks(self):
        reps = np.unique(self.rep)
        return tuple(tuple(int(i) for i in np.flatnonzero(self.rep == r)) for r in reps)

    @property
    def num_blocks(self) -> int:
        return len(np.unique(self.rep))

    def leq(self, other: "Partition") -> bool:
        """Refinement order: self <= other iff every self-block sits inside an
        other-block."""
        if self.size != other.size:
            raise PreconditionError("partition sizes differ")
        return bool(np.array_equal(other.rep[self.rep], other.rep))

    def pairs(self):
        """All related ordered pairs (a, b) with a != b."""
        out = []
        for blk in self.blocks():
            for a in blk:
                for b in blk:
                    if a != b:
                        out.append((a, b))
        return out

    def generator_pairs(self):
        """A spanning set of pairs: each non-representative with its representative."""
        idx = np.arange(self.size)
        mask = self.rep != idx
        return [(int(self.rep[i]), int(i)) for i in np.flatnonzero(mask)]

    def matrix(self) -> np.ndarray:
        """Boolean relation matrix."""
        return self.rep[:, None] == self.rep[None, :]

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(self.rep, other.rep)

    def __hash__(self) -> int:
        return hash((self.size, self.rep.tobytes()))

    def __repr__(self) -> str:
        return "[" + ",".join(str(int(r)) for r in self.rep) + "]"


def meet(p: Partition, q: Partition) -> Partition:
    """Common refinement: related iff related in both."""
    if p.size != q.size:
        raise PreconditionError("partition sizes differ")
    return Partition(p.rep.astype(np.int64) * p.size + q.rep)


def is_congruence(alg: FiniteAlgebra, p: Partition) -> bool:
    """True iff every operation maps pointwise-related tuples to related results."""
    if p.size != alg.size:
        raise PreconditionError("partition size does not match the carrier")
    n = alg.size
    r = p.rep
    for op in alg.operations:
        k = op.arity
        if k == 0:
            continue
        view = op.view(n)
        grids = tuple(_arg_grids(n, k))
        # compare each tuple against the tuple of block representatives
        rep_args = tuple(r[g] for g in grids)
        if not np.array_equal(r[view[grids]], r[view[rep_args]]):
            return False
    return True


def congruence_closure(alg: FiniteAlgebra, pairs,
                       limits: Limits = DEFAULT_LIMITS) -> Partition:
    """Least congruence of `alg` containing the given pairs.

    Union-find worklist: every effective merge is pushed and its one-step
    images under all basic translations (each operation, each argument
    position, all choices of the remaining arguments) are merged in turn.
    """
    n = alg.size
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    views = [(op.view(n), op.arity) for op in alg.operations if op.arity >= 1]
    stack = []
    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise PreconditionError(f"pair ({a},{b}) outside carrier 0..{n - 1}")
        stack.append((int(a), int(b)))
    while stack:
        a, b = stack.pop()
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        parent[max(ra, rb)] = min(ra, rb)
        for view, k in views:
            for pos in range(k):
                sl_a = np.moveaxis(view, pos, 0)[a].reshape(-1)
                sl_b = np.moveaxis(view, pos, 0)[b].reshape(-1)
                diff = np.flatnonzero(sl_a != sl_b)
                for i in diff:
                    u, v = int(sl_a[i]), int(sl_b[i])
                    if find(u) != find(v):
                        stack.append((u, v))
    return Partition([find(i) for i in range(n)])


def join(alg: FiniteAlgebra, p: Partition, q: Partition) -> Partition:
    """Join of two congruences: the transitive closure of their union.

    Over a Mal'tsev algebra this equals the relational composite p∘q; that
    equality is asserted, so non-permuting inputs fail loudly.
    """
    if p.size != q.size or p.size != alg.size:
        raise PreconditionError("size mismatch")
    for part in (p, q):
        if not is_congruence(alg, part):
            raise PreconditionError("join arguments must be congruences")
    j = Partition.from_pairs(alg.size, p.generator_pairs() + q.generator_pairs())
    comp = (p.matrix() @ q.matrix()) > 0
    if not np.array_equal(comp, j.matrix()):
        a, b = (int(v) for v in np.argwhere(comp != j.matrix())[0])
        raise ValidationError(
            f"congruences do not permute at ({a},{b}); algebra is not Mal'tsev")
    return j


def kernel_pair(f: Homomorphism) -> Partition:
    """The congruence {(x, y) : f(x) = f(y)} on the source."""
    return Partition(f.map)


def direct_image(f: Homomorphism, r: Partition) -> Partition:
    """Image of a source congruence along a surjective homomorphism.

    The raw pair image is asserted to be transitive already (true over
    Mal'tsev algebras); the least equivalence containing it is returned.
    """
    if r.size != f.source.size:
        raise PreconditionError("relation size does not match the source")
    if not f.is_surjective():
        raise PreconditionError("direct image requires a surjective homomorphism")
    m = f.target.size
    raw = np.zeros((m, m), dtype=bool)
    for blk in r.blocks():
        imgs = np.unique(f.map[list(blk)])
        raw[np.ix_(imgs, imgs)] = True
    np.fill_diagonal(raw, True)
    closed = (raw.astype(np.int32) @ raw.astype(np.int32)) > 0
    if not np.array_equal(raw, closed):
        a, b = (int(v) for v in np.argwhere(closed & ~raw)[0])
        raise ValidationError(
            f"raw image relation not transitive at ({a},{b}); algebra is not Mal'tsev")
    parent = Partition.from_pairs(m, [tuple(pr) for pr in np.argwhere(raw)])
    return parent


def inverse_image(f: Homomorphism, r: Partition) -> Partition:
    """Pullback partition: x ~ y iff f(x) related to f(y) on the target."""
    if r.size != f.target.size:
        raise PreconditionError("relation size does not match the target")
    return Partition(r.rep[f.map])


def congruence_lattice(alg: FiniteAlgebra,
                       limits: Limits = DEFAULT_LIMITS) -> list[Partition]:
    """All congruences, as the join-closure of the principal congruences.

    Sorted coarsening-last (block count descending, then representative
    array), so the diagonal comes first and the full relation last.
    """
    n = alg.size
    if n > limits.lattice_max:
        raise PreconditionError(
            f"carrier size {n} exceeds lattice enumeration limit {limits.lattice_max}")
    found = {Partition.diagonal(n)}
    principals = []
    for a in range(n):
        for b in range(a + 1, n):
            cg = congruence_closure(alg, [(a, b)], limits)
            if cg not in found:
                found.add(cg)
                principals.append(cg)
    frontier = list(principals)
    while frontier:
        fresh = []
        for p in frontier:
            for q in list(found):
                j = Partition.from_pairs(n, p.generator_pairs() + q.generator_pairs())
                if j not in found:
                    found.add(j)
                    fresh.append(j)
        frontier = fresh
    return sorted(found, key=lambda p: (-p.num_blocks, tuple(int(x) for x in p.rep)))
