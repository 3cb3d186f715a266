"""Concrete inputs: finite groups, Lie algebras over prime fields, reflexive
graphs over a fixed base, and precrossed modules with their Peiffer commutator.

Group elements follow documented orderings (see GROUP_CATALOG); congruences
of groups correspond to normal subgroups through coset partitions, and
congruences of the Lie algebras correspond to ideals, which is what the
bridge helpers below mediate.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    Homomorphism,
    Limits,
    PreconditionError,
    ValidationError,
    check_homomorphism,
)
from .commutator import centralizes, commutator
from .congruence import Partition, is_congruence, kernel_pair
from .galois import (
    DoubleExtensionSquare,
    TwoEqMorphism,
    TwoEqObject,
    is_central_extension,
    is_double_central,
)


# ---------------------------------------------------------------------------
# groups


def _group_ops_from_table(table: np.ndarray, name: str):
    """Derive identity, inverses, and the division term from a multiplication
    table, validating the group laws with witnesses."""
    n = table.shape[0]
    idx = np.arange(n)
    identity = None
    for e in range(n):
        if np.array_equal(table[e], idx) and np.array_equal(table[:, e], idx):
            identity = e
            break
    if identity is None:
        raise ValidationError(f"group {name!r}: no identity element")
    inv = -np.ones(n, dtype=np.int64)
    for a in range(n):
        hits = np.flatnonzero((table[a] == identity) & (table[:, a] == identity))
        if hits.shape[0] != 1:
            raise ValidationError(f"group {name!r}: element {a} lacks a unique inverse")
        inv[a] = hits[0]
    assoc = table[table[:, :, None], idx[None, None, :]] == table[idx[:, None, None], table]
    if not assoc.all():
        a, b, c = (int(v) for v in np.argwhere(~assoc)[0])
        raise ValidationError(
            f"group {name!r}: associativity fails at ({a},{b},{c}): "
            f"({a}*{b})*{c} = {int(table[table[a, b], c])} but "
            f"{a}*({b}*{c}) = {int(table[a, table[b, c]])}")
    p = table[table[idx[:, None, None], inv[idx][None, :, None]], idx[None, None, :]]
    return identity, inv, p


def group_algebra(table, name: str = "") -> FiniteAlgebra:
    """A group as a Mal'tsev algebra: mul, inv, e, and p(x,y,z) = x * y^-1 * z."""
    table = np.asarray(table, dtype=np.int64)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise ValidationError("multiplication table must be square")
    identity, inv, p = _group_ops_from_table(table, name)
    return FiniteAlgebra(
        table.shape[0],
        [("mul", 2, table), ("inv", 1, inv), ("e", 0, [identity]), ("p", 3, p)],
        "p",
        name=name,
    )


def _cyclic_table(n):
    idx = np.arange(n)
    return (idx[:, None] + idx[None, :]) % n


def _direct_product_table(ta, tb):
    na, nb = ta.shape[0], tb.shape[0]
    out = np.zeros((na * nb, na * nb), dtype=np.int64)
    for a1, b1, a2, b2 in iproduct(range(na), range(nb), range(na), range(nb)):
        out[a1 * nb + b1, a2 * nb + b2] = ta[a1, a2] * nb + tb[b1, b2]
    return out


def _perm_group_table(perms):
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    out = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(perms):
        for j, b in enumerate(perms):
            out[i, j] = index[tuple(a[b[k]] for k in range(len(a)))]
    return out


def _s3_table():
    # evens first: 0=id, 1=(0 1 2), 2=(0 2 1); odds: 3=(0 1), 4=(0 2), 5=(1 2)
    perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (1, 0, 2), (2, 1, 0), (0, 2, 1)]
    return _perm_group_table(perms)


def _d4_table():
    # 0..3 = rotations r^k, 4..7 = reflections r^k s, with s r = r^-1 s
    def mul(x, y):
        rx, sx = x % 4, x // 4
        ry, sy = y % 4, y // 4
        return (((rx + ry) if sx == 0 else (rx - ry)) % 4) + 4 * ((sx + sy) % 2)
    return np.array([[mul(x, y) for y in range(8)] for x in range(8)], dtype=np.int64)


def _q8_table():
    # 0..7 = 1, -1, i, -i, j, -j, k, -k
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    base = {
        ("1", "1"): "1", ("i", "i"): "-1", ("j", "j"): "-1", ("k", "k"): "-1",
        ("i", "j"): "k", ("j", "k"): "i", ("k", "i"): "j",
        ("j", "i"): "-k", ("k", "j"): "-i", ("i", "k"): "-j",
    }

    def mul(a, b):
        sign = 1
        if a.startswith("-"):
            sign, a = -sign, a[1:]
        if b.startswith("-"):
            sign, b = -sign, b[1:]
        if a == "1":
            out = b
        elif b == "1":
            out = a
        else:
            out = base[(a, b)]
        if out.startswith("-"):
            sign, out = -sign, out[1:]
        return out if sign == 1 else "-" + out

    return np.array([[names.index(mul(x, y)) for y in names] for x in names], dtype=np.int64)


def _a4_table():
    perms = [p for p in iproduct(range(4), repeat=4) if sorted(p) == [0, 1, 2, 3]]
    even = []
    for p in perms:
        inv_count = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
        if inv_count % 2 == 0:
            even.append(p)
    return _perm_group_table(even)


GROUP_CATALOG = {
    "C2": lambda: _cyclic_table(2),
    "C3": lambda: _cyclic_table(3),
    "C4": lambda: _cyclic_table(4),
    "V4": lambda: _direct_product_table(_cyclic_table(2), _cyclic_table(2)),
    "C6": lambda: _cyclic_table(6),
    "S3": _s3_table,
    "C8": lambda: _cyclic_table(8),
    "D4": _d4_table,
    "Q8": _q8_table,
    "C2xC4": lambda: _direct_product_table(_cyclic_table(2), _cyclic_table(4)),
    "A4": _a4_table,
}

GROUP_ALIASES = {"Z2": "C2", "Z3": "C3", "Z4": "C4", "Z6": "C6", "Z8": "C8",
                 "Z2xZ2": "V4", "Z2xZ4": "C2xC4"}


def build_group(spec) -> FiniteAlgebra:
    """A catalog group by name, or a group from an explicit table."""
    if isinstance(spec, str):
        key = GROUP_ALIASES.get(spec, spec)
        if key not in GROUP_CATALOG:
            raise PreconditionError(
                f"unknown catalog group {spec!r}; have {sorted(GROUP_CATALOG)}")
        return group_algebra(GROUP_CATALOG[key](), name=key)
    return group_algebra(spec, name="G")


def group_identity(g: FiniteAlgebra) -> int:
    return int(g.op("e").table[0])


def subgroup_closure(g: FiniteAlgebra, seed) -> frozenset:
    mul = g.op("mul").view(g.size)
    inv = g.op("inv").table
    members = {group_identity(g)} | {int(x) for x in seed}
    frontier = list(members)
    while frontier:
        new = []
        for a in frontier:
            for b in list(members):
                for c in (int(mul[a, b]), int(mul[b, a]), int(inv[a])):
                    if c not in members:
                        members.add(c)
                        new.append(c)
        frontier = new
    return frozenset(members)


def is_normal_subgroup(g: FiniteAlgebra, subset) -> bool:
    sub = set(int(x) for x in subset)
    if sub != set(subgroup_closure(g, sub)):
        return False
    mul = g.op("mul").view(g.size)
    inv = g.op("inv").table
    return all(int(mul[mul[x, n], inv[x]]) in sub
               for x in range(g.size) for n in sub)


def normal_subgroup_to_partition(g: FiniteAlgebra, subset) -> Partition:
    """Coset partition of a normal subgroup."""
    if not is_normal_subgroup(g, subset):
        raise PreconditionError(f"{sorted(set(subset))} is not a normal subgroup")
    mul = g.op("mul").view(g.size)
    labels = -np.ones(g.size, dtype=np.int64)
    nxt = 0
    for x in range(g.size):
        if labels[x] == -1:
            for n in subset:
                labels[int(mul[x, n])] = nxt
            nxt += 1
    return Partition(labels)


def partition_to_normal_subgroup(g: FiniteAlgebra, p: Partition) -> frozenset:
    """The block of the identity; inverse of the coset construction."""
    if not is_congruence(g, p):
        raise PreconditionError("partition is not a congruence of the group")
    return frozenset(p.block_of(group_identity(g)))


def group_commutator_subgroup(g: FiniteAlgebra, h_set, k_set) -> frozenset:
    """Subgroup generated by the commutators [h, k]; test oracle only."""
    for s in (h_set, k_set):
        if not is_normal_subgroup(g, s):
            raise PreconditionError(f"{sorted(set(s))} is not a normal subgroup")
    mul = g.op("mul").view(g.size)
    inv = g.op("inv").table
    gens = {int(mul[mul[inv[h], inv[k]], mul[h, k]]) for h in h_set for k in k_set}
    return subgroup_closure(g, gens)


def group_center(g: FiniteAlgebra) -> frozenset:
    mul = g.op("mul").view(g.size)
    return frozenset(int(z) for z in range(g.size)
                     if np.array_equal(mul[z], mul[:, z]))


# ---------------------------------------------------------------------------
# Lie algebras over a prime field


@dataclass(frozen=True)
class LieAlgebraFp:
    """A finite-dimensional Lie algebra over F_p, encoded on 0..p^d-1 with
    little-endian base-p digits (basis vector e_i is p**i)."""

    prime: int
    dim: int
    constants: np.ndarray       # (d, d, d) bracket structure constants
    alg: FiniteAlgebra

    @property
    def size(self) -> int:
        return self.alg.size

    def digits(self) -> np.ndarray:
        n, p, d = self.size, self.prime, self.dim
        out = np.zeros((n, d), dtype=np.int64)
        vals = np.arange(n)
        for i in range(d):
            out[:, i] = vals % p
            vals = vals // p
        return out

    def encode(self, vec) -> int:
        return int(sum((int(v) % self.prime) * self.prime ** i for i, v in enumerate(vec)))

    def bracket(self, x: int, y: int) -> int:
        return self.alg.apply("bracket", x, y)

    def add(self, x: int, y: int) -> int:
        return self.alg.apply("add", x, y)


def build_lie_algebra(prime: int, dim: int, brackets,
                      name: str = "", limits: Limits = DEFAULT_LIMITS) -> LieAlgebraFp:
    """Construct a Lie algebra from structure constants.

    `brackets` maps basis index pairs (i, j) with i < j to coefficient vectors
    of length `dim`; antisymmetry fills the rest and the Jacobi identity is
    checked exhaustively on basis triples.
    """
    if prime < 2 or any(prime % k == 0 for k in range(2, prime)):
        raise PreconditionError(f"{prime} is not prime")
    n = prime ** dim
    if n > limits.max_carrier:
        raise PreconditionError(f"carrier {n} exceeds limit {limits.max_carrier}")
    const = np.zeros((dim, dim, dim), dtype=np.int64)
    for (i, j), vec in dict(brackets).items():
        if not (0 <= i < dim and 0 <= j < dim):
            raise PreconditionError(f"bracket index ({i},{j}) out of range")
        if i == j and any(int(v) % prime for v in vec):
            raise ValidationError(f"[e{i},e{i}] must vanish")
        const[i, j] = [int(v) % prime for v in vec]
        const[j, i] = [(-int(v)) % prime for v in vec]
    digits = np.zeros((n, dim), dtype=np.int64)
    vals = np.arange(n)
    for i in range(dim):
        digits[:, i] = vals % prime
        vals = vals // prime
    powers = prime ** np.arange(dim)

    def enc(mat):
        return (mat % prime) @ powers

    idx = np.arange(n)
    add = enc(digits[:, None, :] + digits[None, :, :])
    neg = enc(-digits)
    brk = enc(np.einsum("xi,yj,ijk->xyk", digits, digits, const))
    p_tab = enc(digits[:, None, None, :] - digits[None, :, None, :] + digits[None, None, :, :])
    ops = [("add", 2, add), ("neg", 1, neg), ("zero", 0, [0]),
           ("bracket", 2, brk), ("p", 3, p_tab)]
    for k in range(1, prime):
        ops.append((f"scalar{k}", 1, enc(k * digits)))
    alg = FiniteAlgebra(n, ops, "p", name=name or f"Lie(p{prime},d{dim})")
    lie = LieAlgebraFp(prime, dim, const, alg)
    # antisymmetry in full, Jacobi on basis triples
    bt = alg.op("bracket").view(n)
    if not np.array_equal(bt, enc(-np.einsum("yi,xj,ijk->xyk", digits, digits, const))):
        raise ValidationError("bracket is not antisymmetric")
    if (np.diagonal(bt) != 0).any():
        raise ValidationError("[x,x] != 0 for some x")
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                ei, ej, ek = int(powers[i]), int(powers[j]), int(powers[k])
                total = 0
                for a, b, c in ((ei, ej, ek), (ej, ek, ei), (ek, ei, ej)):
                    total = int(add[total, int(bt[a, int(bt[b, c])])])
                if total != 0:
                    raise ValidationError(
                        f"Jacobi identity fails on basis triple ({i},{j},{k})")
    return lie


def subspace_span(lie: LieAlgebraFp, vectors) -> frozenset:
    add = lie.alg.op("add").view(lie.size)
    members = {0}
    frontier = [0]
    gens = [int(v) for v in vectors]
    for k in range(2, lie.prime):
        gens += [lie.alg.apply(f"scalar{k}", v) for v in list(gens)]
    while frontier:
        new = []
        for a in frontier:
            for v in gens:
                c = int(add[a, v])
                if c not in members:
                    members.add(c)
                    new.append(c)
        frontier = new
    return frozenset(members)


def is_ideal(lie: LieAlgebraFp, subset) -> bool:
    sub = set(int(x) for x in subset)
    if sub != set(subspace_span(lie, sub)):
        return False
    bt = lie.alg.op("bracket").view(lie.size)
    return all(int(bt[k, x]) in sub for k in sub for x in range(lie.size))


def ideal_to_partition(lie: LieAlgebraFp, subset) -> Partition:
    """Coset partition of an ideal."""
    if not is_ideal(lie, subset):
        raise PreconditionError(f"{sorted(set(subset))} is not an ideal")
    add = lie.alg.op("add").view(lie.size)
    labels = -np.ones(lie.size, dtype=np.int64)
    nxt = 0
    for x in range(lie.size):
        if labels[x] == -1:
            for v in subset:
                labels[int(add[x, v])] = nxt
            nxt += 1
    return Partition(labels)


def partition_to_ideal(lie: LieAlgebraFp, p: Partition) -> frozenset:
    if not is_congruence(lie.alg, p):
        raise PreconditionError("partition is not a congruence of the Lie algebra")
    return frozenset(p.block_of(0))


# ---------------------------------------------------------------------------
# reflexive graphs over a fixed base


@dataclass(frozen=True)
class ReflexiveGraphOverB:
    """Arrows x1 over objects x0 with domain d, codomain c, and identities i:
    d∘i = c∘i = id."""

    x1: FiniteAlgebra
    x0: FiniteAlgebra
    d: Homomorphism
    c: Homomorphism
    i: Homomorphism

    def __post_init__(self):
        for nm, hom in (("d", self.d), ("c", self.c)):
            if check_homomorphism(hom) != "surjective-hom":
                raise ValidationError(f"{nm} must be a surjective homomorphism")
        if check_homomorphism(self.i) == "not-hom":
            raise ValidationError("i must be a homomorphism")
        ident = np.arange(self.x0.size)
        if not np.array_equal(self.d.map[self.i.map], ident):
            raise ValidationError("d∘i != id")
        if not np.array_equal(self.c.map[self.i.map], ident):
            raise ValidationError("c∘i != id")

    def as_two_eq(self) -> TwoEqObject:
        return TwoEqObject(self.x1, kernel_pair(self.c), kernel_pair(self.d))


@dataclass(frozen=True)
class GraphMorphism:
    """A map of reflexive graphs fixing the base: d'∘f = d, c'∘f = c, f∘i = i'."""

    source: ReflexiveGraphOverB
    target: ReflexiveGraphOverB
    hom: Homomorphism

    def __post_init__(self):
        if check_homomorphism(self.hom) == "not-hom":
            raise ValidationError("graph morphism is not a homomorphism")
        if not np.array_equal(self.target.d.map[self.hom.map], self.source.d.map):
            raise ValidationError("graph morphism does not fix the base: d'∘f != d")
        if not np.array_equal(self.target.c.map[self.hom.map], self.source.c.map):
            raise ValidationError("graph morphism does not fix the base: c'∘f != c")
        if not np.array_equal(self.hom.map[self.source.i.map], self.target.i.map):
            raise ValidationError("graph morphism does not fix identities: f∘i != i'")

    def as_two_eq(self) -> TwoEqMorphism:
        return TwoEqMorphism(self.source.as_two_eq(), self.target.as_two_eq(), self.hom)


def graph_extension_central(f: GraphMorphism, limits: Limits = DEFAULT_LIMITS):
    """Centrality of a surjective graph morphism over a fixed base.

    Fixing the base forces the induced morphism of relation pairs to be a
    fibration, so the commutator criterion applies directly.  Returns
    (verdict, certificate).
    """
    if not f.hom.is_surjective():
        raise PreconditionError("graph extension must be surjective")
    return is_central_extension(f.as_two_eq(), limits)


def graph_is_internal_groupoid(g: ReflexiveGraphOverB,
                               limits: Limits = DEFAULT_LIMITS) -> bool:
    """A reflexive graph composes to a groupoid iff its codomain and domain
    kernel pairs centralize each other."""
    return centralizes(g.x1, kernel_pair(g.c), kernel_pair(g.d), limits)


def graph_double_central(sq_f: GraphMorphism, sq_g: GraphMorphism,
                         sq_j: GraphMorphism, sq_h: GraphMorphism,
                         limits: Limits = DEFAULT_LIMITS):
    """Double centrality of a commuting square of graph morphisms over a fixed
    base, through the induced square of relation pairs."""
    square = DoubleExtensionSquare(
        top=sq_g.as_two_eq(), left=sq_f.as_two_eq(),
        bottom=sq_j.as_two_eq(), right=sq_h.as_two_eq())
    return is_double_central(square, limits)


# ---------------------------------------------------------------------------
# precrossed modules


@dataclass(frozen=True)
class PrecrossedModule:
    """A base acting on an algebra with an equivariant boundary map.

    kind 'lie': base and algebra are LieAlgebraFp, action is a table
    ^b l = action[b, l] of derivations, boundary is linear with
    boundary(^b l) = [b, boundary(l)].

    kind 'group': base and algebra are group FiniteAlgebras, the action is by
    automorphisms, and boundary(^b l) = b * boundary(l) * b^-1.
    """

    kind: str
    base: object
    algebra: object
    action: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        if self.kind not in ("lie", "group"):
            raise ValidationError(f"unknown precrossed module kind {self.kind!r}")
        object.__setattr__(self, "action",
                           np.ascontiguousarray(self.action, dtype=np.int64))
        object.__setattr__(self, "boundary",
                           np.ascontiguousarray(self.boundary, dtype=np.int64))
        if self.kind == "lie":
            _validate_lie_module(self)
        else:
            _validate_group_module(self)

    @property
    def base_alg(self) -> FiniteAlgebra:
        return self.base.alg if self.kind == "lie" else self.base

    @property
    def mod_alg(self) -> FiniteAlgebra:
        return self.algebra.alg if self.kind == "lie" else self.algebra


def _validate_lie_module(m: PrecrossedModule) -> None:
    b, l = m.base, m.algebra
    if m.action.shape != (b.size, l.size):
        raise ValidationError("action table has the wrong shape")
    if m.boundary.shape != (l.size,):
        raise ValidationError("boundary map has the wrong length")
    add_l = l.alg.op("add").view(l.size)
    add_b = b.alg.op("add").view(b.size)
    bt_l = l.alg.op("bracket").view(l.size)
    bt_b = b.alg.op("bracket").view(b.size)
    neg_l = l.alg.op("neg").table
    act = m.action
    idx_l = np.arange(l.size)
    for bb in range(b.size):
        if not np.array_equal(act[bb][add_l], add_l[act[bb][:, None], act[bb][None, :]]):
            raise ValidationError(f"action of {bb} is not additive")
        lhs = act[bb][bt_l]
        rhs = add_l[bt_l[act[bb][:, None], idx_l[None, :]],
                    bt_l[idx_l[:, None], act[bb][None, :]]]
        if not np.array_equal(lhs, rhs):
            raise ValidationError(f"action of {bb} is not a derivation")
    for b1 in range(b.size):
        for b2 in range(b.size):
            if not np.array_equal(act[int(add_b[b1, b2])], add_l[act[b1], act[b2]]):
                raise ValidationError(f"action is not additive in the base at ({b1},{b2})")
            lie_lhs = act[int(bt_b[b1, b2])]
            lie_rhs = add_l[act[b1][act[b2]], neg_l[act[b2][act[b1]]]]
            if not np.array_equal(lie_lhs, lie_rhs):
                raise ValidationError(
                    f"action does not respect the base bracket at ({b1},{b2})")
    for bb in range(b.size):
        lhs = m.boundary[act[bb]]
        rhs = bt_b[bb, m.boundary]
        if not np.array_equal(lhs, rhs):
            witness = int(np.argmax(lhs != rhs))
            raise ValidationError(f"boundary not equivariant at b={bb}, l={witness}")
    if check_homomorphism(Homomorphism(l.alg, b.alg, m.boundary)) == "not-hom":
        raise ValidationError("boundary is not a homomorphism")


def _validate_group_module(m: PrecrossedModule) -> None:
    b, l = m.base, m.algebra
    mul_b = b.op("mul").view(b.size)
    mul_l = l.op("mul").view(l.size)
    inv_b = b.op("inv").table
    act = m.action
    if act.shape != (b.size, l.size):
        raise ValidationError("action table has the wrong shape")
    if m.boundary.shape != (l.size,):
        raise ValidationError("boundary map has the wrong length")
    e_b = group_identity(b)
    if not np.array_equal(act[e_b], np.arange(l.size)):
        raise ValidationError("identity of the base must act trivially")
    for bb in range(b.size):
        if sorted(act[bb]) != list(range(l.size)):
            raise ValidationError(f"action of {bb} is not a bijection")
        if not np.array_equal(act[bb][mul_l], mul_l[act[bb][:, None], act[bb][None, :]]):
            raise ValidationError(f"action of {bb} is not an automorphism")
    for b1 in range(b.size):
        for b2 in range(b.size):
            if not np.array_equal(act[int(mul_b[b1, b2])], act[b1][act[b2]]):
                raise ValidationError(f"action is not a left action at ({b1},{b2})")
    # boundary must be a homomorphism with boundary(^b l) = b boundary(l) b^-1
    if check_homomorphism(Homomorphism(l, b, m.boundary)) == "not-hom":
        raise ValidationError("boundary is not a homomorphism")
    for bb in range(b.size):
        lhs = m.boundary[act[bb]]
        rhs = mul_b[mul_b[bb, m.boundary], int(inv_b[bb])]
        if not np.array_equal(lhs, rhs):
            witness = int(np.argmax(lhs != rhs))
            raise ValidationError(f"boundary not equivariant at b={bb}, l={witness}")


def satisfies_peiffer_identity(m: PrecrossedModule) -> bool:
    """Whether [l, l'] = ^{boundary(l)} l' holds (the crossed-module law)."""
    if m.kind == "lie":
        l = m.algebra
        bt = l.alg.op("bracket").view(l.size)
        return all(int(bt[a, c]) == int(m.action[int(m.boundary[a]), c])
                   for a in range(l.size) for c in range(l.size))
    l = m.algebra
    mul = l.op("mul").view(l.size)
    inv = l.op("inv").table
    # group Peiffer identity: l l' l^-1 = ^{boundary(l)} l'
    return all(int(mul[mul[a, c], int(inv[a])]) == int(m.action[int(m.boundary[a]), c])
               for a in range(l.size) for c in range(l.size))


def semidirect_graph(m: PrecrossedModule,
                     limits: Limits = DEFAULT_LIMITS) -> ReflexiveGraphOverB:
    """The reflexive graph carried by the semidirect product of the base with
    the module: d is the base projection, c adds (or multiplies in) the
    boundary, and i embeds the base along zero."""
    if m.kind == "lie":
        return _lie_semidirect_graph(m, limits)
    return _group_semidirect_graph(m, limits)


def _lie_semidirect_graph(m: PrecrossedModule, limits: Limits) -> ReflexiveGraphOverB:
    b, l = m.base, m.algebra
    nb, nl = b.size, l.size
    n = nb * nl
    if n > limits.max_carrier:
        raise PreconditionError(f"semidirect carrier {n} exceeds limit {limits.max_carrier}")
    add_b = b.alg.op("add").view(nb)
    neg_b = b.alg.op("neg").table
    add_l = l.alg.op("add").view(nl)
    neg_l = l.alg.op("neg").table
    bt_b = b.alg.op("bracket").view(nb)
    bt_l = l.alg.op("bracket").view(nl)
    act = m.action
    bi = np.arange(n) // nl
    li = np.arange(n) % nl

    def pack(bs, ls):
        return bs * nl + ls

    add = pack(add_b[bi[:, None], bi[None, :]], add_l[li[:, None], li[None, :]])
    neg = pack(neg_b[bi], neg_l[li])
    # [(b,l), (b',l')] = ([b,b'], ^b l' - ^{b'} l + [l,l'])
    act_xy = act[bi[:, None], li[None, :]]   # ^b l'
    act_yx = act[bi[None, :], li[:, None]]   # ^{b'} l
    term = add_l[add_l[act_xy, neg_l[act_yx]], bt_l[li[:, None], li[None, :]]]
    brk = pack(bt_b[bi[:, None], bi[None, :]], term)
    # p(x, y, z) = x - y + z, componentwise
    p_tab = pack(
        add_b[add_b[bi[:, None, None], neg_b[bi[None, :, None]]], bi[None, None, :]],
        add_l[add_l[li[:, None, None], neg_l[li[None, :, None]]], li[None, None, :]],
    )
    ops = [("add", 2, add), ("neg", 1, neg), ("zero", 0, [0]),
           ("bracket", 2, brk), ("p", 3, p_tab)]
    for k in range(1, b.prime):
        sb = b.alg.op(f"scalar{k}").table
        sl = l.alg.op(f"scalar{k}").table
        ops.append((f"scalar{k}", 1, pack(sb[bi], sl[li])))
    x1 = FiniteAlgebra(n, ops, "p", name=f"{b.alg.name}|x{l.alg.name}")
    d = Homomorphism(x1, b.alg, bi)
    c = Homomorphism(x1, b.alg, add_b[bi, m.boundary[li]])
    i = Homomorphism(b.alg, x1, pack(np.arange(nb), np.zeros(nb, dtype=np.int64)))
    for nm, hom in (("d", d), ("c", c), ("i", i)):
        if check_homomorphism(hom) == "not-hom":
            raise ValidationError(
                f"semidirect structure map {nm} is not a homomorphism; "
                "bracket sign convention does not fit the data")
    return ReflexiveGraphOverB(x1, b.alg, d, c, i)


def _group_semidirect_graph(m: PrecrossedModule, limits: Limits) -> ReflexiveGraphOverB:
    b, l = m.base, m.algebra
    nb, nl = b.size, l.size
    n = nb * nl
    if n > limits.max_carrier:
        raise PreconditionError(f"semidirect carrier {n} exceeds limit {limits.max_carrier}")
    mul_b = b.op("mul").view(nb)
    inv_b = b.op("inv").table
    mul_l = l.op("mul").view(nl)
    act = m.action
    bi = np.arange(n) // nl
    li = np.arange(n) % nl
    # (b, l)(b', l') = (b b', ^{b'^-1}(l) l')
    table = np.zeros((n, n), dtype=np.int64)
    for x in range(n):
        for y in range(n):
            b1, l1 = int(bi[x]), int(li[x])
            b2, l2 = int(bi[y]), int(li[y])
            table[x, y] = int(mul_b[b1, b2]) * nl + int(mul_l[int(act[int(inv_b[b2]), l1]), l2])
    x1 = group_algebra(table, name=f"{b.name}|x{l.name}")
    e_l = group_identity(l)
    d = Homomorphism(x1, b, bi)
    c = Homomorphism(x1, b, mul_b[bi, m.boundary[li]])
    i = Homomorphism(b, x1, np.arange(nb) * nl + e_l)
    for nm, hom in (("d", d), ("c", c), ("i", i)):
        if check_homomorphism(hom) == "not-hom":
            raise ValidationError(f"semidirect structure map {nm} is not a homomorphism")
    return ReflexiveGraphOverB(x1, b, d, c, i)


def module_surjection_graph(m: PrecrossedModule, m2: PrecrossedModule,
                            f_map, limits: Limits = DEFAULT_LIMITS) -> GraphMorphism:
    """The graph morphism induced by a surjection of precrossed modules over
    the same base: (b, l) -> (b, f l)."""
    if m.kind != m2.kind:
        raise PreconditionError("modules must share a kind")
    f_map = np.ascontiguousarray(f_map, dtype=np.int64)
    nb = m.base_alg.size
    nl, nl2 = m.mod_alg.size, m2.mod_alg.size
    g1 = semidirect_graph(m, limits)
    g2 = semidirect_graph(m2, limits)
    lift = (np.arange(nb * nl) // nl) * nl2 + f_map[np.arange(nb * nl) % nl]
    return GraphMorphism(g1, g2, Homomorphism(g1.x1, g2.x1, lift))


def peiffer_commutator(m: PrecrossedModule, k_subset,
                       limits: Limits = DEFAULT_LIMITS) -> frozenset:
    """The Peiffer commutator of an ideal K with the whole module: the ideal
    generated by all [k, l] and ^{boundary(l)} k.

    Lie modules only; closed under bracketing with the module and under the
    base action, which makes it the restriction to the module of an ideal of
    the semidirect product.
    """
    if m.kind != "lie":
        raise PreconditionError("the explicit Peiffer generator formula is Lie-only")
    lie = m.algebra
    if not is_ideal(lie, k_subset):
        raise PreconditionError("K must be an ideal of the module")
    bt = lie.alg.op("bracket").view(lie.size)
    gens = set()
    for k in k_subset:
        for l in range(lie.size):
            gens.add(int(bt[int(k), l]))
            gens.add(int(m.action[int(m.boundary[l]), int(k)]))
    span = subspace_span(lie, gens)
    while True:
        extra = set()
        for s in span:
            for l in range(lie.size):
                v = int(bt[int(s), l])
                if v not in span:
                    extra.add(v)
            for b in range(m.base.size):
                v = int(m.action[b, int(s)])
                if v not in span:
                    extra.add(v)
        if not extra:
            return frozenset(span)
        span = subspace_span(lie, set(span) | extra)
