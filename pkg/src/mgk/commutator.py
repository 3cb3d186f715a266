"""Double equivalence relations, centralization, connectors, and the
commutator of congruences.

The central computation is the least double relation W over congruences R
and S: the closure, inside the fourth power of the algebra, of the two
diagonal generator families {(a,b,a,b) : aRb} and {(a,a,c,c) : aSc}.
Viewing a quadruple (a,b,d,c) as the pair of rows ((a,b),(d,c)) in the
R-pair algebra, W is exactly the congruence of that pair algebra generated
by the S-diagonal pairs: the generated subalgebra contains the diagonal of
the pair algebra, and over a Mal'tsev algebra any reflexive subalgebra of a
square is a congruence.  The fixpoint below therefore runs union-find over
the R-pairs, sweeping translation maps until the partition is compatible
with every basic operation.  Ternary translations are applied through
precomputed section tables (the distinct unary slices of the Mal'tsev
table), which collapses their cost on group-like and module-like algebras.

R and S centralize iff no W-class holds two pairs with equal second
component; the commutator [R,S] is the least congruence whose quotient
removes all such collisions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    InternalDisagreementError,
    Limits,
    PreconditionError,
    QuadrupleRelation,
    quotient_algebra,
    require_valid,
)
from .congruence import (
    Partition,
    congruence_closure,
    congruence_lattice,
    direct_image,
    is_congruence,
)


class NonCentralizingError(PreconditionError):
    """Raised by connector() when uniqueness fails; carries a witness
    (a, b, c, d, d') with both (a,b,d,c) and (a,b,d',c) in the double relation."""

    def __init__(self, witness):
        self.witness = tuple(int(x) for x in witness)
        a, b, c, d, dp = self.witness
        super().__init__(
            f"relations do not centralize: for a={a}, b={b}, c={c} both d={d} "
            f"and d'={dp} complete the matrix")


class _UnionFind:
    __slots__ = ("parent", "n_classes")

    def __init__(self, m: int) -> None:
        self.parent = np.arange(m, dtype=np.int64)
        self.n_classes = m

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        # least index wins, so roots are canonical representatives
        self.parent[rb] = ra
        self.n_classes -= 1
        return True

    def roots(self) -> np.ndarray:
        p = self.parent
        while True:
            pp = p[p]
            if np.array_equal(pp, p):
                break
            p = pp
        self.parent = p.copy()
        return self.parent


def _maltsev_sections(alg: FiniteAlgebra):
    """Per argument position of the Mal'tsev table: (section_id, section_fun).

    section_id is an (n, n) matrix over the two fixed arguments, section_fun
    the matrix of distinct unary slices (one row per section).
    """
    cached = alg._cache.get("maltsev_sections")
    if cached is not None:
        return cached
    n = alg.size
    view = alg.maltsev_table
    out = []
    for pos in range(3):
        mat = np.moveaxis(view, pos, 2).reshape(n * n, n)
        fun, ids = np.unique(mat, axis=0, return_inverse=True)
        out.append((ids.reshape(n, n).astype(np.int32), fun.astype(np.int32)))
    alg._cache["maltsev_sections"] = tuple(out)
    return alg._cache["maltsev_sections"]


def _maltsev_term_reducible(alg: FiniteAlgebra) -> bool:
    """Whether the designated Mal'tsev table factors as a two-level term in
    the remaining basic operations, f(g(l1, l2), l3) or f(l1, g(l2, l3)) over
    a permutation of the arguments with optional unary wrappers.

    When it does, every translation by the Mal'tsev operation is a composite
    of unary-operation maps and binary translations (with constants that stay
    inside any subalgebra), so the closure fixpoint may drop its section
    streams: compatibility with a set of maps extends to their composites.
    Group-like and module-like signatures always factor (x * y^-1 * z,
    x - y + z); the search is exact, so a miss only costs the fallback.
    """
    cached = alg._cache.get("maltsev_reducible")
    if cached is not None:
        return cached
    n = alg.size
    p_view = alg.maltsev_table
    unaries = [None] + [op.table for op in alg.operations
                        if op.arity == 1 and op.name != alg.maltsev_op]
    binaries = [op.view(n) for op in alg.operations
                if op.arity == 2 and op.name != alg.maltsev_op]
    rng = np.random.default_rng(0)
    k = min(5 * n, n ** 3, 512)
    xs = rng.integers(0, n, size=k)
    ys = rng.integers(0, n, size=k)
    zs = rng.integers(0, n, size=k)
    sample_target = p_view[xs, ys, zs]
    grids = (np.arange(n)[:, None, None], np.arange(n)[None, :, None],
             np.arange(n)[None, None, :])
    samples = (xs, ys, zs)
    from itertools import permutations, product as iproduct

    def leaf(u, arrs, i):
        return arrs[i] if u is None else u[arrs[i]]

    found = False
    for f, g in iproduct(binaries, repeat=2):
        if found:
            break
        for perm in permutations(range(3)):
            if found:
                break
            for u1, u2, u3 in iproduct(unaries, repeat=3):
                l1s = leaf(u1, samples, perm[0])
                l2s = leaf(u2, samples, perm[1])
                l3s = leaf(u3, samples, perm[2])
                for shape in ("left", "right"):
                    if shape == "left":
                        cand = f[g[l1s, l2s], l3s]
                    else:
                        cand = f[l1s, g[l2s, l3s]]
                    if not np.array_equal(cand, sample_target):
                        continue
                    l1 = leaf(u1, grids, perm[0])
                    l2 = leaf(u2, grids, perm[1])
                    l3 = leaf(u3, grids, perm[2])
                    if shape == "left":
                        full = f[g[l1, l2], l3]
                    else:
                        full = f[l1, g[l2, l3]]
                    if np.array_equal(full, p_view):
                        found = True
                        break
                if found:
                    break
    alg._cache["maltsev_reducible"] = found
    return found


def _realized_section_pairs(sid, ax, ay, chunk_rows: int = 256):
    """Distinct (x-section, y-section) pairs over all ordered pairs of relation
    elements, encoded through the section-id matrix."""
    m = ax.shape[0]
    kx = int(sid.max()) + 1 if sid.size else 1
    seen = None
    for lo in range(0, m, chunk_rows):
        hi = min(lo + chunk_rows, m)
        sx = sid[ax[lo:hi, None], ax[None, :]].astype(np.int64)
        sy = sid[ay[lo:hi, None], ay[None, :]].astype(np.int64)
        keys = np.unique(sx.reshape(-1) * kx + sy.reshape(-1))
        seen = keys if seen is None else np.union1d(seen, keys)
    return (seen // kx).astype(np.int32), (seen % kx).astype(np.int32)


@dataclass
class DoubleRelation:
    """The W-partition over the R-pairs of an algebra."""

    alg: FiniteAlgebra
    r: Partition
    s: Partition
    pair_x: np.ndarray      # (m,) first components of R-pairs
    pair_y: np.ndarray      # (m,) second components
    pair_index: np.ndarray  # (n, n) -> pair position or -1
    roots: np.ndarray       # (m,) class root per pair

    def holds(self, a: int, b: int, d: int, c: int) -> bool:
        """Membership of the matrix with rows (a,b) and (d,c)."""
        i = self.pair_index[a, b]
        j = self.pair_index[d, c]
        if i < 0 or j < 0:
            return False
        return self.roots[i] == self.roots[j]

    def collision_pairs(self):
        """All (d, d') with d != d' such that (d,c) and (d',c) fall in one
        W-class for some c; the uniqueness violations."""
        m = self.pair_x.shape[0]
        key = self.roots * self.alg.size + self.pair_y
        order = np.argsort(key, kind="stable")
        ks = key[order]
        out = []
        run = np.flatnonzero(np.diff(ks) == 0)
        for i in run:
            out.append((int(self.pair_x[order[i]]), int(self.pair_x[order[i + 1]])))
        return out

    def quadruples(self, limits: Limits = DEFAULT_LIMITS):
        """Materialize the member quadruples (a, b, d, c)."""
        order = np.argsort(self.roots, kind="stable")
        rs = self.roots[order]
        starts = np.flatnonzero(np.r_[True, np.diff(rs) != 0])
        bounds = np.r_[starts, rs.shape[0]]
        total = int(np.sum((bounds[1:] - bounds[:-1]).astype(np.int64) ** 2))
        if total > limits.quad_members_max:
            raise PreconditionError(
                f"double relation has {total} member quadruples, over the limit "
                f"{limits.quad_members_max}")
        quads = []
        for i in range(starts.shape[0]):
            cls = order[bounds[i]:bounds[i + 1]]
            ax, ay = self.pair_x[cls], self.pair_y[cls]
            k = cls.shape[0]
            a = np.repeat(ax, k); b = np.repeat(ay, k)
            d = np.tile(ax, k); c = np.tile(ay, k)
            quads.append(np.stack([a, b, d, c], axis=1))
        return np.concatenate(quads, axis=0) if quads else np.zeros((0, 4), dtype=np.int32)


def double_relation(alg: FiniteAlgebra, r: Partition, s: Partition,
                    limits: Limits = DEFAULT_LIMITS) -> DoubleRelation:
    """Compute the least double relation W over congruences r and s."""
    n = alg.size
    if r.size != n or s.size != n:
        raise PreconditionError("relation sizes do not match the carrier")
    rmat = r.matrix()
    ax, ay = (idx.astype(np.int32) for idx in np.nonzero(rmat))
    m = ax.shape[0]
    pair_index = -np.ones((n, n), dtype=np.int64)
    pair_index[ax, ay] = np.arange(m, dtype=np.int64)

    uf = _UnionFind(m)
    # generators: chain the diagonal pairs of each s-block
    for blk in s.blocks():
        for u, v in zip(blk, blk[1:]):
            uf.union(int(pair_index[u, u]), int(pair_index[v, v]))

    # translation-map streams
    streams = []
    unary_imgs = []
    for op in alg.operations:
        if op.arity != 1 or op.name == alg.maltsev_op:
            continue
        u = op.table
        unary_imgs.append(pair_index[u[ax], u[ay]])
    if unary_imgs:
        streams.append(("unary", np.stack(unary_imgs).astype(np.int64), None))

    binary_views = [op.view(n) for op in alg.operations
                    if op.arity == 2 and op.name != alg.maltsev_op]

    # Mal'tsev translations: skipped when the term factors through the other
    # operations, otherwise realized through section tables
    section_streams = []
    if not _maltsev_term_reducible(alg):
        sections = _maltsev_sections(alg)
        for pos in range(3):
            sid, fun = sections[pos]
            rsx, rsy = _realized_section_pairs(sid, ax, ay)
            section_streams.append((rsx, rsy, fun))

    ternary_views = [op.view(n) for op in alg.operations
                     if op.arity == 3 and op.name != alg.maltsev_op]

    # work estimate per sweep, for the guard
    work = m * (len(unary_imgs)
                + 2 * m * len(binary_views)
                + 3 * m * m * len(ternary_views)
                + sum(rs[0].shape[0] for rs in section_streams))
    if work > limits.closure_work_max:
        raise PreconditionError(
            f"double-relation fixpoint work estimate {work} exceeds the limit "
            f"{limits.closure_work_max}")

    chunk_rows = max(1, (1 << 22) // max(m, 1))

    def apply_chunk(img: np.ndarray) -> bool:
        """Merge classes until the chunk of maps is compatible with the
        current partition; returns True if anything merged."""
        roots = uf.roots()
        _, first_idx, inv = np.unique(roots, return_index=True, return_inverse=True)
        ir = roots[img]
        exp = ir[:, first_idx[inv]]
        rows, cols = np.nonzero(ir != exp)
        if rows.size == 0:
            return False
        changed = False
        wit = first_idx[inv]
        for rr, cc in zip(rows.tolist(), cols.tolist()):
            if uf.union(int(img[rr, cc]), int(img[rr, wit[cc]])):
                changed = True
        return changed

    def sweep_unary(imgs) -> bool:
        return apply_chunk(imgs)

    def sweep_binary(view) -> bool:
        changed = False
        for lo in range(0, m, chunk_rows):
            hi = min(lo + chunk_rows, m)
            fx = view[ax[lo:hi, None], ax[None, :]]
            fy = view[ay[lo:hi, None], ay[None, :]]
            # rows: translation by a constant in position 0
            if apply_chunk(pair_index[fx, fy]):
                changed = True
            gx = view[ax[None, :], ax[lo:hi, None]]
            gy = view[ay[None, :], ay[lo:hi, None]]
            # rows: constant in position 1
            if apply_chunk(pair_index[gx, gy]):
                changed = True
        return changed

    def sweep_sections(rsx, rsy, fun) -> bool:
        changed = False
        k = rsx.shape[0]
        for lo in range(0, k, chunk_rows):
            gx = fun[rsx[lo:lo + chunk_rows]][:, ax]
            gy = fun[rsy[lo:lo + chunk_rows]][:, ay]
            if apply_chunk(pair_index[gx, gy]):
                changed = True
        return changed

    def sweep_ternary(view) -> bool:
        # rare: a ternary basic operation other than the designated one
        changed = False
        for pos in range(3):
            mat = np.moveaxis(view, pos, 2).reshape(n * n, n)
            fun, ids = np.unique(mat, axis=0, return_inverse=True)
            sid = ids.reshape(n, n).astype(np.int32)
            rsx, rsy = _realized_section_pairs(sid, ax, ay)
            if sweep_sections(rsx, rsy, fun.astype(np.int32)):
                changed = True
        return changed

    # cheap tier first; expensive section streams only at cheap fixpoints
    budget = 1 << 28
    cheap_sections = [st for st in section_streams if st[0].shape[0] * m <= budget]
    heavy_sections = [st for st in section_streams if st[0].shape[0] * m > budget]

    def cheap_pass() -> bool:
        changed = False
        for _, imgs, _ in streams:
            if sweep_unary(imgs):
                changed = True
        for view in binary_views:
            if sweep_binary(view):
                changed = True
        for rsx, rsy, fun in cheap_sections:
            if sweep_sections(rsx, rsy, fun):
                changed = True
        for view in ternary_views:
            if sweep_ternary(view):
                changed = True
        return changed

    while True:
        while cheap_pass():
            pass
        dirty = False
        for rsx, rsy, fun in heavy_sections:
            if sweep_sections(rsx, rsy, fun):
                dirty = True
        if not dirty:
            break

    return DoubleRelation(alg, r, s, ax, ay, pair_index, uf.roots().copy())


def box(alg: FiniteAlgebra, r: Partition, s: Partition,
        limits: Limits = DEFAULT_LIMITS) -> QuadrupleRelation:
    """The largest double relation: all matrices (a,b,d,c) with rows in r and
    columns in s."""
    n = alg.size
    if r.size != n or s.size != n:
        raise PreconditionError("relation sizes do not match the carrier")
    rmat = r.matrix()
    ax, ay = np.nonzero(rmat)
    m = ax.shape[0]
    if m * m > 64 * limits.quad_members_max:
        raise PreconditionError("box enumeration too large for the configured limit")
    sr = s.rep
    cols_ok = (sr[ax][:, None] == sr[ax][None, :]) & (sr[ay][:, None] == sr[ay][None, :])
    i, j = np.nonzero(cols_ok)
    if i.shape[0] > limits.quad_members_max:
        raise PreconditionError(
            f"box has {i.shape[0]} members, over the limit {limits.quad_members_max}")
    quads = np.stack([ax[i], ay[i], ax[j], ay[j]], axis=1)
    return QuadrupleRelation(alg, quads)


def generated_double_relation(alg: FiniteAlgebra, r: Partition, s: Partition,
                              limits: Limits = DEFAULT_LIMITS) -> QuadrupleRelation:
    """The double relation generated by the diagonal families, materialized."""
    require_valid(alg)
    dr = double_relation(alg, r, s, limits)
    return QuadrupleRelation(alg, dr.quadruples(limits))


def centralizes(alg: FiniteAlgebra, r: Partition, s: Partition,
                limits: Limits = DEFAULT_LIMITS) -> bool:
    """True iff r and s admit a centralizing relation: in the generated double
    relation, every (a,b,c) with aRb, bSc completes uniquely."""
    require_valid(alg)
    _check_congruences(alg, r, s)
    dr = double_relation(alg, r, s, limits)
    key = dr.roots * alg.size + dr.pair_y
    _, counts = np.unique(key, return_counts=True)
    return bool((counts == 1).all())


@dataclass
class ConnectorTable:
    """The unique partial Mal'tsev operation p(a,b,c) on triples with aRb, bSc."""

    alg: FiniteAlgebra
    r: Partition
    s: Partition
    entries: dict = field(repr=False)

    def __call__(self, a: int, b: int, c: int) -> int:
        return self.entries[(a, b, c)]

    def domain(self):
        return sorted(self.entries)

    def verify(self) -> list[str]:
        """Exhaustively check unit laws, side relations, and associativity on
        the domain; returns violations."""
        out = []
        r, s = self.r, self.s
        for (x, y, z), val in self.entries.items():
            if y == z and val != x:
                out.append(f"p({x},{y},{y}) = {val} != {x}")
            if x == y and val != z:
                out.append(f"p({x},{x},{z}) = {val} != {z}")
            if not s.same(x, val):
                out.append(f"p({x},{y},{z}) = {val} breaks the x S p side relation")
            if not r.same(z, val):
                out.append(f"p({x},{y},{z}) = {val} breaks the z R p side relation")
        n = self.alg.size
        for (x, y, z), inner in self.entries.items():
            for u in range(n):
                if not r.same(inner, u) or not r.same(z, u):
                    continue
                for v in range(n):
                    if not s.same(u, v):
                        continue
                    lhs = self.entries[(inner, u, v)]
                    rhs = self.entries[(x, y, self.entries[(z, u, v)])]
                    if lhs != rhs:
                        out.append(
                            f"associativity fails at ({x},{y},{z}),({u},{v}): {lhs} != {rhs}")
        return out


def connector(alg: FiniteAlgebra, r: Partition, s: Partition,
              limits: Limits = DEFAULT_LIMITS) -> ConnectorTable:
    """Extract the connector; raises NonCentralizingError with a witness when
    r and s do not centralize."""
    require_valid(alg)
    _check_congruences(alg, r, s)
    dr = double_relation(alg, r, s, limits)
    key = dr.roots * alg.size + dr.pair_y
    order = np.argsort(key, kind="stable")
    ks = key[order]
    dup = np.flatnonzero(np.diff(ks) == 0)
    if dup.size:
        i, j = order[dup[0]], order[dup[0] + 1]
        d, c = int(dr.pair_x[i]), int(dr.pair_y[i])
        dp = int(dr.pair_x[j])
        # (d,c) ~ (d',c): uniqueness already fails at the triple (d, c, c)
        raise NonCentralizingError((d, c, c, d, dp))
    view = alg.maltsev_table
    entries = {}
    sr = s.rep
    for a in range(alg.size):
        for b in r.block_of(a):
            for c in range(alg.size):
                if sr[b] == sr[c]:
                    entries[(a, b, c)] = int(view[a, b, c])
    return ConnectorTable(alg, r, s, entries)


def _check_congruences(alg: FiniteAlgebra, *parts: Partition) -> None:
    for p in parts:
        if not is_congruence(alg, p):
            raise PreconditionError(f"partition {p!r} is not a congruence")


def commutator(alg: FiniteAlgebra, r: Partition, s: Partition,
               limits: Limits = DEFAULT_LIMITS) -> Partition:
    """The commutator [r,s]: the least congruence whose quotient makes the
    images of r and s centralize each other.

    Fixpoint: starting from the diagonal, repeatedly quotient, collect every
    uniqueness collision of the double relation in the quotient, lift the
    colliding blocks back to representatives, and regenerate.  The candidate
    grows strictly inside a finite lattice, so this terminates.
    """
    require_valid(alg)
    _check_congruences(alg, r, s)
    t = Partition.diagonal(alg.size)
    while True:
        quot, q = quotient_algebra(alg, t, limits)
        rq = direct_image(q, r)
        sq = direct_image(q, s)
        dr = double_relation(quot, rq, sq, limits)
        collisions = dr.collision_pairs()
        if not collisions:
            return t
        block_rep = np.unique(t.rep)
        lifted = [(int(block_rep[d]), int(block_rep[dp])) for d, dp in collisions]
        t = congruence_closure(alg, t.generator_pairs() + lifted, limits)


def commutator_oracle(alg: FiniteAlgebra, r: Partition, s: Partition,
                      limits: Limits = DEFAULT_LIMITS) -> Partition:
    """Test-only exhaustive implementation: filter the full congruence lattice
    for quotients where the images centralize and return the least element."""
    require_valid(alg)
    if alg.size > limits.oracle_max:
        raise PreconditionError(
            f"carrier size {alg.size} exceeds the oracle limit {limits.oracle_max}")
    _check_congruences(alg, r, s)
    candidates = []
    for t in congruence_lattice(alg, limits):
        quot, q = quotient_algebra(alg, t, limits)
        if centralizes(quot, direct_image(q, r), direct_image(q, s), limits):
            candidates.append(t)
    least = [c for c in candidates if all(c.leq(o) for o in candidates)]
    if len(least) != 1:
        raise InternalDisagreementError(
            "centralizing quotients have no unique least congruence; "
            "a Mal'tsev-law violation upstream")
    return least[0]
