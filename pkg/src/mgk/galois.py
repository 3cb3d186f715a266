"""Pairs of congruences, their morphisms, and the extension classifiers.

Objects are triples (X, R, S); morphisms are homomorphisms carrying R into
R' and S into S'.  Regular epis are the surjections with f(R) = R' and
f(S) = S'; fibrations additionally satisfy Eq[f] <= R /\\ S.  A fibration is
central iff [Eq[f], R \\/ S] is the diagonal; normality is decided
independently through triviality of the kernel-pair projection, which is
what the acceptance sweep plays against the commutator criterion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    Homomorphism,
    InternalDisagreementError,
    Limits,
    Operation,
    PreconditionError,
    ValidationError,
    _arg_grids,
    check_homomorphism,
    pair_algebra,
    quotient_algebra,
)
from .commutator import centralizes, commutator
from .congruence import (
    Partition,
    direct_image,
    inverse_image,
    is_congruence,
    join,
    kernel_pair,
    meet,
)


@dataclass(frozen=True)
class TwoEqObject:
    """A carrier algebra with an ordered pair of congruences on it."""

    alg: FiniteAlgebra
    r: Partition
    s: Partition

    def __post_init__(self):
        for part in (self.r, self.s):
            if part.size != self.alg.size:
                raise ValidationError("relation size does not match the carrier")
            if not is_congruence(self.alg, part):
                raise ValidationError(f"relation {part!r} is not a congruence")

    def __repr__(self) -> str:
        return f"TwoEqObject({self.alg.name or '?'}, {self.r!r}, {self.s!r})"


def _maps_into(f: Homomorphism, src: Partition, dst: Partition) -> bool:
    """f(src) <= dst, checked on spanning pairs of src."""
    return all(dst.same(int(f.map[a]), int(f.map[b])) for a, b in src.generator_pairs())


@dataclass(frozen=True)
class TwoEqMorphism:
    """An arrow (X,R,S) -> (X',R',S'): a homomorphism with f(R) <= R', f(S) <= S'."""

    source: TwoEqObject
    target: TwoEqObject
    hom: Homomorphism

    def __post_init__(self):
        if self.hom.source.size != self.source.alg.size \
                or self.hom.target.size != self.target.alg.size:
            raise ValidationError("homomorphism endpoints do not match the objects")
        if check_homomorphism(self.hom) == "not-hom":
            raise ValidationError("underlying map is not a homomorphism")
        if not _maps_into(self.hom, self.source.r, self.target.r):
            raise ValidationError("f(R) is not contained in R'")
        if not _maps_into(self.hom, self.source.s, self.target.s):
            raise ValidationError("f(S) is not contained in S'")

    def compose(self, first: "TwoEqMorphism") -> "TwoEqMorphism":
        return TwoEqMorphism(first.source, self.target, self.hom.compose(first.hom))

    @staticmethod
    def identity(o: TwoEqObject) -> "TwoEqMorphism":
        return TwoEqMorphism(o, o, Homomorphism.identity(o.alg))


@dataclass(frozen=True)
class DoubleExtensionSquare:
    """A commuting square of TwoEqMorphisms:

        X --g--> Z
        |        |
        f        h
        v        v
        Y --j--> W
    """

    top: TwoEqMorphism     # g : X -> Z
    left: TwoEqMorphism    # f : X -> Y
    bottom: TwoEqMorphism  # j : Y -> W
    right: TwoEqMorphism   # h : Z -> W

    def __post_init__(self):
        corners = [
            (self.top.source, self.left.source, "X"),
            (self.top.target, self.right.source, "Z"),
            (self.left.target, self.bottom.source, "Y"),
            (self.bottom.target, self.right.target, "W"),
        ]
        for a, b, label in corners:
            if a is b:
                continue
            if a.alg.size != b.alg.size or a.r != b.r or a.s != b.s:
                raise ValidationError(f"square corners inconsistent at {label}")
        if not np.array_equal(self.right.hom.map[self.top.hom.map],
                              self.bottom.hom.map[self.left.hom.map]):
            raise ValidationError("square does not commute: h∘g != j∘f")

    @property
    def x(self) -> TwoEqObject:
        return self.left.source


def classify_morphism(m: TwoEqMorphism) -> str:
    """One of 'morphism', 'regular-epi', 'fibration'.

    For the fibration verdict the three equivalent clauses of the definition
    are all evaluated and must agree: Eq[f] <= R /\\ S, the inverse-image
    clause f^{-1}(R') = R (and for S), and bijectivity of the induced maps
    X/R -> X'/R' (and for S).
    """
    f = m.hom
    src, tgt = m.source, m.target
    if not f.is_surjective():
        return "morphism"
    if direct_image(f, src.r) != tgt.r or direct_image(f, src.s) != tgt.s:
        return "morphism"
    eq = kernel_pair(f)
    clause_kernel = eq.leq(meet(src.r, src.s))
    clause_inverse = (inverse_image(f, tgt.r) == src.r
                      and inverse_image(f, tgt.s) == src.s)
    clause_quotient = (_induced_quotient_bijective(f, src.r, tgt.r)
                       and _induced_quotient_bijective(f, src.s, tgt.s))
    if not (clause_kernel == clause_inverse == clause_quotient):
        raise InternalDisagreementError(
            f"fibration clauses disagree: kernel={clause_kernel} "
            f"inverse-image={clause_inverse} quotient-iso={clause_quotient}")
    return "fibration" if clause_kernel else "regular-epi"


def _induced_quotient_bijective(f: Homomorphism, r: Partition, r2: Partition) -> bool:
    """Whether the induced map X/r -> X'/r2 is a bijection (f assumed onto)."""
    src_blocks = np.unique(r.rep)
    images = np.unique(r2.rep[f.map[src_blocks]])
    return src_blocks.shape[0] == r2.num_blocks and images.shape[0] == src_blocks.shape[0]


def quotient_extension(o: TwoEqObject, t: Partition,
                       limits: Limits = DEFAULT_LIMITS) -> TwoEqMorphism:
    """The canonical regular epi (X,R,S) -> (X/t, q(R), q(S))."""
    quot, q = quotient_algebra(o.alg, t, limits)
    image = TwoEqObject(quot, direct_image(q, o.r), direct_image(q, o.s))
    return TwoEqMorphism(o, image, q)


def reflection_unit(o: TwoEqObject, limits: Limits = DEFAULT_LIMITS):
    """Quotient by [R,S]: the component of the reflection onto connected pairs.

    Returns (unit, image).  The image always centralizes and the unit is a
    fibration; both facts are asserted.
    """
    t = commutator(o.alg, o.r, o.s, limits)
    unit = quotient_extension(o, t, limits)
    image = unit.target
    if not centralizes(image.alg, image.r, image.s, limits):
        raise InternalDisagreementError("reflection image fails to centralize")
    if classify_morphism(unit) != "fibration":
        raise InternalDisagreementError("reflection unit is not a fibration")
    return unit, image


def is_trivial_extension(m: TwoEqMorphism, limits: Limits = DEFAULT_LIMITS) -> bool:
    """Whether the unit naturality square of m is a pullback.

    Concretely: the canonical map from X into
    {(x', u) in X' x (X/[R,S]) : q'(x') = f̄(u)} must be a bijection.
    """
    if classify_morphism(m) == "morphism":
        raise PreconditionError("triviality is only defined for regular epis")
    unit_src, img_src = reflection_unit(m.source, limits)
    unit_tgt, img_tgt = reflection_unit(m.target, limits)
    # reflected morphism on the images: f̄(q(x)) = q'(f(x))
    fbar = np.zeros(img_src.alg.size, dtype=np.int32)
    fbar[unit_src.hom.map] = unit_tgt.hom.map[m.hom.map]
    # pullback carrier and the comparison map x -> (f(x), q(x))
    qx = unit_src.hom.map
    qy = unit_tgt.hom.map
    pullback = {(int(xp), int(u))
                for xp in range(m.target.alg.size)
                for u in range(img_src.alg.size)
                if qy[xp] == fbar[u]}
    comparison = {(int(m.hom.map[x]), int(qx[x])) for x in range(m.source.alg.size)}
    return len(comparison) == m.source.alg.size and comparison == pullback


def is_central_extension(m: TwoEqMorphism, limits: Limits = DEFAULT_LIMITS):
    """Decide centrality of a fibration by the commutator condition.

    Returns (verdict, certificate) where the certificate is the computed
    congruence [Eq[f], R \\/ S]; the verdict is True iff it is the diagonal.
    Refuses non-fibrations: outside the fibration class the commutator
    condition is not equivalent to centrality.
    """
    if classify_morphism(m) != "fibration":
        raise PreconditionError(
            "not a fibration: the commutator criterion for centrality only "
            "applies to fibrations")
    src = m.source
    cert = commutator(src.alg, kernel_pair(m.hom), join(src.alg, src.r, src.s), limits)
    return cert == Partition.diagonal(src.alg.size), cert


def kernel_pair_object(m: TwoEqMorphism, limits: Limits = DEFAULT_LIMITS):
    """The kernel-pair object (Eq[f], R box Eq[f], S box Eq[f]) with its two
    projections onto the source."""
    f = m.hom
    src = m.source
    pairs = [(x, y) for x in range(f.source.size) for y in range(f.source.size)
             if f.map[x] == f.map[y]]
    eq_alg, elems = pair_algebra(f.source, pairs, name=f"Eq[{src.alg.name}]", limits=limits)
    rx = src.r.rep
    sx = src.s.rep
    r_box = Partition(rx[elems[:, 0]].astype(np.int64) * src.alg.size + rx[elems[:, 1]])
    s_box = Partition(sx[elems[:, 0]].astype(np.int64) * src.alg.size + sx[elems[:, 1]])
    obj = TwoEqObject(eq_alg, r_box, s_box)
    pi1 = TwoEqMorphism(obj, src, Homomorphism(eq_alg, src.alg, elems[:, 0]))
    pi2 = TwoEqMorphism(obj, src, Homomorphism(eq_alg, src.alg, elems[:, 1]))
    return obj, pi1, pi2


def is_normal_extension_oracle(m: TwoEqMorphism, limits: Limits = DEFAULT_LIMITS) -> bool:
    """Normality decided from the definition: the kernel-pair projection must
    be a trivial extension.  Independent of the commutator criterion."""
    if classify_morphism(m) != "fibration":
        raise PreconditionError("normality oracle is only run on fibrations")
    _, pi1, _ = kernel_pair_object(m, limits)
    return is_trivial_extension(pi1, limits)


def _pullback_carrier(j: Homomorphism, h: Homomorphism):
    """Pairs (y, z) with j(y) = h(z)."""
    return [(y, z) for y in range(j.source.size) for z in range(h.source.size)
            if j.map[y] == h.map[z]]


def is_double_extension(sq: DoubleExtensionSquare,
                        limits: Limits = DEFAULT_LIMITS):
    """Whether the square is a double extension (a regular pushout).

    Checks that all four sides are regular epis in the category of pairs,
    that the comparison into the concrete pullback Y x_W Z is again one, and
    cross-checks the kernel-pair form f(Eq[g]) = Eq[j].  Returns
    (verdict, all_fibrations_flag).
    """
    classes = {name: classify_morphism(mm) for name, mm in
               (("g", sq.top), ("f", sq.left), ("j", sq.bottom), ("h", sq.right))}
    if any(c == "morphism" for c in classes.values()):
        return False, False
    f, g = sq.left.hom, sq.top.hom
    j, h = sq.bottom.hom, sq.right.hom
    pairs = _pullback_carrier(j, h)
    index = {pq: i for i, pq in enumerate(pairs)}
    comp = [index[(int(f.map[x]), int(g.map[x]))] for x in range(f.source.size)]
    onto = len(set(comp)) == len(pairs)
    kernel_form = direct_image(f, kernel_pair(g)) == kernel_pair(j)
    if onto != kernel_form:
        raise InternalDisagreementError(
            f"pullback comparison surjectivity ({onto}) disagrees with the "
            f"kernel-pair form f(Eq[g]) = Eq[j] ({kernel_form})")
    if not onto:
        return False, False
    # comparison must also carry the relations onto the pullback relations
    comp_arr = np.array(comp)
    ok_relations = True
    for pick in ("r", "s"):
        src_rel: Partition = getattr(sq.x, pick)
        ry = getattr(sq.bottom.source, pick).rep
        rz = getattr(sq.right.source, pick).rep
        pb_labels = np.array([int(ry[y]) * h.source.size + int(rz[z]) for y, z in pairs],
                             dtype=np.int64)
        pb_rel = Partition(pb_labels)
        img = Partition.from_pairs(
            len(pairs),
            [(int(comp_arr[a]), int(comp_arr[b])) for a, b in src_rel.generator_pairs()])
        if img != pb_rel:
            ok_relations = False
    all_fib = all(c == "fibration" for c in classes.values())
    return ok_relations, (ok_relations and all_fib)


def is_double_central(sq: DoubleExtensionSquare, limits: Limits = DEFAULT_LIMITS):
    """Decide double centrality by the two commutator conditions.

    Requires a double extension within the fibration class.  Returns
    (verdict, certificate_pair): [Eq[f], Eq[g]] and [Eq[f] /\\ Eq[g], R \\/ S],
    both of which must be the diagonal.
    """
    is_ext, all_fib = is_double_extension(sq, limits)
    if not is_ext:
        raise PreconditionError("not a double extension")
    if not all_fib:
        raise PreconditionError("double centrality is decided within the fibration class")
    x = sq.x
    eq_f = kernel_pair(sq.left.hom)
    eq_g = kernel_pair(sq.top.hom)
    cert1 = commutator(x.alg, eq_f, eq_g, limits)
    cert2 = commutator(x.alg, meet(eq_f, eq_g), join(x.alg, x.r, x.s), limits)
    diag = Partition.diagonal(x.alg.size)
    return cert1 == diag and cert2 == diag, (cert1, cert2)


@dataclass(frozen=True)
class PullbackCube:
    """A double extension between double extensions: `back` is the
    componentwise pullback of `front` along the side square
    (gamma: U -> Z, h': U -> V, delta: V -> W, h: Z -> W), with connecting
    morphisms alpha: X̄ -> X and beta: Ȳ -> Y."""

    back: DoubleExtensionSquare
    front: DoubleExtensionSquare
    side: DoubleExtensionSquare
    alpha: TwoEqMorphism
    beta: TwoEqMorphism

    def __post_init__(self):
        gamma, delta = self.side.top, self.side.bottom
        checks = [
            (self.front.top.hom.map[self.alpha.hom.map],
             gamma.hom.map[self.back.top.hom.map], "g∘alpha = gamma∘g'"),
            (self.front.left.hom.map[self.alpha.hom.map],
             self.beta.hom.map[self.back.left.hom.map], "f∘alpha = beta∘f'"),
            (self.front.bottom.hom.map[self.beta.hom.map],
             delta.hom.map[self.back.bottom.hom.map], "j∘beta = delta∘j'"),
        ]
        for lhs, rhs, label in checks:
            if not np.array_equal(lhs, rhs):
                raise ValidationError(f"cube does not commute: {label}")


def build_pullback_cube(front: DoubleExtensionSquare, side: DoubleExtensionSquare,
                        limits: Limits = DEFAULT_LIMITS) -> PullbackCube:
    """Pull a double extension back along a side square.

    `side` holds gamma: U -> Z on top, h': U -> V on the left, delta: V -> W
    on the bottom, and must share its right edge h: Z -> W with `front`.
    Constructs X̄ = X x_Z U and Ȳ = Y x_W V concretely, with componentwise
    relations, and returns the full cube.
    """
    if side.right is not front.right and not np.array_equal(
            side.right.hom.map, front.right.hom.map):
        raise PreconditionError("side square must share the right edge h with the front")
    gamma, hprime, delta = side.top, side.left, side.bottom
    xbar, xb_pairs, alpha_h, gp_h = _fiber_product(
        front.top.hom, gamma.hom, limits, name="Xbar")
    ybar, yb_pairs, beta_h, jp_h = _fiber_product(
        front.bottom.hom, delta.hom, limits, name="Ybar")
    x_obj = _pullback_two_eq(front.x, gamma.source, xbar, xb_pairs)
    y_obj = _pullback_two_eq(front.bottom.source, delta.source, ybar, yb_pairs)
    alpha = TwoEqMorphism(x_obj, front.x, Homomorphism(xbar, front.x.alg, alpha_h))
    beta = TwoEqMorphism(y_obj, front.bottom.source,
                         Homomorphism(ybar, front.bottom.source.alg, beta_h))
    gprime = TwoEqMorphism(x_obj, gamma.source, Homomorphism(xbar, gamma.source.alg, gp_h))
    jprime = TwoEqMorphism(y_obj, delta.source, Homomorphism(ybar, delta.source.alg, jp_h))
    # f' : Xbar -> Ybar, (x, u) -> (f x, h' u)
    f = front.left.hom
    hp_map = hprime.hom.map
    y_index = {pq: i for i, pq in enumerate(map(tuple, yb_pairs.tolist()))}
    fp_map = [y_index[(int(f.map[x]), int(hp_map[u]))] for x, u in xb_pairs.tolist()]
    fprime = TwoEqMorphism(x_obj, y_obj, Homomorphism(xbar, ybar, fp_map))
    back = DoubleExtensionSquare(top=gprime, left=fprime, bottom=jprime, right=hprime)
    return PullbackCube(back=back, front=front, side=side, alpha=alpha, beta=beta)


def _fiber_product(g: Homomorphism, gamma: Homomorphism,
                   limits: Limits, name: str = ""):
    """Concrete pullback of g: X -> Z along gamma: U -> Z as a reindexed
    subalgebra of X x U; returns (algebra, pairs, proj_X, proj_U)."""
    if g.target.size != gamma.target.size:
        raise PreconditionError("fiber product needs a common codomain")
    pairs = [(x, u) for x in range(g.source.size) for u in range(gamma.source.size)
             if g.map[x] == gamma.map[u]]
    alg, arr = _mixed_pair_algebra(g.source, gamma.source, pairs, name, limits)
    return alg, arr, arr[:, 0].copy(), arr[:, 1].copy()


def _mixed_pair_algebra(a: FiniteAlgebra, b: FiniteAlgebra, pairs, name, limits):
    """Subalgebra of a x b on an explicit pair list, reindexed densely."""
    if a.signature() != b.signature():
        raise PreconditionError("signature mismatch in pullback")
    arr = np.array(sorted(set((int(x), int(y)) for x, y in pairs)), dtype=np.int32)
    m = arr.shape[0]
    if m == 0:
        raise PreconditionError("empty pullback carrier")
    if m > limits.max_carrier:
        raise PreconditionError(f"pullback carrier {m} exceeds limit {limits.max_carrier}")
    back = -np.ones((a.size, b.size), dtype=np.int32)
    back[arr[:, 0], arr[:, 1]] = np.arange(m, dtype=np.int32)
    ops = []
    for op_a in a.operations:
        op_b = b.op(op_a.name)
        k = op_a.arity
        if k == 0:
            val = back[op_a.table[0], op_b.table[0]]
            if val < 0:
                raise PreconditionError("pullback carrier misses a constant")
            table = np.array([val])
        else:
            grids = tuple(_arg_grids(m, k))
            xs = tuple(arr[g, 0] for g in grids)
            ys = tuple(arr[g, 1] for g in grids)
            table = back[op_a.view(a.size)[xs], op_b.view(b.size)[ys]]
            if (table < 0).any():
                raise PreconditionError("pullback carrier not closed (inconsistent data)")
        ops.append(Operation(op_a.name, k, table))
    alg = FiniteAlgebra(m, ops, a.maltsev_op, name=name or "pullback")
    return alg, arr


def _pullback_two_eq(o1: TwoEqObject, o2: TwoEqObject,
                     alg: FiniteAlgebra, pairs: np.ndarray) -> TwoEqObject:
    """Componentwise relations on a concrete pullback carrier."""
    r = Partition(o1.r.rep[pairs[:, 0]].astype(np.int64) * o2.alg.size
                  + o2.r.rep[pairs[:, 1]])
    s = Partition(o1.s.rep[pairs[:, 0]].astype(np.int64) * o2.alg.size
                  + o2.s.rep[pairs[:, 1]])
    return TwoEqObject(alg, r, s)


def pullback_square_stability_check(cube: PullbackCube,
                                    limits: Limits = DEFAULT_LIMITS) -> bool:
    """Property check: along a pullback of double extensions, the two
    commutator conditions transfer through the connecting map.

    Verifies alpha([Eq[f'], Eq[g']]) = [Eq[f], Eq[g]] and
    alpha([Eq[f'] /\\ Eq[g'], R' \\/ S']) = [Eq[f] /\\ Eq[g], R \\/ S] as
    equalities of partitions, and that both faces agree on double centrality.
    """
    back, front = cube.back, cube.front
    xb, xf = back.x, front.x
    alpha = cube.alpha.hom
    eq_fp = kernel_pair(back.left.hom)
    eq_gp = kernel_pair(back.top.hom)
    eq_f = kernel_pair(front.left.hom)
    eq_g = kernel_pair(front.top.hom)
    lhs1 = direct_image(alpha, commutator(xb.alg, eq_fp, eq_gp, limits))
    rhs1 = commutator(xf.alg, eq_f, eq_g, limits)
    lhs2 = direct_image(alpha, commutator(
        xb.alg, meet(eq_fp, eq_gp), join(xb.alg, xb.r, xb.s), limits))
    rhs2 = commutator(xf.alg, meet(eq_f, eq_g), join(xf.alg, xf.r, xf.s), limits)
    if lhs1 != rhs1 or lhs2 != rhs2:
        return False
    back_central, _ = is_double_central(back, limits)
    front_central, _ = is_double_central(front, limits)
    return back_central == front_central
