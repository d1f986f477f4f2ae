"""Convolution algebras on a graded space.

Three layers live here:

  * the unital associative series algebra (maps out of delta-powers,
    i.e. truncated series sum f_l z^l of arity-1 maps) with its star
    product, exponential and logarithm;
  * the series Lie algebra of degree-0 elements r(z) = sum r_l z^l
    (components of degree |r| + 2l) with its commutator bracket;
  * the hypercommutative convolution Lie algebra, realized on trees of
    arity-indexed cogenerators: weight-1 values are one multilinear map
    per arity, brackets are evaluated on generator trees by edge cuts.

A hypercommutative structure is a family of graded-symmetric maps nu_n of
degree 2(n-2).  Its Maurer-Cartan residual has a weight-1 part (each nu_n
must be a chain map) and a weight-2 part: the value of [alpha, alpha]/2 on
the pair-difference relation elements, whose infinitesimal decomposition
is sum over splits I join J = {1..n} with a fixed pair inside I.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .graded import (MultiMap, GradedSpace, ONE, ZERO, compose_at,
                     permute_inputs, induced_differential, koszul_sign,
                     rref, in_span, nullspace)
from . import trees


def compose_labeled(outer: MultiMap, outer_labels: Sequence[int], slot: int,
                    inner: MultiMap, inner_labels: Sequence[int]) -> MultiMap:
    """Graft inner (inputs = inner_labels, sorted) into slot of outer
    (inputs = outer_labels, sorted) and reorder inputs into the sorted
    union of labels, with Koszul signs.

    The slot label must equal min(inner_labels): it is the placeholder the
    inner block replaces.
    """
    outer_labels = list(outer_labels)
    inner_labels = list(inner_labels)
    if len(outer_labels) != outer.arity or len(inner_labels) != inner.arity:
        raise ValueError("label lists do not match arities")
    if outer_labels[slot - 1] != min(inner_labels):
        raise ValueError("slot label must be the minimum of the inner labels")
    composite = compose_at(outer, slot, inner)
    seq = outer_labels[:slot - 1] + inner_labels + outer_labels[slot:]
    target = sorted(seq)
    if len(set(seq)) != len(seq):
        raise ValueError("duplicate labels")
    sigma = tuple(seq.index(lab) + 1 for lab in target)
    return permute_inputs(composite, sigma)


# ---------------------------------------------------------------------------
# series algebra


class Series:
    """Truncated series of arity-1 maps: component l is the value on z^l.

    `element_degree`, when set, declares homogeneity: component l must have
    map degree element_degree + 2l.
    """

    def __init__(self, space: GradedSpace, order: int,
                 comps: Optional[dict] = None,
                 element_degree: Optional[int] = None):
        if order < 0:
            raise ValueError("truncation order must be >= 0")
        self.space = space
        self.order = int(order)
        self.comps: dict[int, MultiMap] = {}
        self.element_degree = element_degree
        for l, m in (comps or {}).items():
            if not 0 <= l <= order:
                raise ValueError(f"component {l} outside truncation order {order}")
            if m.arity != 1:
                raise ValueError("series components must have arity 1")
            if m.is_zero():
                continue
            if element_degree is not None and m.degree != element_degree + 2 * l:
                raise ValueError(
                    f"component {l} has degree {m.degree}, expected "
                    f"{element_degree + 2 * l}")
            self.comps[l] = m

    def comp(self, l: int) -> Optional[MultiMap]:
        return self.comps.get(l)

    def is_zero(self) -> bool:
        return not self.comps

    def positive_part(self) -> "Series":
        return Series(self.space, self.order,
                      {l: m for l, m in self.comps.items() if l >= 1},
                      self.element_degree)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        if self.space != other.space or self.order != other.order:
            return False
        keys = set(self.comps) | set(other.comps)
        for l in keys:
            a, b = self.comps.get(l), other.comps.get(l)
            if a is None or b is None:
                if (a or b) is not None and not (a or b).is_zero():
                    return False
            elif a != b:
                return False
        return True

    def __add__(self, other: "Series") -> "Series":
        self._check(other)
        comps = dict(self.comps)
        for l, m in other.comps.items():
            comps[l] = comps[l] + m if l in comps else m
        return Series(self.space, self.order, comps)

    def __neg__(self) -> "Series":
        return Series(self.space, self.order,
                      {l: -m for l, m in self.comps.items()})

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def scale(self, c) -> "Series":
        return Series(self.space, self.order,
                      {l: m.scale(c) for l, m in self.comps.items()})

    def map_components(self, fn) -> "Series":
        return Series(self.space, self.order,
                      {l: fn(m) for l, m in self.comps.items()})

    def _check(self, other: "Series"):
        if self.space != other.space:
            raise ValueError("series on different spaces")
        if self.order != other.order:
            raise ValueError(f"truncation mismatch: {self.order} vs {other.order}")

    def __repr__(self) -> str:
        if self.is_zero():
            return "Series(0)"
        return "Series(" + "; ".join(f"z^{l}: {m!r}" for l, m in
                                     sorted(self.comps.items())) + ")"


def unit_series(space: GradedSpace, order: int) -> Series:
    return Series(space, order, {0: MultiMap.identity(space)})


def differential_series(space: GradedSpace, order: int) -> Series:
    """The element sending 1 to d_A and every positive power to zero."""
    comps = {}
    if space.d is not None:
        comps[0] = space.d
    return Series(space, order, comps)


def star(f: Series, g: Series) -> Series:
    """Convolution product: (f star g)_l = sum f_i o g_j over i + j = l."""
    f._check(g)
    comps: dict[int, MultiMap] = {}
    for i, fi in f.comps.items():
        for j, gj in g.comps.items():
            l = i + j
            if l > f.order:
                continue
            term = compose_at(fi, 1, gj)
            comps[l] = comps[l] + term if l in comps else term
    return Series(f.space, f.order, comps)


def star_power(f: Series, k: int) -> Series:
    out = unit_series(f.space, f.order)
    for _ in range(k):
        out = star(out, f)
    return out


def exp_a(f: Series) -> Series:
    """Exponential for the star product; requires vanishing constant term."""
    if f.comp(0) is not None:
        raise ValueError("exp needs a series with zero constant term")
    out = unit_series(f.space, f.order)
    term = unit_series(f.space, f.order)
    for k in range(1, f.order + 1):
        term = star(term, f).scale(Fraction(1, k))
        out = out + term
    return out


def log_a(g: Series) -> Series:
    """Logarithm of a series with unit constant term; inverse of exp_a."""
    if g.comp(0) != MultiMap.identity(g.space):
        raise ValueError("log needs a series with unit constant term")
    x = g - unit_series(g.space, g.order)
    out = Series(g.space, g.order)
    term = unit_series(g.space, g.order)
    for k in range(1, g.order + 1):
        term = star(term, x)
        out = out + term.scale(Fraction((-1) ** (k + 1), k))
    return out


def star_inverse(g: Series) -> Series:
    """Two-sided star inverse of a series with unit constant term."""
    if g.comp(0) != MultiMap.identity(g.space):
        raise ValueError("inverse needs a unit constant term")
    space, order = g.space, g.order
    inv: dict[int, MultiMap] = {0: MultiMap.identity(space)}
    for l in range(1, order + 1):
        acc = None
        for j in range(1, l + 1):
            gj = g.comp(j)
            hi = inv.get(l - j)
            if gj is None or hi is None:
                continue
            term = compose_at(gj, 1, hi)
            acc = term if acc is None else acc + term
        if acc is not None:
            inv[l] = -acc
    return Series(space, order, inv)


def bracket_gd(f: Series, g: Series) -> Series:
    """Commutator bracket on truncated series of positive z-order.

    Requires declared element degrees; [f,g]_l collects f_i o g_j minus
    (-1)^{|f||g|} g_i o f_j over i + j = l, i, j >= 1.
    """
    f._check(g)
    if f.element_degree is None or g.element_degree is None:
        raise ValueError("bracket needs declared element degrees")
    sign = -1 if (f.element_degree % 2 and g.element_degree % 2) else 1
    comps: dict[int, MultiMap] = {}
    for i, fi in f.comps.items():
        for j, gj in g.comps.items():
            if i == 0 or j == 0 or i + j > f.order:
                continue
            term = compose_at(fi, 1, gj) - sign * compose_at(gj, 1, fi)
            l = i + j
            comps[l] = comps[l] + term if l in comps else term
    out = Series(f.space, f.order, comps)
    out.element_degree = f.element_degree + g.element_degree
    return out


def series_commutes_with_d(f: Series) -> bool:
    d = f.space.d
    if d is None:
        return True
    for m in f.comps.values():
        if not (compose_at(d, 1, m) - compose_at(m, 1, d)).is_zero():
            return False
    return True


def trivialization_check(phi: Series, f: Series) -> tuple[bool, Series]:
    """Exact check of (1 + f) star (phi + del) = del star (1 + f).

    `phi` is a Maurer-Cartan series (components l >= 1, degree 2l - 1),
    `f` a degree-0 series (components l >= 1, degree 2l), `del` the
    constant series at the differential of the space.
    """
    phi._check(f)
    space, order = phi.space, phi.order
    one_f = unit_series(space, order) + f
    partial = differential_series(space, order)
    lhs = star(one_f, phi + partial)
    rhs = star(partial, one_f)
    defect = lhs - rhs
    return defect.is_zero(), defect


# ---------------------------------------------------------------------------
# hypercommutative structures


class HyperComStructure:
    """Family nu_2..nu_N of graded-symmetric maps, nu_n of degree 2(n-2)."""

    def __init__(self, space: GradedSpace, operations: dict,
                 check_symmetry: bool = True):
        self.space = space
        self.nu: dict[int, MultiMap] = {}
        for n, m in operations.items():
            n = int(n)
            if n < 2:
                raise ValueError("operations start at arity 2")
            if m.arity != n:
                raise ValueError(f"operation at key {n} has arity {m.arity}")
            if m.table and m.degree != 2 * (n - 2):
                raise ValueError(
                    f"nu_{n} must have degree {2 * (n - 2)}, got {m.degree}")
            self.nu[n] = m
        if not self.nu:
            raise ValueError("at least nu_2 is required")
        if check_symmetry:
            for n, m in self.nu.items():
                for k in range(1, n):
                    swap = tuple(range(1, n + 1))
                    swap = swap[:k - 1] + (k + 1, k) + swap[k + 1:]
                    if permute_inputs(m, swap) != m:
                        raise ValueError(f"nu_{n} is not graded-symmetric")

    @property
    def max_arity(self) -> int:
        return max(self.nu)

    def op(self, n: int) -> MultiMap:
        if n in self.nu:
            return self.nu[n]
        return MultiMap.zero(self.space, n, 2 * (n - 2))

    def map_coefficients(self, fn) -> "HyperComStructure":
        return HyperComStructure(
            self.space, {n: m.map_coefficients(fn) for n, m in self.nu.items()},
            check_symmetry=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HyperComStructure):
            return NotImplemented
        arities = set(self.nu) | set(other.nu)
        return self.space == other.space and all(
            self.op(n) == other.op(n) for n in arities)

    def __repr__(self) -> str:
        return f"HyperComStructure(arities {sorted(self.nu)})"


# ---------------------------------------------------------------------------
# the cogenerator-tree model of the hypercommutative convolution algebra
#
# A formal tree is a nested tuple whose internal vertices stand for the
# arity-m cogenerator (degree 2m - 3); leaves are labels.  Children are
# kept sorted by minimal label.  Maps out of the cooperad are stored by
# their weight-1 values (one map per arity, inputs in sorted label order);
# brackets are evaluated on formal trees through edge cuts.


def formal_vertex_degrees(t) -> list[int]:
    return [2 * len(subtree_children(t, p)) - 3 for p in trees.preorder_paths(t)]


def subtree_children(t, path) -> tuple:
    return trees.subtree_at(t, path)


def formal_degree(t) -> int:
    return sum(formal_vertex_degrees(t))


def corolla_tree(labels: Iterable[int]):
    labs = tuple(sorted(labels))
    if len(labs) < 2:
        raise ValueError("cogenerators have arity >= 2")
    return labs


def two_vertex_tree(inner_labels: Iterable[int], all_labels: Iterable[int]):
    """Root cogenerator on the outer labels with one child cogenerator."""
    inner = frozenset(inner_labels)
    outer = frozenset(all_labels) - inner
    if len(inner) < 2 or not outer:
        raise ValueError("need |inner| >= 2 and a nonempty outer part")
    children = sorted(outer) + [corolla_tree(inner)]
    children.sort(key=trees.min_leaf)
    return tuple(children)


def enumerate_formal_trees(labels: frozenset, nv: int) -> list:
    """All formal trees on the label set with exactly nv cogenerator
    vertices (children canonically ordered by minimal label)."""
    labels = frozenset(labels)
    if nv == 1:
        return [corolla_tree(labels)] if len(labels) >= 2 else []
    out = []
    for partition in _set_partitions(sorted(labels)):
        if len(partition) < 2:
            continue
        for sizes in _compositions(nv - 1, len(partition)):
            branch_choices = []
            ok = True
            for block, v in zip(partition, sizes):
                if v == 0:
                    if len(block) != 1:
                        ok = False
                        break
                    branch_choices.append([block[0]])
                else:
                    subs = enumerate_formal_trees(frozenset(block), v)
                    if not subs:
                        ok = False
                        break
                    branch_choices.append(subs)
            if not ok:
                continue
            for combo in itertools.product(*branch_choices):
                children = sorted(combo, key=trees.min_leaf)
                out.append(tuple(children))
    return out


def _set_partitions(items: list) -> list[list[list]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        out.append([[first]] + [list(b) for b in part])
        for i in range(len(part)):
            clone = [list(b) for b in part]
            clone[i] = [first] + clone[i]
            out.append(clone)
    return out


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            out.append((head,) + tail)
    return out


class FormalSum:
    """Rational combination of formal trees (a coelement presentation)."""

    def __init__(self, terms: Optional[dict] = None):
        self.terms = {t: c for t, c in (terms or {}).items() if c}

    def __add__(self, other):
        terms = dict(self.terms)
        for t, c in other.terms.items():
            terms[t] = terms.get(t, ZERO) + c
        return FormalSum(terms)

    def __sub__(self, other):
        return self + FormalSum({t: -c for t, c in other.terms.items()})

    def scale(self, c):
        return FormalSum({t: c * v for t, v in self.terms.items()})

    def items(self):
        return self.terms.items()

    def is_zero(self):
        return not self.terms


class HcMap:
    """Map out of the cogenerator trees, supported on single vertices.

    `comps[n]` is the value on the arity-n cogenerator, inputs in sorted
    label order.  `element_degree` is |value| - |cogenerator| and must be
    uniform (cogenerator degree is 2n - 3).
    """

    def __init__(self, space: GradedSpace, comps: dict,
                 element_degree: Optional[int] = None):
        self.space = space
        self.comps = {int(n): m for n, m in comps.items() if not m.is_zero()}
        degs = {m.degree - (2 * n - 3) for n, m in self.comps.items()}
        if element_degree is None:
            if len(degs) > 1:
                raise ValueError("inhomogeneous values need an explicit degree")
            element_degree = degs.pop() if degs else -1
        elif degs - {element_degree}:
            raise ValueError("component degrees disagree with element degree")
        self.element_degree = element_degree

    @classmethod
    def from_structure(cls, alpha: HyperComStructure) -> "HcMap":
        return cls(alpha.space, dict(alpha.nu), element_degree=-1)

    @classmethod
    def from_components(cls, space: GradedSpace, comps: dict,
                        element_degree: int = -1) -> "HcMap":
        return cls(space, comps, element_degree)

    def value(self, ftree) -> Optional[MultiMap]:
        """Value on a formal tree, inputs in sorted label order; None if the
        tree is outside the support."""
        if trees.is_leaf(ftree):
            return None
        if all(trees.is_leaf(c) for c in ftree):
            return self.comps.get(len(ftree))
        return None

    def value_on_sum(self, x: FormalSum, arity: int,
                     degree_hint: Optional[int] = None) -> MultiMap:
        acc = None
        for t, c in x.items():
            v = self.value(t)
            if v is None:
                continue
            acc = v.scale(c) if acc is None else acc + v.scale(c)
        if acc is None:
            deg = degree_hint if degree_hint is not None else 0
            return MultiMap.zero(self.space, arity, deg)
        return acc


class BracketMap:
    """Convolution Lie bracket of two cogenerator-tree maps.

    Values on a formal tree t are computed from all edge cuts:
      [f, g](t) = sum over cuts of
          sign(cut) * ( (-1)^{|g| |lower|} graft(f(lower), g(upper))
            - (-1)^{|f||g|} (-1)^{|f| |lower|} graft(g(lower), f(upper)) )
    where graft composes at the cut slot and reorders inputs by label.
    """

    def __init__(self, f, g):
        if f.space != g.space:
            raise ValueError("maps on different spaces")
        self.space = f.space
        self.f = f
        self.g = g
        self.element_degree = f.element_degree + g.element_degree

    def value(self, ftree) -> Optional[MultiMap]:
        if trees.is_leaf(ftree):
            return None
        n = trees.nleaves(ftree)
        degs = formal_vertex_degrees(ftree)
        swap = -1 if (self.f.element_degree % 2 and self.g.element_degree % 2) else 1
        acc: Optional[MultiMap] = None
        for cut, sign in trees.edge_cut_decompositions(ftree, degs):
            lower, upper, slot = cut.lower, cut.upper, cut.slot
            lower_deg = sum(degs[:cut.block_start]) + sum(
                degs[cut.block_start + cut.block_size:])
            lo_labels = sorted(trees.leaves(lower))
            up_labels = sorted(trees.leaves(upper))
            for a, b, pref in ((self.f, self.g, 1), (self.g, self.f, -swap)):
                va = a.value(lower)
                vb = b.value(upper)
                if va is None or vb is None:
                    continue
                s_app = -1 if (b.element_degree % 2 and lower_deg % 2) else 1
                term = compose_labeled(va, lo_labels, slot, vb, up_labels)
                term = term.scale(pref * sign * s_app)
                acc = term if acc is None else acc + term
        if acc is None:
            return None
        return acc

    def value_on_sum(self, x: FormalSum, arity: int,
                     degree_hint: Optional[int] = None) -> MultiMap:
        acc = None
        for t, c in x.items():
            v = self.value(t)
            if v is None:
                continue
            acc = v.scale(c) if acc is None else acc + v.scale(c)
        if acc is None:
            deg = degree_hint if degree_hint is not None else 0
            return MultiMap.zero(self.space, arity, deg)
        return acc


def bracket_hc(f, g) -> BracketMap:
    """The convolution Lie bracket; evaluate via .value / .value_on_sum."""
    return BracketMap(f, g)


# ---------------------------------------------------------------------------
# relation elements and the Maurer-Cartan residual


def pair_split_sum(n: int, pair: tuple[int, int]) -> FormalSum:
    """Sum of the two-vertex trees over splits I join J = {1..n} with the
    given pair inside I, |I| >= 2 and J nonempty."""
    a, b = pair
    labels = frozenset(range(1, n + 1))
    rest = sorted(labels - {a, b})
    terms = {}
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            inner = frozenset({a, b} | set(extra))
            if len(inner) >= n:
                continue
            terms[two_vertex_tree(inner, labels)] = ONE
    return FormalSum(terms)


def relation_element(n: int, pair_a: tuple[int, int] = (1, 2),
                     pair_b: tuple[int, int] = (1, 3)) -> FormalSum:
    """Weight-2 relation element: the pair-split sums for two pairs differ
    by an exact relation of hypercommutative structures."""
    if n < 3:
        raise ValueError("relations start at arity 3")
    return pair_split_sum(n, pair_a) - pair_split_sum(n, pair_b)


@dataclass
class MCReport:
    """Per-arity Maurer-Cartan defects: chain-map part and relation part."""

    chain: dict = field(default_factory=dict)
    relation: dict = field(default_factory=dict)

    def is_zero(self) -> bool:
        return (all(m.is_zero() for m in self.chain.values())
                and all(m.is_zero() for m in self.relation.values()))

    def first_failure(self) -> Optional[str]:
        for n, m in sorted(self.chain.items()):
            if not m.is_zero():
                return f"chain-map defect at arity {n}: {m!r}"
        for n, m in sorted(self.relation.items()):
            if not m.is_zero():
                return f"relation defect at arity {n}: {m!r}"
        return None


def mc_residual(alpha: HyperComStructure, max_arity: Optional[int] = None) -> MCReport:
    """Defect of the Maurer-Cartan equation for alpha, arity by arity.

    Weight 1: the differential of each nu_n (zero when d_A is absent).
    Weight 2: [alpha, alpha]/2 on the relation elements; at arity 3 this is
    the associator defect of nu_2.
    """
    N = max_arity or alpha.max_arity
    rep = MCReport()
    amap = HcMap.from_structure(alpha)
    br = bracket_hc(amap, amap)
    for n in range(2, N + 1):
        rep.chain[n] = induced_differential(alpha.op(n))
    for n in range(3, N + 1):
        rel = relation_element(n)
        val = br.value_on_sum(rel, n, degree_hint=2 * (n - 3))
        rep.relation[n] = val.scale(Fraction(1, 2))
    return rep


class MCError(ValueError):
    """Raised when an operation requires a Maurer-Cartan structure."""


def require_mc(alpha: HyperComStructure, max_arity: Optional[int] = None):
    rep = mc_residual(alpha, max_arity)
    if not rep.is_zero():
        raise MCError(f"structure is not Maurer-Cartan: {rep.first_failure()}")
    return rep


# ---------------------------------------------------------------------------
# weight-3 relation elements (for the square-zero property of the twisted
# differential); computed as the kernel of the projection of the one-cut
# expansion to the quotient by the weight-2 relation span.


def _relation_span_rows(labels: tuple[int, ...], basis_index: dict) -> list:
    labs = list(labels)
    n = len(labs)
    rows = []
    base_pair = (labs[0], labs[1])
    for other in labs[2:]:
        diff = (pair_split_sum_on(labs, base_pair)
                - pair_split_sum_on(labs, (labs[0], other)))
        row = [ZERO] * len(basis_index)
        for t, c in diff.items():
            row[basis_index[t]] = c
        rows.append(row)
    return rows


def pair_split_sum_on(labels: Sequence[int], pair: tuple[int, int]) -> FormalSum:
    labels = frozenset(labels)
    a, b = pair
    rest = sorted(labels - {a, b})
    terms = {}
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            inner = frozenset({a, b} | set(extra))
            if len(inner) >= len(labels):
                continue
            terms[two_vertex_tree(inner, labels)] = ONE
    return FormalSum(terms)


@lru_cache(maxsize=None)
def weight3_relation_elements(n: int) -> tuple:
    """Basis of the weight-3 coelements at arity n: combinations of 3-vertex
    cogenerator trees whose one-cut channels all land in the weight-2
    relation spans.  Returned as FormalSum instances."""
    labels = frozenset(range(1, n + 1))
    basis3 = enumerate_formal_trees(labels, 3)
    if not basis3:
        return ()
    index3 = {t: i for i, t in enumerate(basis3)}
    # channel coordinates: (kind, fixed factor, labeled 2-vertex tree)
    coords: dict = {}
    rows_by_tree: list[dict] = []
    for t in basis3:
        degs = formal_vertex_degrees(t)
        acc: dict = {}
        for cut, sign in trees.edge_cut_decompositions(t, degs):
            lower, upper = cut.lower, cut.upper
            nv_low = trees.nvertices(lower)
            if nv_low == 2:
                key = ("upper", upper, lower)
            else:
                key = ("lower", lower, upper)
            acc[key] = acc.get(key, ZERO) + sign
        rows_by_tree.append(acc)
    # quotient each channel family by the relation span of its 2-vertex side
    channel_keys = sorted({k for row in rows_by_tree for k in row},
                          key=lambda k: (k[0], str(k[1]), str(k[2])))
    families: dict = {}
    for kind, fixed, twov in channel_keys:
        fam = families.setdefault((kind, fixed), set())
        fam.add(twov)
    constraint_rows = []
    for (kind, fixed), twovs in sorted(families.items(),
                                       key=lambda kv: (kv[0][0], str(kv[0][1]))):
        twovs = sorted(twovs, key=str)
        labs = tuple(sorted(trees.leaves(twovs[0])))
        all_twov = enumerate_formal_trees(frozenset(labs), 2)
        t2index = {t: i for i, t in enumerate(all_twov)}
        rel_rows = rref(_relation_span_rows(labs, t2index))
        # complement coordinates: for each 3-vertex tree, the channel vector
        # reduced modulo rel_rows must vanish.
        for col_probe in range(len(all_twov)):
            row = []
            for t, acc in zip(basis3, rows_by_tree):
                vec = [ZERO] * len(all_twov)
                for (k_kind, k_fixed, k_twov), c in acc.items():
                    if (k_kind, k_fixed) == (kind, fixed):
                        vec[t2index[k_twov]] = c
                # reduce modulo the relation span
                for r in rel_rows:
                    lead = next(j for j, x in enumerate(r) if x)
                    if vec[lead]:
                        f = vec[lead]
                        for j in range(len(vec)):
                            vec[j] -= f * r[j]
                row.append(vec[col_probe])
            if any(row):
                constraint_rows.append(row)
    if not constraint_rows:
        solutions = [[ONE if i == j else ZERO for j in range(len(basis3))]
                     for i in range(len(basis3))]
    else:
        solutions = nullspace(constraint_rows, len(basis3))
    out = []
    for sol in solutions:
        out.append(FormalSum({t: c for t, c in zip(basis3, sol) if c}))
    return tuple(out)
