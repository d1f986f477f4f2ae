"""Decorated-tree calculus: the coderivation d_psi, the weighted homotopy H,
the arity-n generators, and edge-cut channel data.

A decorated tree is a shuffle binary tree whose vertices carry one of two
labels: "m" (degree 1) or "b" (degree 2), stored in pre-order.  Rational
linear combinations are held in TreeSum.  The sign of any operation acting
at a vertex is (-1)^(sum of the degrees of the decorations strictly before
that vertex in pre-order); this convention reproduces the two-term worked
example of the weighted homotopy exactly (coefficients 3/5 and -1/5) and
makes d_psi square to zero.

The working subspace W(n) is the span generated from the all-"b" sum over
shuffle binary trees by d_psi, the homotopy, and edge-cut channel factors.
On it the retract identity d_psi H + H d_psi = id holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .graded import ONE, ZERO, Fraction, in_span, rref
from . import trees

MU = "m"
BETA = "b"
LABEL_DEGREE = {MU: 1, BETA: 2}


@dataclass(frozen=True)
class DecTree:
    """Shuffle binary tree with a vertex decoration per pre-order slot."""

    shape: object
    labels: tuple[str, ...]

    def __post_init__(self):
        if not trees.is_binary(self.shape):
            raise ValueError("decorated trees must be binary")
        if len(self.labels) != trees.nvertices(self.shape):
            raise ValueError("one label per internal vertex required")
        if any(lab not in LABEL_DEGREE for lab in self.labels):
            raise ValueError(f"labels must be in {set(LABEL_DEGREE)}")

    @property
    def arity(self) -> int:
        return trees.nleaves(self.shape)

    @property
    def degree(self) -> int:
        return sum(LABEL_DEGREE[lab] for lab in self.labels)

    @property
    def mu_count(self) -> int:
        return self.labels.count(MU)

    @property
    def beta_count(self) -> int:
        return self.labels.count(BETA)

    def leaf_labels(self) -> tuple[int, ...]:
        return tuple(sorted(trees.leaves(self.shape)))

    def std(self) -> "DecTree":
        shape, _ = trees.std_relabel(self.shape)
        return DecTree(shape, self.labels)

    def __repr__(self) -> str:
        return format_tree(self)


def format_tree(t: DecTree) -> str:
    """Stable text notation: vertex label, then children in parentheses."""
    labels = list(t.labels)

    def walk(node):
        if trees.is_leaf(node):
            return str(node)
        lab = labels.pop(0)
        return f"{lab}(" + ",".join(walk(c) for c in node) + ")"

    return walk(t.shape)


def corolla(label: str, leaf_a: int = 1, leaf_b: int = 2) -> DecTree:
    return DecTree((leaf_a, leaf_b), (label,))


class TreeSum:
    """Canonical rational linear combination of decorated trees, one arity."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms: Optional[dict] = None):
        self.arity = int(arity)
        clean = {}
        for t, c in (terms or {}).items():
            if not c:
                continue
            if t.arity != self.arity:
                raise ValueError("mixed arities in one tree sum")
            clean[t] = c
        self.terms = clean

    @classmethod
    def of(cls, t: DecTree, coeff=ONE) -> "TreeSum":
        return cls(t.arity, {t: coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (isinstance(other, TreeSum) and self.arity == other.arity
                and self.terms == other.terms)

    def __add__(self, other: "TreeSum") -> "TreeSum":
        if other.arity != self.arity:
            raise ValueError("mixed arities")
        terms = dict(self.terms)
        for t, c in other.terms.items():
            terms[t] = terms.get(t, ZERO) + c
        return TreeSum(self.arity, terms)

    def __neg__(self) -> "TreeSum":
        return TreeSum(self.arity, {t: -c for t, c in self.terms.items()})

    def __sub__(self, other: "TreeSum") -> "TreeSum":
        return self + (-other)

    def scale(self, c) -> "TreeSum":
        return TreeSum(self.arity, {t: c * v for t, v in self.terms.items()})

    def __rmul__(self, c) -> "TreeSum":
        return self.scale(c)

    def std(self) -> "TreeSum":
        return TreeSum(self.arity, {t.std(): c for t, c in self.terms.items()})

    def items(self):
        return self.terms.items()

    def __repr__(self) -> str:
        return format_sum(self)


def format_sum(x: TreeSum) -> str:
    if x.is_zero():
        return "0"
    parts = []
    for t in sorted(x.terms, key=format_tree):
        c = x.terms[t]
        parts.append(f"{c} * {format_tree(t)}")
    return "  +  ".join(parts)


def _prefix_sign(labels: tuple[str, ...], idx: int) -> int:
    before = sum(LABEL_DEGREE[lab] for lab in labels[:idx])
    return -1 if before % 2 else 1


def _as_sum(x) -> TreeSum:
    return TreeSum.of(x) if isinstance(x, DecTree) else x


def d_psi(x) -> TreeSum:
    """Signed sum over the mu-vertices, each replaced by beta (degree +1)."""
    x = _as_sum(x)
    out = TreeSum(x.arity)
    for t, c in x.items():
        for idx, lab in enumerate(t.labels):
            if lab != MU:
                continue
            labels = t.labels[:idx] + (BETA,) + t.labels[idx + 1:]
            out = out + TreeSum.of(DecTree(t.shape, labels),
                                   _prefix_sign(t.labels, idx) * c)
    return out


def h_map(x) -> TreeSum:
    """Weighted homotopy: each beta-vertex v replaced by mu, with coefficient
    weight(v) / C(n, 2) and the Koszul sign (degree -1)."""
    x = _as_sum(x)
    out = TreeSum(x.arity)
    denom = Fraction(math.comb(x.arity, 2))
    for t, c in x.items():
        weights = trees.vertex_weights(t.shape)
        for idx, lab in enumerate(t.labels):
            if lab != BETA:
                continue
            labels = t.labels[:idx] + (MU,) + t.labels[idx + 1:]
            coeff = _prefix_sign(t.labels, idx) * c * weights[idx] / denom
            out = out + TreeSum.of(DecTree(t.shape, labels), coeff)
    return out


def hd_psi(x) -> TreeSum:
    """The projection H d_psi (delta-degree-zero part of the retract)."""
    return h_map(d_psi(x))


def retract_defect(x) -> TreeSum:
    """x - (H d_psi(x) + d_psi H(x)); zero on the working subspace."""
    x = _as_sum(x)
    return x - hd_psi(x) - d_psi(h_map(x))


@lru_cache(maxsize=None)
def all_beta_sum(n: int) -> TreeSum:
    """Sum of all shuffle binary trees with every vertex labelled beta."""
    if n < 2:
        raise ValueError("arity must be >= 2")
    terms = {}
    for shape in trees.enumerate_sbt(n):
        deco = DecTree(shape, (BETA,) * (n - 1))
        terms[deco] = ONE
    return TreeSum(n, terms)


@lru_cache(maxsize=None)
def hypercom_generator(n: int) -> TreeSum:
    """The arity-n generator b_n = H(sum of all-beta shuffle trees).

    Every term carries exactly one mu; the coefficients are the vertex
    weights divided by C(n, 2), all positive.
    """
    return h_map(all_beta_sum(n))


# ---------------------------------------------------------------------------
# edge cuts of decorated trees


@dataclass(frozen=True)
class DecCut:
    lower: DecTree
    upper: DecTree
    slot: int
    sign: int

    @property
    def upper_leaves(self) -> frozenset:
        return trees.leaf_set(self.upper.shape)


def dec_cuts(t: DecTree) -> list[DecCut]:
    """Two-factor decompositions of a decorated tree, with Koszul signs.

    The sign moves the upper factor's decorations (contiguous in pre-order)
    to the right, past the lower decorations that follow them.
    """
    degs = [LABEL_DEGREE[lab] for lab in t.labels]
    out = []
    for cut, sign in trees.edge_cut_decompositions(t.shape, degs):
        i, sz = cut.block_start, cut.block_size
        upper_labels = t.labels[i:i + sz]
        lower_labels = t.labels[:i] + t.labels[i + sz:]
        out.append(DecCut(DecTree(cut.lower, lower_labels),
                          DecTree(cut.upper, upper_labels),
                          cut.slot, sign))
    return out


@dataclass(frozen=True)
class DeltaTerm:
    """One projected decomposition term: lower and upper factors were pushed
    through H d_psi; `coeff` collects the source coefficient and cut sign."""

    lower: TreeSum
    slot: int
    upper: TreeSum
    coeff: Fraction


def hypercom_delta1(x) -> list[DeltaTerm]:
    """Termwise edge cuts with both factors projected by H d_psi.

    This realizes the infinitesimal decomposition of the quotient model on
    the image of H d_psi.  On weight-[1] inputs every term dies (one factor
    is all-beta, which the projection kills): generators are primitive.
    """
    x = _as_sum(x)
    out = []
    for t, c in x.items():
        for cut in dec_cuts(t):
            lo = hd_psi(cut.lower)
            up = hd_psi(cut.upper)
            if lo.is_zero() or up.is_zero():
                continue
            out.append(DeltaTerm(lo, cut.slot, up, cut.sign * c))
    return out


# ---------------------------------------------------------------------------
# channel extraction for the generator sums


def proportional_coeff(x: TreeSum, y: TreeSum) -> Fraction:
    """The exact scalar c with x = c * y; raises if x is not a multiple."""
    if y.is_zero():
        raise ValueError("cannot divide by the zero tree sum")
    if x.is_zero():
        return ZERO
    if set(x.terms) != set(y.terms):
        raise ValueError("tree sums have different supports")
    ratios = {x.terms[t] / y.terms[t] for t in x.terms}
    if len(ratios) != 1:
        raise ValueError("tree sums are not proportional")
    return ratios.pop()


@dataclass(frozen=True)
class Channel:
    """Edge-cut channel of the arity-n generator for one upper leaf set.

    c_upper: coefficient of the standardized upper mu-block against the
             lower-arity generator (the mu-in-upper half);
    c_lower: coefficient of the projected lower mu-block against the
             generator of arity |J|+1 (the mu-in-lower half).
    Both come out of exact tree computations, never from a closed formula.
    """

    upper_leaves: frozenset
    slot: int
    c_upper: Fraction
    c_lower: Fraction


class ChannelError(ValueError):
    """A generator channel failed to factor; signals a convention bug."""


def _rank_one_factor(pairs: dict) -> tuple[dict, dict]:
    """Split {(lower, upper): coeff} as product L[lower] * U[upper], with the
    lower side normalized to coefficient one.  Raises ChannelError if the
    support is not a full product or the matrix has rank > 1."""
    lowers = sorted({lo for lo, _ in pairs}, key=format_tree)
    uppers = sorted({up for _, up in pairs}, key=format_tree)
    if set(pairs) != {(lo, up) for lo in lowers for up in uppers}:
        raise ChannelError("channel support is not a full product")
    l0, u0 = lowers[0], uppers[0]
    base = pairs[(l0, u0)]
    for lo in lowers:
        for up in uppers:
            if pairs[(lo, up)] * base != pairs[(lo, u0)] * pairs[(l0, up)]:
                raise ChannelError("channel coefficients have rank > 1")
    scale = pairs[(l0, u0)] / pairs[(l0, u0)]  # one, kept for clarity
    L = {lo: pairs[(lo, u0)] / pairs[(l0, u0)] for lo in lowers}
    U = {up: pairs[(l0, up)] * scale for up in uppers}
    if any(v != ONE for v in L.values()):
        raise ChannelError("lower factor is not an unweighted sum")
    return L, U


@lru_cache(maxsize=None)
def generator_channels(n: int) -> dict:
    """Cut the arity-n generator and factor each leaf-set channel exactly.

    For every upper leaf set I the mu-in-upper terms must form
    (all-beta sum over J cup {min I}) tensor (c_upper * generator of |I|),
    and the mu-in-lower terms, projected by H d_psi, must give
    (c_lower * generator of |J|+1) tensor (all-beta sum over I).
    The extracted weights drive the comb evaluation; they are verified
    termwise here rather than assumed.
    """
    b = hypercom_generator(n)
    upper_mu: dict[frozenset, dict] = {}
    lower_mu: dict[frozenset, dict] = {}
    slots: dict[frozenset, int] = {}
    for t, c in b.items():
        for cut in dec_cuts(t):
            key = cut.upper_leaves
            slots.setdefault(key, cut.slot)
            if slots[key] != cut.slot:
                raise ChannelError("inconsistent slot inside one channel")
            bucket = upper_mu if cut.upper.mu_count == 1 else lower_mu
            if cut.upper.mu_count + cut.lower.mu_count != 1:
                raise ChannelError("generator term without exactly one mu")
            entry = bucket.setdefault(key, {})
            pair = (cut.lower, cut.upper)
            entry[pair] = entry.get(pair, ZERO) + cut.sign * c
    channels = {}
    for key in sorted(upper_mu, key=sorted):
        m_up = len(key)
        m_low = n - m_up + 1
        L, U = _rank_one_factor(upper_mu[key])
        lower_sum = TreeSum(m_low, {lo: c for lo, c in L.items()}).std()
        if lower_sum != all_beta_sum(m_low):
            raise ChannelError("mu-in-upper lower block is not the all-beta sum")
        upper_sum = TreeSum(m_up, dict(U)).std()
        c_upper = proportional_coeff(upper_sum, hypercom_generator(m_up))
        # mu-in-lower half: normalize the (all-beta) upper side instead.
        flipped = {(up, lo): c for (lo, up), c in lower_mu[key].items()}
        Uf, Lf = _rank_one_factor(flipped)
        upper_beta = TreeSum(m_up, dict(Uf)).std()
        if upper_beta != all_beta_sum(m_up):
            raise ChannelError("mu-in-lower upper block is not the all-beta sum")
        lower_block = TreeSum(m_low, dict(Lf)).std()
        c_lower = proportional_coeff(hd_psi(lower_block),
                                     hypercom_generator(m_low))
        channels[key] = Channel(key, slots[key], c_upper, c_lower)
    return channels


# ---------------------------------------------------------------------------
# working subspace

def _coords(x: TreeSum, basis: list[DecTree]) -> list[Fraction]:
    return [x.terms.get(t, ZERO) for t in basis]


def working_subspace(n: int, max_rounds: int = 8) -> list[TreeSum]:
    """Spanning elements of W(n): closure of the all-beta sum under d_psi,
    the homotopy, and edge-cut channel factors (which land in lower arity
    and are produced standardized)."""
    seeds = [all_beta_sum(n)]
    span: list[TreeSum] = []
    basis_trees: list[DecTree] = []
    reduced_rows: list[list[Fraction]] = []

    def consider(x: TreeSum) -> bool:
        if x.is_zero():
            return False
        for t in x.terms:
            if t not in basis_trees:
                basis_trees.append(t)
        for row in reduced_rows:
            row.extend([ZERO] * (len(basis_trees) - len(row)))
        vec = _coords(x, basis_trees)
        if reduced_rows and in_span(vec, reduced_rows):
            return False
        reduced_rows[:] = rref(reduced_rows + [vec])
        span.append(x)
        return True

    frontier = [s for s in seeds if consider(s)]
    for _ in range(max_rounds):
        new: list[TreeSum] = []
        for x in frontier:
            for y in (d_psi(x), h_map(x)):
                if consider(y):
                    new.append(y)
        if not new:
            break
        frontier = new
    return span


@dataclass(frozen=True)
class CooperadElement:
    """A delta-power tensored with a tree sum (or a bare power in arity 1)."""

    delta_power: int
    body: Optional[TreeSum] = None

    def __post_init__(self):
        if self.delta_power < 0:
            raise ValueError("delta power must be >= 0")

    @property
    def degree(self) -> int:
        body_deg = 0
        if self.body is not None and not self.body.is_zero():
            degs = {t.degree for t in self.body.terms}
            if len(degs) != 1:
                raise ValueError("inhomogeneous tree sum")
            body_deg = degs.pop()
        return 2 * self.delta_power + body_deg


def d_phi(x: CooperadElement) -> CooperadElement:
    """The coderivation delta^{-1} d_psi: lowers the delta power by one and
    applies d_psi to the tree part; zero in delta-degree zero."""
    if x.delta_power == 0 or x.body is None:
        return CooperadElement(max(x.delta_power - 1, 0),
                               TreeSum(x.body.arity) if x.body else None)
    return CooperadElement(x.delta_power - 1, d_psi(x.body))
