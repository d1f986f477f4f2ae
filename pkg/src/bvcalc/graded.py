"""Exact graded linear algebra over the rationals.

Everything here is exact: coefficients are `fractions.Fraction` by default
(any commutative ring element with +, -, *, == and truthiness works, e.g.
FlowPoly or DualNumber below), homological degrees are plain ints, and no
float ever appears.

Conventions, fixed once and used by every other module:

  * degrees are homological; the degree of a map is |f(x)| - |x|;
  * ``koszul_sign(perm, degrees)`` is the sign produced when the ordered
    tuple (x_1, ..., x_n) of graded symbols is rearranged into
    (x_{perm(1)}, ..., x_{perm(n)}); each adjacent swap of two odd symbols
    contributes -1;
  * partial composition carries the sign
    (f o_i g)(x_1..x_{m+n-1}) = (-1)^{|g| (|x_1|+...+|x_{i-1}|)}
                                f(x_1, .., g(x_i, .., x_{i+n-1}), ..);
  * input permutation acts on the right:
    (f^s)(x_1..x_n) = koszul_sign(s, degrees) * f(x_{s(1)}, .., x_{s(n)}).

All values are immutable after construction; operations are pure and return
fresh objects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(x) -> Fraction:
    """Coerce ints and 'p/q' strings to Fraction; floats are rejected."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


# ---------------------------------------------------------------------------
# permutations (one-line notation, values 1..n)


def check_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    p = tuple(perm)
    if sorted(p) != list(range(1, len(p) + 1)):
        raise ValueError(f"not a permutation of 1..{len(p)}: {perm}")
    return p


def inverse_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    p = check_permutation(perm)
    inv = [0] * len(p)
    for j, v in enumerate(p):
        inv[v - 1] = j + 1
    return tuple(inv)


def koszul_sign(perm: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign rearranging (x_1..x_n) into (x_{perm(1)}..x_{perm(n)}).

    Computed by bubble-sorting the label list back to the identity; each
    adjacent swap of labels (a, b) contributes (-1)^{deg_a * deg_b}.
    """
    p = check_permutation(perm)
    if len(p) != len(degrees):
        raise ValueError("permutation and degree list have different lengths")
    labels = list(p)
    sign = 1
    for i in range(len(labels)):
        for j in range(len(labels) - 1):
            if labels[j] > labels[j + 1]:
                if degrees[labels[j] - 1] % 2 and degrees[labels[j + 1] - 1] % 2:
                    sign = -sign
                labels[j], labels[j + 1] = labels[j + 1], labels[j]
    return sign


# ---------------------------------------------------------------------------
# coefficient rings beyond Fraction


class FlowPoly:
    """Polynomial in one flow variable with exact coefficients.

    Coefficients live in an exact ring (Fraction by default); integration
    divides by integers, which the coefficient ring must support.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = list(coeffs)
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c) -> "FlowPoly":
        return cls((c,))

    @classmethod
    def variable(cls) -> "FlowPoly":
        return cls((ZERO, ONE))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, FlowPoly):
            return self.coeffs == other.coeffs
        return self == FlowPoly.const(other)

    def __hash__(self):
        return hash(self.coeffs)

    def _zip(self, other: "FlowPoly"):
        return itertools.zip_longest(self.coeffs, other.coeffs, fillvalue=ZERO)

    def __add__(self, other):
        if not isinstance(other, FlowPoly):
            other = FlowPoly.const(other)
        return FlowPoly(a + b for a, b in self._zip(other))

    __radd__ = __add__

    def __neg__(self):
        return FlowPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, FlowPoly):
            other = FlowPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, FlowPoly):
            return FlowPoly(c * other for c in self.coeffs)
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs))
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return FlowPoly(out)

    def __rmul__(self, other):
        return FlowPoly(other * c for c in self.coeffs)

    def integrate(self) -> "FlowPoly":
        """Antiderivative with zero constant term."""
        return FlowPoly([ZERO] + [c / (k + 1) for k, c in enumerate(self.coeffs)])

    def __call__(self, t0):
        acc = ZERO
        power = ONE
        for c in self.coeffs:
            acc = acc + c * power
            power = power * t0
        return acc

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            mono = "1" if k == 0 else ("t" if k == 1 else f"t^{k}")
            parts.append(f"{c}*{mono}" if k else f"{c}")
        return " + ".join(parts)


def poly_integrate(p: FlowPoly) -> FlowPoly:
    return p.integrate()


def poly_eval(p: FlowPoly, t0) -> Fraction:
    return p(t0)


@dataclass(frozen=True)
class DualNumber:
    """Element a + b*eps of the ring of dual numbers, eps^2 = 0."""

    a: Fraction = ZERO
    b: Fraction = ZERO

    @classmethod
    def eps(cls) -> "DualNumber":
        return cls(ZERO, ONE)

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def _coerce(self, other) -> "DualNumber":
        if isinstance(other, DualNumber):
            return other
        return DualNumber(as_fraction(other), ZERO)

    def __add__(self, other):
        o = self._coerce(other)
        return DualNumber(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return DualNumber(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        return DualNumber(self.a * o.a, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = as_fraction(other)
        return DualNumber(self.a / c, self.b / c)

    def __repr__(self) -> str:
        return f"({self.a} + {self.b}*eps)"


# ---------------------------------------------------------------------------
# graded spaces


class GradedSpace:
    """Finite ordered basis with integer homological degrees.

    An optional differential is given as entries (row, col, coeff) meaning
    d(e_col) += coeff * e_row; it must have degree -1 and square to zero.
    """

    def __init__(self, names: Sequence[str], degrees: Sequence[int],
                 differential: Optional[Iterable[tuple]] = None):
        if len(names) != len(degrees):
            raise ValueError("names and degrees have different lengths")
        if len(set(names)) != len(names):
            raise ValueError("duplicate basis names")
        self.names = tuple(str(n) for n in names)
        self.degrees = tuple(int(d) for d in degrees)
        self.d: Optional[MultiMap] = None
        if differential is not None:
            table = {}
            for row, col, coeff in differential:
                c = as_fraction(coeff)
                if c:
                    key = ((int(col),), int(row))
                    table[key] = table.get(key, ZERO) + c
            self.d = MultiMap(self, 1, -1, table)
            if not compose_at(self.d, 1, self.d).is_zero():
                raise ValueError("differential does not square to zero")

    @property
    def dim(self) -> int:
        return len(self.names)

    def degree(self, i: int) -> int:
        return self.degrees[i]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def basis_tuples(self, arity: int):
        return itertools.product(range(self.dim), repeat=arity)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GradedSpace) and self.names == other.names
                and self.degrees == other.degrees)

    def __hash__(self):
        return hash((self.names, self.degrees))

    def __repr__(self) -> str:
        sig = ", ".join(f"{n}:{d}" for n, d in zip(self.names, self.degrees))
        return f"GradedSpace({sig})"


# ---------------------------------------------------------------------------
# multilinear maps


class MultiMap:
    """Sparse degree-homogeneous multilinear map A^{tensor n} -> A.

    The table maps (input basis multi-index, output basis index) to a
    coefficient.  Every stored entry satisfies
    deg(out) = sum(deg(in)) + degree; zero coefficients are never stored.
    """

    __slots__ = ("space", "arity", "degree", "table")

    def __init__(self, space: GradedSpace, arity: int, degree: int, table=None):
        if arity < 1:
            raise ValueError("arity must be >= 1")
        self.space = space
        self.arity = int(arity)
        self.degree = int(degree)
        clean = {}
        for (inputs, out), coeff in (table or {}).items():
            if not coeff:
                continue
            if len(inputs) != arity:
                raise ValueError(f"entry {inputs} has wrong arity (expected {arity})")
            want = sum(space.degree(i) for i in inputs) + degree
            if space.degree(out) != want:
                raise ValueError(
                    f"entry {inputs}->{out} violates degree homogeneity: "
                    f"|out|={space.degree(out)}, expected {want}")
            clean[(tuple(inputs), int(out))] = coeff
        self.table = clean

    @classmethod
    def zero(cls, space: GradedSpace, arity: int, degree: int) -> "MultiMap":
        return cls(space, arity, degree)

    @classmethod
    def identity(cls, space: GradedSpace) -> "MultiMap":
        return cls(space, 1, 0, {((i,), i): ONE for i in range(space.dim)})

    @classmethod
    def from_entries(cls, space: GradedSpace, arity: int, degree: int,
                     entries: Iterable[tuple]) -> "MultiMap":
        """Entries are (i_1, .., i_n, out, coeff) with basis indices."""
        table = {}
        for row in entries:
            *inputs, out, coeff = row
            c = coeff if not isinstance(coeff, (int, str)) else as_fraction(coeff)
            key = (tuple(int(i) for i in inputs), int(out))
            table[key] = table.get(key, ZERO) + c
        return cls(space, arity, degree, table)

    def is_zero(self) -> bool:
        return not self.table

    def entries(self):
        return self.table.items()

    def apply(self, inputs: Sequence[int]) -> dict:
        """Value on a tuple of basis indices, as {output index: coeff}."""
        out = {}
        key = tuple(inputs)
        for (ins, o), c in self.table.items():
            if ins == key:
                out[o] = out.get(o, ZERO) + c
        return {o: c for o, c in out.items() if c}

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiMap):
            return NotImplemented
        if self.space != other.space or self.arity != other.arity:
            return False
        if self.table != other.table:
            return False
        if self.table and self.degree != other.degree:
            return False
        return True

    def _require_compatible(self, other: "MultiMap"):
        if self.space != other.space or self.arity != other.arity:
            raise ValueError("maps live on different spaces or arities")
        if self.table and other.table and self.degree != other.degree:
            raise ValueError(
                f"degree mismatch: {self.degree} vs {other.degree}; "
                "inhomogeneous maps must be kept as separate components")

    def __add__(self, other: "MultiMap") -> "MultiMap":
        self._require_compatible(other)
        table = dict(self.table)
        for key, c in other.table.items():
            table[key] = table.get(key, ZERO) + c
        degree = self.degree if self.table else other.degree
        return MultiMap(self.space, self.arity, degree, table)

    def __neg__(self) -> "MultiMap":
        return MultiMap(self.space, self.arity, self.degree,
                        {k: -c for k, c in self.table.items()})

    def __sub__(self, other: "MultiMap") -> "MultiMap":
        return self + (-other)

    def scale(self, c) -> "MultiMap":
        if not c:
            return MultiMap.zero(self.space, self.arity, self.degree)
        return MultiMap(self.space, self.arity, self.degree,
                        {k: c * v for k, v in self.table.items()})

    def __rmul__(self, c) -> "MultiMap":
        return self.scale(c)

    def map_coefficients(self, fn) -> "MultiMap":
        return MultiMap(self.space, self.arity, self.degree,
                        {k: fn(v) for k, v in self.table.items()})

    def __repr__(self) -> str:
        if self.is_zero():
            return f"MultiMap(arity={self.arity}, deg={self.degree}, 0)"
        parts = []
        for (ins, out), c in sorted(self.table.items(), key=lambda kv: kv[0]):
            src = ",".join(self.space.names[i] for i in ins)
            parts.append(f"({src})->{self.space.names[out]}: {c}")
        return f"MultiMap(arity={self.arity}, deg={self.degree}; " + "; ".join(parts) + ")"


def compose_at(f: MultiMap, i: int, g: MultiMap) -> MultiMap:
    """Operadic partial composition f o_i g with the Koszul sign."""
    if f.space != g.space:
        raise ValueError("maps live on different spaces")
    if not 1 <= i <= f.arity:
        raise ValueError(f"slot {i} out of range for arity {f.arity}")
    space = f.space
    g_by_out: dict[int, list] = {}
    for (bg, og), cg in g.table.items():
        g_by_out.setdefault(og, []).append((bg, cg))
    table: dict = {}
    g_odd = g.degree % 2
    for (bf, of), cf in f.table.items():
        hooked = g_by_out.get(bf[i - 1])
        if not hooked:
            continue
        prefix = bf[:i - 1]
        prefix_odd = sum(space.degree(b) for b in prefix) % 2
        sign = -1 if (g_odd and prefix_odd) else 1
        for bg, cg in hooked:
            key = (prefix + bg + bf[i:], of)
            c = table.get(key, ZERO) + sign * cf * cg
            if c:
                table[key] = c
            elif key in table:
                del table[key]
    return MultiMap(space, f.arity + g.arity - 1, f.degree + g.degree, table)


def permute_inputs(f: MultiMap, perm: Sequence[int]) -> MultiMap:
    """Right symmetric-group action f^s, with the Koszul sign."""
    p = check_permutation(perm)
    if len(p) != f.arity:
        raise ValueError("permutation length does not match arity")
    inv = inverse_permutation(p)
    space = f.space
    table: dict = {}
    for (b, out), c in f.table.items():
        new_inputs = tuple(b[inv[k] - 1] for k in range(1, f.arity + 1))
        sign = koszul_sign(p, [space.degree(i) for i in new_inputs])
        key = (new_inputs, out)
        v = table.get(key, ZERO) + sign * c
        if v:
            table[key] = v
        elif key in table:
            del table[key]
    return MultiMap(space, f.arity, f.degree, table)


def induced_differential(f: MultiMap) -> MultiMap:
    """d(f) = d_A o f - (-1)^{|f|} sum_i f o_i d_A on End_A(n)."""
    d = f.space.d
    if d is None:
        return MultiMap.zero(f.space, f.arity, f.degree - 1)
    out = compose_at(d, 1, f)
    sign = -1 if f.degree % 2 else 1
    for i in range(1, f.arity + 1):
        out = out - sign * compose_at(f, i, d)
    return out


# ---------------------------------------------------------------------------
# small exact linear-algebra helpers (Gaussian elimination over Fraction)


def rref(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Reduced row echelon form; zero rows dropped."""
    mat = [list(r) for r in rows if any(r)]
    ncols = len(mat[0]) if mat else 0
    pivot_rows: list[list[Fraction]] = []
    col = 0
    while mat and col < ncols:
        pivot = next((r for r in mat if r[col]), None)
        if pivot is None:
            col += 1
            continue
        mat.remove(pivot)
        pivot = [x / pivot[col] for x in pivot]
        for r in mat + pivot_rows:
            if r[col]:
                factor = r[col]
                for j in range(ncols):
                    r[j] -= factor * pivot[j]
        mat = [r for r in mat if any(r)]
        pivot_rows.append(pivot)
        col += 1
    return pivot_rows


def in_span(vec: Sequence[Fraction], basis_rref: Sequence[Sequence[Fraction]]) -> bool:
    v = list(vec)
    for row in basis_rref:
        lead = next(j for j, x in enumerate(row) if x)
        if v[lead]:
            factor = v[lead]
            for j in range(len(v)):
                v[j] -= factor * row[j]
    return not any(v)


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : M x = 0} for the matrix with the given rows."""
    reduced = rref(rows)
    lead_cols = [next(j for j, x in enumerate(r) if x) for r in reduced]
    free_cols = [j for j in range(ncols) if j not in lead_cols]
    basis = []
    for fc in free_cols:
        x = [ZERO] * ncols
        x[fc] = ONE
        for r, lc in zip(reduced, lead_cols):
            x[lc] = -r[fc]
        basis.append(x)
    return basis
