"""Exact supercommutative scalars, expression parsing and super linear algebra.

A :class:`Scalar` is an element of ``K (x) Lambda`` where ``K`` is the field of
rational functions over QQ in the even parameters of a :class:`BaseRing` and
``Lambda`` is the Grassmann algebra on its odd parameters.  Terms are stored
as a map from sorted tuples of odd-variable indices to ``K`` elements.
"""
from __future__ import annotations

import ast
import heapq
import itertools
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from sympy.polys.polyerrors import CoercionFailed
from sympy import QQ, Symbol

Subset = Tuple[int, ...]


class ParseError(ValueError):
    """Raised for malformed scalar expressions; ``position`` is a 1-based column."""

    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"{message} (at column {position})"
        super().__init__(message)
        self.position = position


class ModeError(ValueError):
    pass


class NotInvertible(ZeroDivisionError):
    pass


def _merge_sign(s: Subset, t: Subset) -> int:
    """Sign of theta^s * theta^t -> theta^(s u t), or 0 if they overlap."""
    inv = 0
    j = 0
    for a in s:
        # count elements of t smaller than a
        while j < len(t) and t[j] < a:
            j += 1
        if j < len(t) and t[j] == a:
            return 0
        inv += j
    return -1 if inv & 1 else 1


class BaseRing:
    """Even parameters generate the coefficient field, odd ones the Grassmann part."""

    def __init__(self, even_names: Sequence[str] = (), odd_names: Sequence[str] = ()):
        self.even_names = tuple(even_names)
        self.odd_names = tuple(odd_names)
        names = self.even_names + self.odd_names
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate ring variable names in {names}")
        for n in names:
            if not n.isidentifier():
                raise ValueError(f"ring variable name {n!r} is not an identifier")
        if self.even_names:
            self.K = QQ.frac_field(*[Symbol(n) for n in self.even_names])
            self._gens = dict(zip(self.even_names, self.K.gens))
        else:
            self.K = QQ
            self._gens = {}
        self._odd_index = {n: i for i, n in enumerate(self.odd_names)}
        self.zero = Scalar(self, {})
        self.one = Scalar(self, {(): self.K.one})

    def __repr__(self):
        return f"BaseRing({list(self.even_names)} | {list(self.odd_names)})"

    def __eq__(self, other):
        return (isinstance(other, BaseRing) and self.even_names == other.even_names
                and self.odd_names == other.odd_names)

    def __hash__(self):
        return hash((self.even_names, self.odd_names))

    @property
    def q(self) -> int:
        return len(self.odd_names)

    def k(self, value) -> object:
        """Coerce an int, Fraction, string or K element into K."""
        if isinstance(value, str):
            s = parse_scalar(value, self)
            if set(s.terms) - {()}:
                raise ValueError(f"{value!r} is not an even constant-in-theta scalar")
            return s.body()
        if hasattr(value, "numerator") and hasattr(value, "denominator") and not hasattr(value, "field"):
            return self.K.convert(QQ(int(value.numerator), int(value.denominator)))
        return self.K.convert(value)

    def const(self, value) -> "Scalar":
        c = self.k(value)
        return Scalar(self, {(): c} if c else {})

    def scalar(self, value) -> "Scalar":
        """Coerce a Scalar, expression string or number into a Scalar of this ring."""
        if isinstance(value, Scalar):
            return value
        if isinstance(value, str):
            return parse_scalar(value, self)
        return self.const(value)

    def even_var(self, name: str) -> "Scalar":
        return Scalar(self, {(): self._gens[name]})

    def odd_var(self, name: str) -> "Scalar":
        return Scalar(self, {(self._odd_index[name],): self.K.one})

    def var(self, name: str) -> "Scalar":
        if name in self._gens:
            return self.even_var(name)
        if name in self._odd_index:
            return self.odd_var(name)
        raise KeyError(name)

    def is_odd_name(self, name: str) -> bool:
        return name in self._odd_index

    def theta_subsets(self) -> List[Subset]:
        """All theta-monomials in canonical order (by size, then lexicographic)."""
        out = []
        for r in range(self.q + 1):
            out.extend(itertools.combinations(range(self.q), r))
        return out

    def specialize(self, point: Mapping[str, object]) -> "BaseRing":
        rest = [n for n in self.even_names if n not in point]
        return BaseRing(rest, self.odd_names)

    # K helpers
    def kstr(self, c) -> str:
        return _kstr(self, c)

    def kdiff(self, c, name: str):
        if not self.even_names:
            return self.K.zero
        return c.diff(self._gens[name])


class Scalar:
    """Element of K (x) Lambda; immutable."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: BaseRing, terms: Mapping[Subset, object]):
        self.ring = ring
        K = ring.K
        self.terms = {s: (K.convert(c) if type(c) is int else c) for s, c in terms.items() if c}
        self._hash = None

    # construction helpers
    def _new(self, terms):
        return Scalar(self.ring, terms)

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.ring is not self.ring and other.ring != self.ring:
                raise ValueError("scalars over different base rings")
            return other
        return self.ring.const(other)

    # arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for s, c in other.terms.items():
            t[s] = t[s] + c if s in t else c
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({s: -c for s, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        try:
            other = self._coerce(other)
        except (CoercionFailed, TypeError):
            return NotImplemented
        if not self.terms or not other.terms:
            return self.ring.zero
        one = self.ring.K.one
        if len(other.terms) == 1 and () in other.terms:
            c0 = other.terms[()]
            if c0 == one:
                return self
            return self._new({s: c * c0 for s, c in self.terms.items()})
        if len(self.terms) == 1 and () in self.terms:
            c0 = self.terms[()]
            if c0 == one:
                return other
            return self._new({s: c0 * c for s, c in other.terms.items()})
        t: Dict[Subset, object] = {}
        for s, a in self.terms.items():
            for u, b in other.terms.items():
                sg = _merge_sign(s, u)
                if not sg:
                    continue
                key = tuple(sorted(s + u))
                v = a * b if sg > 0 else -(a * b)
                t[key] = t[key] + v if key in t else v
        return self._new(t)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * invert(other)

    def __pow__(self, n: int):
        if n < 0:
            return invert(self) ** (-n)
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.ring == other.ring and self.terms == other.terms
        try:
            return self == self.ring.const(other)
        except Exception:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(sorted((s, str(c)) for s, c in self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)

    # structure
    def body(self):
        return self.terms.get((), self.ring.K.zero)

    def is_zero(self) -> bool:
        return not self.terms

    def parity(self) -> Optional[int]:
        """0 or 1 for homogeneous scalars (0 for zero), None otherwise."""
        ps = {len(s) & 1 for s in self.terms}
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def even_part(self):
        return self._new({s: c for s, c in self.terms.items() if not len(s) & 1})

    def odd_part(self):
        return self._new({s: c for s, c in self.terms.items() if len(s) & 1})

    def twist(self):
        """Negate the odd part: the sign picked up when passing an odd object."""
        return self._new({s: (-c if len(s) & 1 else c) for s, c in self.terms.items()})

    def is_constant(self) -> bool:
        """True when this is a ground rational number."""
        if set(self.terms) - {()}:
            return False
        return _as_ground(self.ring, self.body()) is not None

    def nilpotent_order(self) -> int:
        """Largest i with self in N^i (N = ideal of odd generators); q+1 for zero."""
        if not self.terms:
            return self.ring.q + 1
        return min(len(s) for s in self.terms)

    def deriv(self, name: str) -> "Scalar":
        """Derivative along a ring variable; left derivative for odd names."""
        if self.ring.is_odd_name(name):
            k = self.ring._odd_index[name]
            t = {}
            for s, c in self.terms.items():
                if k in s:
                    p = s.index(k)
                    t[s[:p] + s[p + 1:]] = -c if p & 1 else c
            return self._new(t)
        if name not in self.ring.even_names:
            raise KeyError(name)
        return self._new({s: self.ring.kdiff(c, name) for s, c in self.terms.items()})

    def specialize(self, point: Mapping[str, object], ring: Optional[BaseRing] = None) -> "Scalar":
        """Substitute rational values for even variables."""
        ring = ring or self.ring.specialize(point)
        out = {}
        for s, c in self.terms.items():
            out[s] = _k_specialize(self.ring, ring, c, point)
        return Scalar(ring, out)


def _as_ground(ring: BaseRing, c):
    if ring.K is QQ:
        return c
    if c.numer.is_ground and c.denom.is_ground:
        return QQ(c.numer.LC) / QQ(c.denom.LC)
    return None


def _k_specialize(src: BaseRing, dst: BaseRing, c, point):
    if src.K is QQ:
        return dst.K.convert(c)
    items = [(src._gens[n], v if not isinstance(v, str) else _parse_rational(v))
             for n, v in point.items() if n in src._gens]
    items = [(g, QQ(int(v.numerator), int(v.denominator))) for g, v in items]
    try:
        c = c.subs(items)
    except ZeroDivisionError:
        raise NotInvertible(f"specialization point is a pole of {src.kstr(c)}") from None
    if dst.K is QQ:
        return QQ(c.numer.LC if c.numer else 0) / QQ(c.denom.LC)
    return dst.K.from_sympy(c.as_expr())


def _parse_rational(text: str):
    from fractions import Fraction
    f = Fraction(text)
    return QQ(f.numerator, f.denominator)


# ----------------------------------------------------------------- invert

def invert(s: Scalar) -> Scalar:
    """Inverse of an even scalar with nonzero body (geometric series in the nilpotent part)."""
    if s.parity() != 0:
        raise NotInvertible("only even scalars can be inverted")
    b = s.body()
    if not b:
        raise NotInvertible(f"scalar {s} has zero body")
    ring = s.ring
    binv = ring.K.one / b
    if len(s.terms) == 1:
        return Scalar(ring, {(): binv})
    # s = b (1 + n), n nilpotent; 1/(1+n) = sum (-n)^k, terminating after q/2 steps
    n = Scalar(ring, {k: c * binv for k, c in s.terms.items() if k})
    term = ring.one
    acc = ring.one
    while True:
        term = -(term * n)
        if not term.terms:
            break
        acc = acc + term
    return acc * Scalar(ring, {(): binv})


# ----------------------------------------------------------------- parsing

_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load,
            ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def prepare_source(text: str) -> str:
    """The Python source parsed for an expression: stripped, with ^ spelled **."""
    return text.strip().replace("^", "**")


def source_column(text: str, offset: Optional[int]) -> Optional[int]:
    """1-based column in ``text`` of a 0-based offset into ``prepare_source(text)``."""
    if offset is None:
        return None
    pos = len(text) - len(text.lstrip())
    k = 0
    while k < offset and pos < len(text):
        k += 2 if text[pos] == "^" else 1
        pos += 1
    return pos + 1


def parse_scalar(text: str, ring: BaseRing) -> Scalar:
    """Parse rational literals, ring names, + - * / ^ and parentheses into a Scalar."""
    try:
        tree = ast.parse(prepare_source(text), mode="eval")
    except SyntaxError as exc:
        off = exc.offset - 1 if exc.offset else len(prepare_source(text))
        raise ParseError(f"syntax error in {text!r}", source_column(text, off)) from None

    def col(node):
        return source_column(text, getattr(node, "col_offset", None))

    def walk(node) -> Scalar:
        if not isinstance(node, _ALLOWED):
            raise ParseError(f"unsupported syntax {type(node).__name__}", col(node))
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant):
            v = node.value
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParseError(f"only integer literals are allowed, got {v!r}", col(node))
            return ring.const(v)
        if isinstance(node, ast.Name):
            try:
                return ring.var(node.id)
            except KeyError:
                raise ParseError(f"unknown identifier {node.id!r}", col(node)) from None
        if isinstance(node, ast.UnaryOp):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        op = node.op
        if isinstance(op, ast.Pow):
            e = node.right
            if isinstance(e, ast.UnaryOp) or not (isinstance(e, ast.Constant) and type(e.value) is int):
                raise ParseError("exponent must be a nonnegative integer literal", col(e))
            return walk(node.left) ** e.value
        a = walk(node.left)
        b = walk(node.right)
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        # division
        if set(b.terms) - {()}:
            raise ParseError("odd variable in denominator", col(node.right))
        if not b.body():
            raise ParseError("division by a scalar with zero body", col(node.right))
        return a * Scalar(ring, {(): ring.K.one / b.body()})

    return walk(tree)


def _poly_str(p) -> str:
    return str(p).replace("**", "^")


def _kstr(ring: BaseRing, c) -> str:
    if ring.K is QQ:
        return str(c)
    num, den = c.numer, c.denom
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc) if hasattr(num, "quo_ground") else num * (1 / lc)
        den = den.quo_ground(lc) if hasattr(den, "quo_ground") else den * (1 / lc)
    ns = _poly_str(num)
    if den == 1:
        return ns
    ds = _poly_str(den)
    if " " in ns or "/" in ns:
        ns = f"({ns})"
    if not ds.isidentifier():
        ds = f"({ds})"
    return f"{ns}/{ds}"


def _is_atomic(text: str) -> bool:
    # a signed ground number or a single identifier-free product is safe unparenthesized
    return all(ch.isdigit() or ch == "/" for ch in text.lstrip("-"))


def format_scalar(s: Scalar) -> str:
    """Canonical text: theta-terms by (size, lexicographic) subset, explicit signs."""
    if not s.terms:
        return "0"
    ring = s.ring
    parts = []
    for sub in sorted(s.terms, key=lambda x: (len(x), x)):
        c = s.terms[sub]
        cs = _kstr(ring, c)
        if not sub:
            parts.append(cs)
            continue
        mono = "*".join(ring.odd_names[i] for i in sub)
        if cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append("-" + mono)
        elif _is_atomic(cs):
            parts.append(f"{cs}*{mono}")
        else:
            parts.append(f"({cs})*{mono}")
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


# ----------------------------------------------------------------- Rees filtration

def rees_member(element: Mapping[object, Scalar], filt: Callable[[object], int], m: int) -> bool:
    """Membership of a module element in F_0 + N F_1 + ... + N^m F_m.

    ``element`` maps monomials to Scalar coefficients and ``filt`` gives the
    filtration level of a monomial.  A term of level ``i`` is allowed iff
    ``i <= m`` and its coefficient lies in ``N^i``.
    """
    for mono, c in element.items():
        if not c:
            continue
        i = filt(mono)
        if i > m or c.nilpotent_order() < i:
            return False
    return True


# ----------------------------------------------------------------- sparse elimination

class Reducer:
    """Incremental echelon basis of sparse vectors over a field.

    Vectors are dicts ``{int: coefficient}``; the pivot of a stored row is its
    largest index.  Each row remembers the combination of inserted vectors it
    came from, which yields kernels and solutions.
    """

    def __init__(self):
        self.rows: Dict[int, Tuple[dict, dict]] = {}
        self.count = 0

    def __len__(self):
        return len(self.rows)

    def reduce(self, vec: Mapping[int, object], combo: Optional[dict] = None):
        v = {k: c for k, c in vec.items() if c}
        combo = dict(combo) if combo is not None else None
        heap = [-k for k in v if k in self.rows]
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = -heapq.heappop(heap)
            if k in seen:
                continue
            seen.add(k)
            c = v.get(k)
            if not c:
                continue
            row, rcombo = self.rows[k]
            for j, a in row.items():
                nv = v.get(j)
                nv = -c * a if nv is None else nv - c * a
                if nv:
                    v[j] = nv
                    if j in self.rows and j not in seen:
                        heapq.heappush(heap, -j)
                else:
                    v.pop(j, None)
            if combo is not None:
                for j, a in rcombo.items():
                    nv = combo.get(j)
                    nv = -c * a if nv is None else nv - c * a
                    if nv:
                        combo[j] = nv
                    else:
                        combo.pop(j, None)
        return v, combo

    def add(self, vec: Mapping[int, object], tag: Optional[int] = None):
        """Insert a vector.  Returns (True, None) if new, else (False, kernel combo)."""
        if tag is None:
            tag = self.count
        self.count += 1
        v, combo = self.reduce(vec, {tag: 1})
        if not v:
            return False, combo
        p = max(v)
        c = v[p]
        # exact even when callers hand in plain ints (1 / int would be a float)
        inv = QQ(1, c) if isinstance(c, int) else 1 / c
        row = {j: a * inv for j, a in v.items()}
        combo = {j: a * inv for j, a in combo.items()}
        self.rows[p] = (row, combo)
        return True, None

    def contains(self, vec) -> bool:
        return not self.reduce(vec)[0]

    def normal_form(self, vec) -> dict:
        return self.reduce(vec)[0]


def sparse_rank(columns: Iterable[Mapping[int, object]]) -> int:
    r = Reducer()
    for c in columns:
        r.add(c)
    return len(r)


def sparse_kernel(columns: Sequence[Mapping[int, object]]):
    """Rank and kernel basis (dicts over column indices) of a column list."""
    r = Reducer()
    kernel = []
    for j, c in enumerate(columns):
        ok, combo = r.add(c, tag=j)
        if not ok:
            kernel.append(combo)
    return len(r), kernel


def sparse_solve(columns: Sequence[Mapping[int, object]], target: Mapping[int, object]):
    """One solution x (dict) with sum x_j columns_j = target, or None."""
    r = Reducer()
    for j, c in enumerate(columns):
        r.add(c, tag=j)
    v, combo = r.reduce(target, {})
    if v:
        return None
    return {j: -a for j, a in combo.items()}


# ----------------------------------------------------------------- super matrices

class SuperMatrix:
    """Matrix of Scalars with row and column parities."""

    def __init__(self, ring: BaseRing, entries: Sequence[Sequence[object]],
                 row_par: Optional[Sequence[int]] = None, col_par: Optional[Sequence[int]] = None):
        self.ring = ring
        self.entries = [[ring.scalar(e) for e in row] for row in entries]
        self.nrows = len(self.entries)
        self.ncols = len(self.entries[0]) if self.entries else len(col_par or ())
        for row in self.entries:
            if len(row) != self.ncols:
                raise ValueError("ragged matrix")
        self.row_par = list(row_par) if row_par is not None else [0] * self.nrows
        self.col_par = list(col_par) if col_par is not None else [0] * self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def degree(self) -> Optional[int]:
        """0 for even, 1 for odd, None for inhomogeneous (zero matrix is even)."""
        degs = set()
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if not e:
                    continue
                p = e.parity()
                if p is None:
                    return None
                degs.add(p ^ self.row_par[i] ^ self.col_par[j])
        if len(degs) > 1:
            return None
        return degs.pop() if degs else 0

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        z = self.ring.zero
        out = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                acc = z
                for k in range(self.ncols):
                    a = self.entries[i][k]
                    if a:
                        b = other.entries[k][j]
                        if b:
                            acc = acc + a * b
                row.append(acc)
            out.append(row)
        return SuperMatrix(self.ring, out, self.row_par, other.col_par)

    def specialize(self, point) -> "SuperMatrix":
        ring = self.ring.specialize(point)
        ent = [[e.specialize(point, ring) for e in row] for row in self.entries]
        return SuperMatrix(ring, ent, self.row_par, self.col_par)

    def flatten(self) -> List[Dict[int, object]]:
        """Columns over K: column (j, T) holds the theta^S-coefficients of M[:, j]*theta^T."""
        subs = self.ring.theta_subsets()
        sidx = {s: n for n, s in enumerate(subs)}
        nS = len(subs)
        cols = []
        for j in range(self.ncols):
            for T in subs:
                tT = Scalar(self.ring, {T: self.ring.K.one})
                col: Dict[int, object] = {}
                for i in range(self.nrows):
                    e = self.entries[i][j]
                    if not e:
                        continue
                    for S, c in (e * tT).terms.items():
                        col[i * nS + sidx[S]] = c
                cols.append(col)
        return cols


def _unflatten(ring: BaseRing, vec: Mapping[int, object], n: int) -> List[Scalar]:
    subs = ring.theta_subsets()
    nS = len(subs)
    out = [dict() for _ in range(n)]
    for k, c in vec.items():
        i, s = divmod(k, nS)
        out[i][subs[s]] = c
    return [Scalar(ring, t) for t in out]


def rank_kernel_image(M: SuperMatrix, mode: str = "generic", point=None):
    """Rank over K after flattening, plus kernel and image bases as Scalar vectors."""
    if mode not in ("generic", "point"):
        raise ModeError(f"unknown mode {mode!r}")
    if mode == "point":
        if point:
            M = M.specialize(point)
        if M.ring.even_names:
            raise ModeError("point mode requires every even variable to be specialized")
    cols = M.flatten()
    rank, kern = sparse_kernel(cols)
    kernel = [_unflatten(M.ring, v, M.ncols) for v in kern]
    red = Reducer()
    image = []
    for c in cols:
        ok, _ = red.add(c)
        if ok:
            image.append(_unflatten(M.ring, c, M.nrows))
    return rank, kernel, image


# ----------------------------------------------------------------- determinants

def _det_even(ring: BaseRing, rows: List[List[Scalar]]) -> Scalar:
    n = len(rows)
    if n == 0:
        return ring.one
    m = [list(r) for r in rows]
    det = ring.one
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k].body()), None)
        if piv is None:
            # no invertible pivot: expand along column k
            sub = [r[k:] for r in m[k:]]
            return det * _laplace(ring, sub)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        p = m[k][k]
        det = det * p
        pinv = invert(p)
        for i in range(k + 1, n):
            f = m[i][k]
            if not f:
                continue
            f = f * pinv
            m[i] = [a - f * b for a, b in zip(m[i], m[k])]
    return det


def _laplace(ring: BaseRing, m: List[List[Scalar]]) -> Scalar:
    n = len(m)
    if n == 0:
        return ring.one
    if n == 1:
        return m[0][0]
    acc = ring.zero
    for i in range(n):
        a = m[i][0]
        if not a:
            continue
        minor = [r[1:] for k, r in enumerate(m) if k != i]
        t = a * _laplace(ring, minor)
        acc = acc - t if i & 1 else acc + t
    return acc


def _inverse_even(ring: BaseRing, rows: List[List[Scalar]]) -> List[List[Scalar]]:
    n = len(rows)
    m = [list(r) + [ring.one if i == j else ring.zero for j in range(n)] for i, r in enumerate(rows)]
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k].body()), None)
        if piv is None:
            raise NotInvertible("matrix is not invertible")
        m[k], m[piv] = m[piv], m[k]
        pinv = invert(m[k][k])
        m[k] = [pinv * a for a in m[k]]
        for i in range(n):
            if i != k and m[i][k]:
                f = m[i][k]
                m[i] = [a - f * b for a, b in zip(m[i], m[k])]
    return [r[n:] for r in m]


def det(M: SuperMatrix) -> Scalar:
    """Determinant of a matrix with even entries."""
    for row in M.entries:
        for e in row:
            if e.parity() not in (0,):
                raise ValueError("det needs even entries")
    return _det_even(M.ring, M.entries)


def berezinian(M: SuperMatrix) -> Scalar:
    """Ber(M) = det(A - B D^-1 C) det(D)^-1 for an even square supermatrix."""
    if M.nrows != M.ncols or sorted(M.row_par) != sorted(M.col_par):
        raise ValueError("berezinian needs a square supermatrix")
    if M.degree() != 0:
        raise ValueError("berezinian needs an even supermatrix")
    r0 = [i for i, p in enumerate(M.row_par) if p == 0]
    r1 = [i for i, p in enumerate(M.row_par) if p == 1]
    c0 = [j for j, p in enumerate(M.col_par) if p == 0]
    c1 = [j for j, p in enumerate(M.col_par) if p == 1]
    E = M.entries
    A = [[E[i][j] for j in c0] for i in r0]
    B = [[E[i][j] for j in c1] for i in r0]
    C = [[E[i][j] for j in c0] for i in r1]
    D = [[E[i][j] for j in c1] for i in r1]
    ring = M.ring
    if D:
        detD = _det_even(ring, D)
        if not detD.body():
            raise NotInvertible("odd-odd block is not invertible")
        Dinv = _inverse_even(ring, D)
        nD = len(D)
        for i in range(len(A)):
            for j in range(len(A)):
                acc = A[i][j]
                for k in range(nD):
                    for l in range(nD):
                        if B[i][k] and Dinv[k][l] and C[l][j]:
                            acc = acc - B[i][k] * Dinv[k][l] * C[l][j]
                A[i][j] = acc
        return _det_even(ring, A) * invert(detD)
    return _det_even(ring, A)
