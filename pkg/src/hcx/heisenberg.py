"""Symplectic super spaces, Heisenberg extensions and PBW normal ordering.

The rewriting engine :class:`NormalOrderAlgebra` is shared by the Weyl
algebras here and by the operator algebras in :mod:`hcx.algebroid`.  An
element is a map from nondecreasing generator-index tuples (words) to
:class:`~hcx.exactcore.Scalar` coefficients written on the left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .exactcore import (BaseRing, NotInvertible, Reducer, Scalar, SuperMatrix, _as_ground,
                        invert, parse_scalar)

Word = Tuple[int, ...]


# ----------------------------------------------------------------- rewriting engine

@dataclass
class Gen:
    """A generator of a normal-ordered algebra.

    ``cpar`` is the parity used when a scalar is moved to the left past the
    generator; ``deriv`` (if set) is the derivation term ``g c = c' g + deriv(c)``;
    ``square`` (if set) rewrites ``g g`` and bounds the exponent by one.
    """
    name: str
    parity: int
    cpar: int
    deriv: Optional[Callable[[Scalar], Scalar]] = None
    square: Optional[Dict[Word, Scalar]] = None


Rule = Tuple[int, Dict[Word, Scalar]]


def _acc(dst: Dict[Word, Scalar], w: Word, c: Scalar):
    if not c:
        return
    old = dst.get(w)
    if old is None:
        dst[w] = c
    else:
        nv = old + c
        if nv:
            dst[w] = nv
        else:
            del dst[w]


class NormalOrderAlgebra:
    """Associative algebra presented by ordered generators and swap rules.

    ``rule(a, b)`` with ``a > b`` returns ``(sign, corr)`` meaning
    ``g_a g_b = sign * g_b g_a + corr``; ``corr`` must involve only words that
    are smaller in the rewriting order (shorter words always are).
    """

    element_class: type = None

    def __init__(self, ring: BaseRing, gens: Sequence[Gen], rule: Callable[[int, int], Rule]):
        self.ring = ring
        self.gens = list(gens)
        self._rule = rule
        self._rules: Dict[Tuple[int, int], Rule] = {}
        self._gw: Dict[Tuple[int, Word], Dict[Word, Scalar]] = {}
        self._ww: Dict[Tuple[Word, Word], Dict[Word, Scalar]] = {}
        self.index = {g.name: i for i, g in enumerate(self.gens)}
        self._plain = all(g.deriv is None for g in self.gens)

    def __repr__(self):
        return f"{type(self).__name__}({[g.name for g in self.gens]})"

    # element construction
    def element(self, terms: Mapping[Word, Scalar]):
        cls = self.element_class or Element
        return cls(self, terms)

    def one(self):
        return self.element({(): self.ring.one})

    def zero(self):
        return self.element({})

    def scalar(self, c) -> "Element":
        c = self.ring.scalar(c)
        return self.element({(): c} if c else {})

    def gen(self, name_or_index) -> "Element":
        i = self.index[name_or_index] if isinstance(name_or_index, str) else name_or_index
        return self.element({(i,): self.ring.one})

    def rule(self, a: int, b: int) -> Rule:
        key = (a, b)
        r = self._rules.get(key)
        if r is None:
            r = self._rule(a, b)
            self._rules[key] = r
        return r

    # scalar passing
    def pass_scalar(self, word: Word, c: Scalar) -> List[Tuple[Scalar, Word]]:
        """Rewrite word * c as a sum of c_i * subword_i."""
        if self._plain:
            par = 0
            for g in word:
                par ^= self.gens[g].cpar
            return [(c.twist() if par else c, word)]
        state = [(c, ())]
        for g in reversed(word):
            gen = self.gens[g]
            nxt = []
            for s, suf in state:
                ts = s.twist() if gen.cpar else s
                if ts:
                    nxt.append((ts, (g,) + suf))
                if gen.deriv is not None:
                    d = gen.deriv(s)
                    if d:
                        nxt.append((d, suf))
            state = nxt
        return state

    # products
    def _gen_word(self, g: int, w: Word) -> Dict[Word, Scalar]:
        key = (g, w)
        hit = self._gw.get(key)
        if hit is not None:
            return hit
        one = self.ring.one
        if not w or g < w[0]:
            res = {(g,) + w: one}
        elif g == w[0]:
            sq = self.gens[g].square
            if sq is None:
                res = {(g,) + w: one}
            else:
                res = self._mul_terms(sq, {w[1:]: one})
        else:
            h, rest = w[0], w[1:]
            sign, corr = self.rule(g, h)
            res = {}
            if sign:
                t = self._gen_word(g, rest)
                for u, c in self._gen_terms(h, t).items():
                    _acc(res, u, c if sign > 0 else -c)
            if corr:
                for u, c in self._mul_terms(corr, {rest: one}).items():
                    _acc(res, u, c)
        self._gw[key] = res
        return res

    def _gen_terms(self, g: int, terms: Mapping[Word, Scalar]) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        gen = self.gens[g]
        for u, c in terms.items():
            tc = c.twist() if gen.cpar else c
            if tc:
                prod = self._gen_word(g, u)
                for v, d in prod.items():
                    _acc(out, v, tc * d)
            if gen.deriv is not None:
                dc = gen.deriv(c)
                if dc:
                    _acc(out, u, dc)
        return out

    def _word_word(self, u: Word, w: Word) -> Dict[Word, Scalar]:
        key = (u, w)
        hit = self._ww.get(key)
        if hit is not None:
            return hit
        if not u:
            res = {w: self.ring.one}
        elif not w:
            res = {u: self.ring.one}
        elif u[-1] < w[0] or (u[-1] == w[0] and self.gens[w[0]].square is None):
            res = {u + w: self.ring.one}
        else:
            res = self._gen_terms(u[0], self._word_word(u[1:], w))
        self._ww[key] = res
        return res

    def _mul_terms(self, A: Mapping[Word, Scalar], B: Mapping[Word, Scalar]) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        for u, a in A.items():
            for w, b in B.items():
                for c, u2 in self.pass_scalar(u, b):
                    ac = a * c
                    if not ac:
                        continue
                    for v, d in self._word_word(u2, w).items():
                        _acc(out, v, ac * d)
        return out

    def mul(self, a: "Element", b: "Element") -> "Element":
        if a.algebra is not self or b.algebra is not self:
            raise ValueError("ambient algebra mismatch")
        return self.element(self._mul_terms(a.terms, b.terms))

    def word_str(self, w: Word) -> str:
        if not w:
            return "1"
        parts = []
        i = 0
        while i < len(w):
            j = i
            while j < len(w) and w[j] == w[i]:
                j += 1
            n = self.gens[w[i]].name
            parts.append(n if j - i == 1 else f"{n}^{j - i}")
            i = j
        return "*".join(parts)


class Element:
    """Normal-ordered element of a :class:`NormalOrderAlgebra`."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: NormalOrderAlgebra, terms: Mapping[Word, Scalar]):
        self.algebra = algebra
        self.terms = {w: c for w, c in terms.items() if c}

    def _wrap(self, other) -> "Element":
        if isinstance(other, Element):
            if other.algebra is not self.algebra:
                raise ValueError("ambient algebra mismatch")
            return other
        return self.algebra.scalar(other)

    def __add__(self, other):
        other = self._wrap(other)
        t = dict(self.terms)
        for w, c in other.terms.items():
            _acc(t, w, c)
        return self.algebra.element(t)

    __radd__ = __add__

    def __neg__(self):
        return self.algebra.element({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if isinstance(other, Element):
            return self.algebra.mul(self, other)
        return self.algebra.mul(self, self.algebra.scalar(other))

    def __rmul__(self, other):
        # scalar on the left: plain coefficient multiplication
        c = self.algebra.ring.scalar(other)
        return self.algebra.element({w: c * d for w, d in self.terms.items()})

    def __pow__(self, n: int):
        out = self.algebra.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Element):
            try:
                other = self.algebra.scalar(other)
            except Exception:
                return NotImplemented
        return self.algebra is other.algebra and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted((w, hash(c)) for w, c in self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def scalar_part(self) -> Scalar:
        return self.terms.get((), self.algebra.ring.zero)

    def parity(self) -> Optional[int]:
        ps = set()
        for w, c in self.terms.items():
            cp = c.parity()
            if cp is None:
                return None
            p = cp
            for g in w:
                p ^= self.algebra.gens[g].parity
            ps.add(p)
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda wc: (len(wc[0]), wc[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in self.sorted_terms():
            cs = str(c)
            ws = self.algebra.word_str(w)
            if not w:
                parts.append(cs if " " not in cs else f"({cs})")
            elif cs == "1":
                parts.append(ws)
            elif cs == "-1":
                parts.append("-" + ws)
            elif " " in cs or "/" in cs:
                parts.append(f"({cs})*{ws}")
            else:
                parts.append(f"{cs}*{ws}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"


def supercommutator(a: Element, b: Element) -> Element:
    pa, pb = a.parity(), b.parity()
    if pa is None or pb is None:
        raise ValueError("supercommutator needs homogeneous elements")
    ab = a * b
    ba = b * a
    return ab + ba if pa & pb else ab - ba


def commutator(a: Element, b: Element) -> Element:
    return a * b - b * a


# ----------------------------------------------------------------- vectors and spaces

@dataclass(frozen=True)
class Vec:
    """Vector of H = k.1 + V: a central Scalar and Scalar coordinates on the V-basis."""
    central: Scalar
    coords: Tuple[Scalar, ...]

    def __add__(self, other: "Vec") -> "Vec":
        return Vec(self.central + other.central, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return Vec(-self.central, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Scalar) -> "Vec":
        """Left multiplication by a scalar."""
        return Vec(c * self.central, tuple(c * a for a in self.coords))

    def pi(self) -> "Vec":
        return Vec(self.central.ring.zero, self.coords)

    def is_zero(self) -> bool:
        return not self.central and not any(self.coords)

    def __eq__(self, other):
        return isinstance(other, Vec) and self.central == other.central and self.coords == other.coords

    def __hash__(self):
        return hash((self.central, self.coords))


class SymplecticSpace:
    """Super vector space with an even super-antisymmetric Gram matrix."""

    def __init__(self, ring: BaseRing, names: Sequence[str], parities: Sequence[int],
                 gram, degenerate: bool = False):
        self.ring = ring
        self.names = list(names)
        self.parities = [int(p) for p in parities]
        self.dim = len(self.names)
        if len(self.parities) != self.dim or len(set(self.names)) != self.dim:
            raise ValueError("basis names must be distinct and match the parity list")
        if isinstance(gram, SuperMatrix):
            g = gram.entries
        else:
            g = [[ring.scalar(e) for e in row] for row in gram]
        self.gram: List[List[Scalar]] = g
        self.gram_matrix = SuperMatrix(ring, g, self.parities, self.parities)
        if len(g) != self.dim or any(len(r) != self.dim for r in g):
            raise ValueError("Gram matrix has the wrong shape")
        if self.gram_matrix.degree() != 0:
            raise ValueError("Gram matrix must be even")
        for i in range(self.dim):
            for j in range(self.dim):
                a, b = g[i][j], g[j][i]
                s = -1 if self.parities[i] & self.parities[j] else 1
                # (a,b) = -(-1)^{ab} (b,a)
                if a != (-b if s > 0 else b):
                    raise ValueError(
                        f"Gram matrix is not super-antisymmetric at ({self.names[i]}, {self.names[j]})")
        self.degenerate = degenerate
        if not degenerate and not self.is_nondegenerate():
            raise ValueError("Gram matrix is degenerate")
        self.index = {n: i for i, n in enumerate(self.names)}

    def __repr__(self):
        p, q = self.sdim()
        return f"SymplecticSpace({self.names}, ({p}|{q}))"

    def sdim(self) -> Tuple[int, int]:
        q = sum(self.parities)
        return self.dim - q, q

    def is_nondegenerate(self) -> bool:
        K = self.ring.K
        body = [[{0: e.body()} if e.body() else {} for e in row] for row in self.gram]
        red = Reducer()
        for j in range(self.dim):
            red.add({i: body[i][j][0] for i in range(self.dim) if body[i][j]})
        return len(red) == self.dim

    # vectors
    def zero_vec(self) -> Vec:
        z = self.ring.zero
        return Vec(z, tuple([z] * self.dim))

    def basis_vec(self, name_or_index, central=None) -> Vec:
        i = self.index[name_or_index] if isinstance(name_or_index, str) else name_or_index
        z, one = self.ring.zero, self.ring.one
        return Vec(z if central is None else self.ring.scalar(central),
                   tuple(one if k == i else z for k in range(self.dim)))

    def center_vec(self) -> Vec:
        z = self.ring.zero
        return Vec(self.ring.one, tuple([z] * self.dim))

    def vec(self, coords: Mapping[str, object] = None, central=0) -> Vec:
        coords = coords or {}
        for n in coords:
            if n not in self.index:
                raise KeyError(f"unknown basis vector {n!r}")
        return Vec(self.ring.scalar(central),
                   tuple(self.ring.scalar(coords.get(n, 0)) for n in self.names))

    def vec_parity(self, v: Vec) -> Optional[int]:
        ps = set()
        for c, p in zip(v.coords, self.parities):
            if c:
                cp = c.parity()
                if cp is None:
                    return None
                ps.add(cp ^ p)
        if v.central:
            cp = v.central.parity()
            if cp is None:
                return None
            ps.add(cp)
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def pairing(self, u: Vec, v: Vec) -> Scalar:
        """(u, v) for vectors with left coefficients."""
        acc = self.ring.zero
        for i, a in enumerate(u.coords):
            if not a:
                continue
            odd_i = self.parities[i]
            for k, b in enumerate(v.coords):
                w = self.gram[i][k]
                if not b or not w:
                    continue
                acc = acc + a * (b.twist() if odd_i else b) * w
        return acc

    def vec_str(self, v: Vec) -> str:
        parts = []
        if v.central:
            parts.append(f"({v.central})*1")
        for n, c in zip(self.names, v.coords):
            if c:
                parts.append(f"({c})*{n}")
        return " + ".join(parts) if parts else "0"

    # flattening of vectors over K
    def flat(self, v: Vec, with_center: bool = True) -> Dict[int, object]:
        subs = self.ring.theta_subsets()
        sidx = {s: n for n, s in enumerate(subs)}
        nS = len(subs)
        out = {}
        comps = ((v.central,) if with_center else ()) + v.coords
        for i, c in enumerate(comps):
            for S, k in c.terms.items():
                out[i * nS + sidx[S]] = k
        return out

    def unflat(self, d: Mapping[int, object], with_center: bool = True) -> Vec:
        subs = self.ring.theta_subsets()
        nS = len(subs)
        n = self.dim + (1 if with_center else 0)
        comps = [dict() for _ in range(n)]
        K = self.ring.K
        for k, c in d.items():
            i, s = divmod(k, nS)
            comps[i][subs[s]] = K.convert(c)
        sc = [Scalar(self.ring, t) for t in comps]
        if with_center:
            return Vec(sc[0], tuple(sc[1:]))
        return Vec(self.ring.zero, tuple(sc))

    def theta_multiples(self, v: Vec) -> List[Vec]:
        return [v.scale(Scalar(self.ring, {T: self.ring.K.one})) for T in self.ring.theta_subsets()]


class HeisenbergAlgebra:
    """Split Heisenberg extension H = k.1 + V with [a, b] = (pi a, pi b) 1."""

    def __init__(self, space: SymplecticSpace):
        self.space = space
        self.ring = space.ring
        self.one = space.center_vec()

    def __repr__(self):
        return f"HeisenbergAlgebra({self.space!r})"

    def bracket(self, a: Vec, b: Vec) -> Scalar:
        return self.space.pairing(a, b)

    def weyl(self) -> "WeylAlgebra":
        return WeylAlgebra(self.space)


# ----------------------------------------------------------------- Weyl algebras

class WeylElement(Element):
    __slots__ = ()


class WeylAlgebra(NormalOrderAlgebra):
    """W(V) (with 1_H identified with 1) on a chosen ordered set of generator vectors.

    With ``vectors=None`` the generators are the basis of ``space`` in declared
    order.  Otherwise each generator is an arbitrary homogeneous vector of
    H; together their V-parts must form a basis of V.
    """

    element_class = WeylElement

    def __init__(self, space: SymplecticSpace, vectors: Optional[Sequence[Vec]] = None,
                 names: Optional[Sequence[str]] = None):
        self.space = space
        ring = space.ring
        if vectors is None:
            vectors = [space.basis_vec(i) for i in range(space.dim)]
            names = names or space.names
        self.vectors = list(vectors)
        names = list(names or [f"g{i}" for i in range(len(self.vectors))])
        pars = []
        for v in self.vectors:
            p = space.vec_parity(v)
            if p is None:
                raise ValueError(f"generator {space.vec_str(v)} is not homogeneous")
            pars.append(p)
        self.parities = pars
        n = len(self.vectors)
        om = [[space.pairing(self.vectors[a].pi(), self.vectors[b].pi()) for b in range(n)]
              for a in range(n)]
        self.omega = om
        half = ring.const(1) / ring.const(2)
        gens = []
        for i in range(n):
            sq = {(): om[i][i] * half} if pars[i] else None
            if sq is not None and not om[i][i]:
                sq = {}
            gens.append(Gen(names[i], pars[i], pars[i], None, sq))

        def rule(a, b):
            s = -1 if pars[a] & pars[b] else 1
            c = om[a][b]
            return s, ({(): c} if c else {})

        super().__init__(ring, gens, rule)
        self._images = None

    def from_vec(self, v: Vec) -> WeylElement:
        """A vector of H written in the standard basis, as an element (standard algebra only)."""
        if len(self.vectors) != self.space.dim or any(
                w != self.space.basis_vec(i) for i, w in enumerate(self.vectors)):
            return self.convert_vec(v)
        t = {(i,): c for i, c in enumerate(v.coords) if c}
        if v.central:
            t[()] = v.central
        return self.element(t)

    def basis_images(self) -> List[WeylElement]:
        """Each standard basis vector b_i expressed through this algebra's generators."""
        if self._images is not None:
            return self._images
        sp = self.space
        n = sp.dim
        if len(self.vectors) != n:
            raise ValueError("generators must form a basis of V")
        # G[j][i] = coordinate i of generator j; we need N with N G = 1
        G = [list(v.coords) for v in self.vectors]
        N = _left_inverse(sp.ring, G)
        imgs = []
        for i in range(n):
            t: Dict[Word, Scalar] = {}
            shift = sp.ring.zero
            for j in range(n):
                c = N[i][j]
                if c:
                    _acc(t, (j,), c)
                    shift = shift + c * self.vectors[j].central
            if shift:
                _acc(t, (), -shift)
            imgs.append(self.element(t))
        self._images = imgs
        return imgs

    def convert_vec(self, v: Vec) -> WeylElement:
        imgs = self.basis_images()
        out = self.scalar(v.central)
        for c, img in zip(v.coords, imgs):
            if c:
                out = out + c * img
        return out

    def convert(self, x: Element) -> WeylElement:
        """Transport an element of the standard Weyl algebra of the same space."""
        imgs = self.basis_images()
        out = self.zero()
        for w, c in x.terms.items():
            t = self.one()
            for g in w:
                t = t * imgs[g]
            out = out + c * t
        return out


def _left_inverse(ring: BaseRing, G: List[List[Scalar]]) -> List[List[Scalar]]:
    """N with N G = 1 by Gauss-Jordan on [G | 1] using invertible pivots."""
    n = len(G)
    m = [list(r) + [ring.one if i == j else ring.zero for j in range(n)] for i, r in enumerate(G)]
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k].body() and m[i][k].parity() == 0), None)
        if piv is None:
            raise NotInvertible("generator vectors do not form a basis")
        m[k], m[piv] = m[piv], m[k]
        pinv = invert(m[k][k])
        m[k] = [pinv * a for a in m[k]]
        for i in range(n):
            if i != k and m[i][k]:
                f = m[i][k]
                m[i] = [a - f * b for a, b in zip(m[i], m[k])]
    return [r[n:] for r in m]


def weyl_mul(a: Element, b: Element) -> Element:
    """Normal-ordered product of two elements of the same Weyl algebra."""
    if a.algebra is not b.algebra:
        raise ValueError("ambient algebra mismatch")
    return a * b


# ----------------------------------------------------------------- subspaces

class Subspace:
    """O-span of homogeneous generator vectors in H (central part allowed)."""

    def __init__(self, ambient: HeisenbergAlgebra, generators: Sequence[Vec], name: str = "",
                 check: bool = True):
        self.ambient = ambient
        self.space = ambient.space
        self.generators = list(generators)
        self.name = name
        pars = []
        for g in self.generators:
            p = self.space.vec_parity(g)
            if p is None:
                raise ValueError(f"generator {self.space.vec_str(g)} of {name or 'subspace'} is not homogeneous")
            pars.append(p)
        self.parities = pars
        if check:
            n = len(self.generators) * len(self.space.ring.theta_subsets())
            if _k_rank(self.space, self.generators, True) != n:
                raise ValueError(f"generators of {name or 'subspace'} are not independent")
            if _k_rank(self.space, [g.pi() for g in self.generators], False) != n:
                raise ValueError(f"{name or 'subspace'} meets the center")

    def __repr__(self):
        r, s = self.rank()
        return f"Subspace({self.name or '?'}, rank {r}|{s})"

    def __len__(self):
        return len(self.generators)

    def rank(self) -> Tuple[int, int]:
        s = sum(self.parities)
        return len(self.parities) - s, s

    def pi_vectors(self) -> List[Vec]:
        return [g.pi() for g in self.generators]

    def offending_pair(self) -> Optional[Tuple[int, int, Scalar]]:
        for i, a in enumerate(self.generators):
            for j in range(i, len(self.generators)):
                v = self.space.pairing(a, self.generators[j])
                if v:
                    return i, j, v
        return None

    def is_isotropic(self) -> bool:
        return self.offending_pair() is None

    def is_lagrangian(self) -> bool:
        if not self.is_isotropic():
            return False
        p, q = self.space.sdim()
        r, s = self.rank()
        return 2 * r == p and 2 * s == q

    def k_span(self) -> Reducer:
        red = Reducer()
        for g in self.generators:
            for t in self.space.theta_multiples(g):
                red.add(self.space.flat(t))
        return red

    def contains(self, v: Vec) -> bool:
        return self.k_span().contains(self.space.flat(v))

    def same_span(self, other: "Subspace") -> bool:
        a, b = self.k_span(), other.k_span()
        return (len(a) == len(b) and all(a.contains(self.space.flat(g)) for g in other.generators))


def _k_rank(space: SymplecticSpace, vecs: Sequence[Vec], with_center: bool) -> int:
    red = Reducer()
    for v in vecs:
        for t in space.theta_multiples(v):
            red.add(space.flat(t, with_center))
    return len(red)


def _o_generators(space: SymplecticSpace, kvecs: Sequence[Vec]) -> List[Vec]:
    """Greedy O-module generators for a K-span that is closed under theta-multiplication.

    Candidates with a nonzero body come first, so a free summand gets a minimal
    generating set (bodies independent); nilpotent leftovers are added after.
    """
    cand = sorted(kvecs, key=lambda v: min([c.nilpotent_order() for c in (v.central,) + v.coords]))
    red = Reducer()
    chosen = []
    for v in cand:
        if red.contains(space.flat(v)):
            continue
        # split into parity-homogeneous pieces
        for piece in _homogeneous_pieces(space, v):
            if piece.is_zero() or red.contains(space.flat(piece)):
                continue
            chosen.append(piece)
            for t in space.theta_multiples(piece):
                red.add(space.flat(t))
    return chosen


def _homogeneous_pieces(space: SymplecticSpace, v: Vec) -> List[Vec]:
    if space.vec_parity(v) is not None:
        return [v]
    out = []
    for p in (0, 1):
        cs = []
        for c, bp in zip(v.coords, space.parities):
            cs.append(c.even_part() if (p ^ bp) == 0 else c.odd_part())
        cen = v.central.even_part() if p == 0 else v.central.odd_part()
        out.append(Vec(cen, tuple(cs)))
    return out


def _perp_vectors(space: SymplecticSpace, vecs: Sequence[Vec]) -> List[Vec]:
    """K-basis of {x in V : (x, a) = 0 for all a} (closed under theta-multiplication)."""
    ring = space.ring
    subs = ring.theta_subsets()
    cols = []
    for i in range(space.dim):
        for T in subs:
            x = space.basis_vec(i).scale(Scalar(ring, {T: ring.K.one}))
            vals = [space.pairing(x, a.pi()) for a in vecs]
            col = {}
            sidx = {s: n for n, s in enumerate(subs)}
            for j, val in enumerate(vals):
                for S, c in val.terms.items():
                    col[j * len(subs) + sidx[S]] = c
            cols.append(col)
    red = Reducer()
    kern = []
    for j, c in enumerate(cols):
        ok, combo = red.add(c, tag=j)
        if not ok:
            kern.append(combo)
    out = []
    nS = len(subs)
    for combo in kern:
        d = {}
        for j, c in combo.items():
            i, s = divmod(j, nS)
            d[i * nS + s] = c
        out.append(space.unflat(d, with_center=False))
    return out


def perp(A: Subspace) -> Subspace:
    """Perpendicular of pi(A) inside V."""
    gens = _o_generators(A.space, _perp_vectors(A.space, A.generators))
    return Subspace(A.ambient, gens, name=f"{A.name}^perp" if A.name else "", check=False)


def span_sum(A: Subspace, B: Subspace) -> Subspace:
    kv = []
    for g in A.generators + B.generators:
        kv.extend(A.space.theta_multiples(g))
    red = Reducer()
    basis = []
    for v in kv:
        if red.add(A.space.flat(v))[0]:
            basis.append(v)
    return Subspace(A.ambient, _o_generators(A.space, basis), check=False)


def intersection(A: Subspace, B: Subspace) -> Subspace:
    """Exact intersection of the two O-spans (computed over K)."""
    sp = A.space
    ka = [t for g in A.generators for t in sp.theta_multiples(g)]
    kb = [t for g in B.generators for t in sp.theta_multiples(g)]
    cols = [sp.flat(v) for v in ka] + [{k: -c for k, c in sp.flat(v).items()} for v in kb]
    red = Reducer()
    out = []
    for j, c in enumerate(cols):
        ok, combo = red.add(c, tag=j)
        if not ok:
            v = sp.zero_vec()
            for idx, coef in combo.items():
                if idx < len(ka):
                    v = v + ka[idx].scale(Scalar(sp.ring, {(): coef}))
            if not v.is_zero():
                out.append(v)
    red2 = Reducer()
    basis = []
    for v in out:
        if red2.add(sp.flat(v))[0]:
            basis.append(v)
    return Subspace(A.ambient, _o_generators(sp, basis), check=False)


def centralizer(I: Subspace) -> Subspace:
    """c(I) = pi^-1(pi(I)^perp), generated by 1_H and a basis of pi(I)^perp."""
    bad = I.offending_pair()
    if bad is not None:
        raise ValueError(f"centralizer needs an isotropic subspace; pairing {bad[:2]} = {bad[2]}")
    P = perp(I)
    return Subspace(I.ambient, [I.ambient.one] + P.generators,
                    name=f"c({I.name})" if I.name else "", check=False)


@dataclass
class ReducedHeisenberg:
    """H-bar = c(I)/I with an explicit complement basis and the projection map."""
    algebra: HeisenbergAlgebra
    complement: List[Vec]
    source: Subspace
    _solver: object = field(default=None, repr=False)

    def project(self, v: Vec) -> Vec:
        """Image of v in c(I) under c(I) -> H-bar."""
        return self._solver(v)


def reduced_heisenberg(I: Subspace, names: Optional[Sequence[str]] = None) -> ReducedHeisenberg:
    bad = I.offending_pair()
    if bad is not None:
        raise ValueError(f"reduction needs an isotropic subspace; pairing {bad[:2]} = {bad[2]}")
    sp = I.space
    ring = sp.ring
    pvecs = _perp_vectors(sp, I.generators)
    # greedy complement of pi(I) inside pi(I)^perp, preferring standard basis vectors;
    # independence is decided on bodies, which is enough over O by Nakayama
    def body(v: Vec):
        return {i: c.body() for i, c in enumerate(v.coords) if c.body()}

    red = Reducer()
    for g in I.pi_vectors():
        red.add(body(g))
    perp_red = Reducer()
    for v in pvecs:
        perp_red.add(sp.flat(v, False))
    candidates = [sp.basis_vec(i) for i in range(sp.dim)] + pvecs
    comp = []
    for v in candidates:
        if not perp_red.contains(sp.flat(v, False)):
            continue
        for piece in _homogeneous_pieces(sp, v):
            if piece.is_zero() or not red.add(body(piece))[0]:
                continue
            comp.append(piece)
    if names is None:
        names = []
        for v in comp:
            hit = [sp.names[i] for i in range(sp.dim) if v == sp.basis_vec(i)]
            names.append(hit[0] if hit else f"h{len(names) + 1}")
    gram = [[sp.pairing(a, b) for b in comp] for a in comp]
    bar_space = SymplecticSpace(ring, names, [sp.vec_parity(v) for v in comp], gram)
    H = HeisenbergAlgebra(bar_space)
    # projection: v = sum alpha_k pi(u_k) + sum beta_m h_m + c 1
    kcols = []
    tags = []
    for k, g in enumerate(I.generators):
        for t in sp.theta_multiples(g.pi()):
            kcols.append(sp.flat(t, False))
            tags.append(("u", k))
    for m, h in enumerate(comp):
        for t in sp.theta_multiples(h):
            kcols.append(sp.flat(t, False))
            tags.append(("h", m))
    solver = Reducer()
    for j, c in enumerate(kcols):
        solver.add(c, tag=j)
    subs = ring.theta_subsets()

    def project(v: Vec) -> Vec:
        rem, combo = solver.reduce(sp.flat(v.pi(), False), {})
        if rem:
            raise ValueError("vector is not in the centralizer")
        alpha = [ring.zero] * len(I.generators)
        beta = [ring.zero] * len(comp)
        for j, c in combo.items():
            kind, idx = tags[j]
            coeff = Scalar(ring, {subs[j % len(subs)]: -c})
            if kind == "u":
                alpha[idx] = alpha[idx] + coeff
            else:
                beta[idx] = beta[idx] + coeff
        cen = v.central
        for a, g in zip(alpha, I.generators):
            cen = cen - a * g.central
        return Vec(cen, tuple(beta))

    return ReducedHeisenberg(H, comp, I, project)


# ----------------------------------------------------------------- central characters

@dataclass
class Pushout:
    """H_chi: push-out of 0 -> K -> V~ -> V along chi, with the projection V~ -> H_chi."""
    algebra: HeisenbergAlgebra
    source: SymplecticSpace
    kernel: List[Vec]
    chi: List[Scalar]
    complement: List[int]

    def project(self, v: Vec) -> Vec:
        sp = self.source
        ring = sp.ring
        cols = [sp.flat(k, False) for k in self.kernel]
        cols += [sp.flat(sp.basis_vec(i), False) for i in self.complement]
        if ring.q:
            raise NotImplementedError("central-character push-out over odd parameters")
        red = Reducer()
        for j, c in enumerate(cols):
            red.add(c, tag=j)
        rem, combo = red.reduce(sp.flat(v.pi(), False), {})
        if rem:
            raise ValueError("vector not in the source space")
        cen = v.central
        coords = [ring.zero] * len(self.complement)
        nk = len(self.kernel)
        for j, c in combo.items():
            coef = Scalar(ring, {(): -c})
            if j < nk:
                cen = cen + coef * self.chi[j]
            else:
                coords[j - nk] = coords[j - nk] + coef
        return Vec(cen, tuple(coords))

    def image(self, I: Subspace) -> Subspace:
        sp = self.source
        kern = Subspace(HeisenbergAlgebra(sp), self.kernel, check=False)
        both = intersection(I, kern)
        if both.generators:
            raise ValueError("isotropic subspace meets the kernel of the form")
        return Subspace(self.algebra, [self.project(g) for g in I.generators],
                        name=f"{I.name}_chi" if I.name else "")


def pushout_central_character(source: SymplecticSpace, kernel: Sequence[Vec],
                              chi: Sequence[object]) -> Pushout:
    """Push out a degenerate space along chi: K -> O."""
    ring = source.ring
    kernel = list(kernel)
    chi = [ring.scalar(c) for c in chi]
    for k in kernel:
        for i in range(source.dim):
            if source.pairing(k, source.basis_vec(i)):
                raise ValueError("kernel vectors must pair trivially with everything")
    red = Reducer()
    for k in kernel:
        red.add(source.flat(k, False))
    if len(red) != len(kernel):
        raise ValueError("kernel vectors are dependent")
    comp = []
    for i in range(source.dim):
        if red.add(source.flat(source.basis_vec(i), False))[0]:
            comp.append(i)
    gram = [[source.gram[i][j] for j in comp] for i in comp]
    V = SymplecticSpace(ring, [source.names[i] for i in comp], [source.parities[i] for i in comp], gram)
    return Pushout(HeisenbergAlgebra(V), source, kernel, chi, comp)
