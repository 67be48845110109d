"""Fock modules M(I), M^r(I) in monomial models, invariants and Clifford factorization."""
from __future__ import annotations

import itertools
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exactcore import Reducer, Scalar
from .heisenberg import (Element, HeisenbergAlgebra, Subspace, SymplecticSpace, Vec, WeylAlgebra,
                         Word, _acc)

Terms = Dict[Word, Scalar]


class ModuleVector:
    """Finite combination of model monomials with Scalar coefficients on the left."""

    __slots__ = ("module", "terms")

    def __init__(self, module: "ModuleModel", terms: Mapping[Word, Scalar]):
        self.module = module
        self.terms = {w: c for w, c in terms.items() if c}

    def __add__(self, other):
        t = dict(self.terms)
        for w, c in other.terms.items():
            _acc(t, w, c)
        return type(self)(self.module, t)

    def __neg__(self):
        return type(self)(self.module, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        c = self.module.ring.scalar(c)
        return type(self)(self.module, {w: c * d for w, d in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, ModuleVector) and other.module is self.module and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted((w, hash(c)) for w, c in self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def level(self) -> int:
        """Filtration level: the largest monomial degree."""
        return max((self.module.degree(w) for w in self.terms), default=-1)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items(), key=lambda t: (self.module.degree(t[0]), t[0])):
            cs = str(c)
            ws = self.module.word_str(w)
            if not w:
                parts.append(cs if " " not in cs else f"({cs})")
            elif cs == "1":
                parts.append(ws)
            elif cs == "-1":
                parts.append("-" + ws)
            else:
                parts.append(f"({cs})*{ws}" if (" " in cs or "/" in cs) else f"{cs}*{ws}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    __repr__ = __str__


class FockVector(ModuleVector):
    __slots__ = ()


class ModuleModel:
    """A module over W(V) presented on a monomial basis.

    Subclasses supply ``basis(N)``, ``degree(word)``, ``word_str`` and
    ``act_gen(i, word)`` (the action of the i-th standard basis vector of V on
    a basis monomial, on the module's side).
    """

    side = "left"
    vector_class = ModuleVector

    def __init__(self, space: SymplecticSpace):
        self.space = space
        self.ring = space.ring
        self._cache: Dict[Tuple[int, Word], Terms] = {}

    def vector(self, terms: Mapping[Word, Scalar]) -> ModuleVector:
        return self.vector_class(self, terms)

    def vacuum(self) -> ModuleVector:
        return self.vector({(): self.ring.one})

    def monomial(self, w: Word) -> ModuleVector:
        return self.vector({w: self.ring.one})

    def act_gen_cached(self, i: int, w: Word) -> Terms:
        key = (i, w)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.act_gen(i, w)
            self._cache[key] = hit
        return hit

    def _twist_by(self, w: Word, c: Scalar) -> Scalar:
        return c.twist() if self.word_parity(w) else c

    def act_vec(self, v: Vec, x: ModuleVector) -> ModuleVector:
        """Action of a vector of H (central component acts as a scalar)."""
        out: Terms = {}
        left = self.side == "left"
        for w, c in x.terms.items():
            if v.central:
                if left:
                    _acc(out, w, v.central * c)
                else:
                    _acc(out, w, c * self._twist_by(w, v.central))
            for i, a in enumerate(v.coords):
                if not a:
                    continue
                if left:
                    # a b_i (c w) = a tw(c) b_i w, since b_i carries the parity of the basis vector
                    tc = c.twist() if self.space.parities[i] else c
                    coef = a * tc
                else:
                    # (c w) a b_i = c tw_w(a) w b_i
                    coef = c * self._twist_by(w, a)
                for u, d in self.act_gen_cached(i, w).items():
                    _acc(out, u, coef * d)
        return self.vector(out)

    def act(self, w: Element, x: ModuleVector, side: Optional[str] = None) -> ModuleVector:
        """Action of an element of the standard Weyl algebra of the space."""
        side = side or self.side
        if side != self.side:
            raise ValueError(f"this is a {self.side} module")
        out = self.vector({})
        for word, c in w.terms.items():
            y = x
            seq = reversed(word) if side == "left" else word
            if side == "right" and c:
                y = self.vector({u: d * self._twist_by(u, c) for u, d in y.terms.items()})
            for g in seq:
                y = self.act_vec(self.space.basis_vec(g), y)
            if side == "left":
                y = c * y
            out = out + y
        return out

    def word_parity(self, w: Word) -> int:
        raise NotImplementedError

    # flattening helpers over K
    def flat_index(self, words: Sequence[Word]):
        subs = self.ring.theta_subsets()
        idx = {}
        for w in words:
            for S in subs:
                idx[(w, S)] = len(idx)
        return idx

    def flatten(self, x: ModuleVector, idx) -> Dict[int, object]:
        out = {}
        for w, c in x.terms.items():
            for S, k in c.terms.items():
                out[idx[(w, S)]] = k
        return out

    def theta_multiples(self, x: ModuleVector) -> List[ModuleVector]:
        return [Scalar(self.ring, {T: self.ring.K.one}) * x for T in self.ring.theta_subsets()]


def _greedy_complement(space: SymplecticSpace, vecs: Sequence[Vec]) -> List[Vec]:
    """Basis vectors completing ``vecs`` to an O-basis; chosen on bodies (Nakayama)."""
    def body(v: Vec):
        return {i: c.body() for i, c in enumerate(v.coords) if c.body()}

    red = Reducer()
    for v in vecs:
        red.add(body(v))
    out = []
    for i in range(space.dim):
        b = space.basis_vec(i)
        if red.add(body(b))[0]:
            out.append(b)
    return out


class FockModule(ModuleModel):
    """M(I) = U/U.I (left) or M^r(I) = U/I.U (right) on monomials in a complement C.

    The rebased Weyl algebra has generators C then I (left) or I then C
    (right); the model consists of the words avoiding I.
    """

    vector_class = FockVector

    def __init__(self, I: Subspace, side: str = "left", complement: Optional[Sequence[Vec]] = None,
                 complement_names: Optional[Sequence[str]] = None, validate: int = 2):
        super().__init__(I.space)
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        bad = I.offending_pair()
        if bad is not None:
            raise ValueError(f"Fock module needs an isotropic subspace; pairing {bad[:2]} = {bad[2]}")
        self.side = side
        self.subspace = I
        sp = self.space
        comp = list(complement) if complement is not None else _greedy_complement(sp, I.generators)
        if complement_names is None:
            complement_names = []
            for v in comp:
                hit = [sp.names[i] for i in range(sp.dim) if v == sp.basis_vec(i)]
                complement_names.append(hit[0] if hit else f"c{len(complement_names) + 1}")
        self.complement = comp
        unames = [f"<{I.name or 'I'}{k + 1}>" for k in range(len(I.generators))]
        if side == "left":
            vecs = comp + list(I.generators)
            names = list(complement_names) + unames
            self.cidx = list(range(len(comp)))
        else:
            vecs = list(I.generators) + comp
            names = unames + list(complement_names)
            self.cidx = list(range(len(I.generators), len(vecs)))
        self.algebra = WeylAlgebra(sp, vecs, names)
        self._cset = set(self.cidx)
        self._imgs = self.algebra.basis_images()
        self.cpar = {i: self.algebra.parities[i] for i in self.cidx}
        if validate:
            self.validate(validate)

    def __repr__(self):
        return f"FockModule({self.side}, {self.subspace!r}, complement={[self.algebra.gens[i].name for i in self.cidx]})"

    def degree(self, w: Word) -> int:
        return len(w)

    def word_parity(self, w: Word) -> int:
        p = 0
        for g in w:
            p ^= self.cpar[g]
        return p

    def word_str(self, w: Word) -> str:
        return self.algebra.word_str(w)

    def project(self, terms: Mapping[Word, Scalar]) -> Terms:
        return {w: c for w, c in terms.items() if all(g in self._cset for g in w)}

    def act_gen(self, i: int, w: Word) -> Terms:
        A = self.algebra
        img = self._imgs[i].terms
        if self.side == "left":
            prod = A._mul_terms(img, {w: self.ring.one})
        else:
            prod = A._mul_terms({w: self.ring.one}, img)
        return self.project(prod)

    def element_of(self, x: Element) -> Element:
        """Transport an element of the standard Weyl algebra into the rebased algebra."""
        return self.algebra.convert(x)

    def class_of(self, x: Element) -> FockVector:
        """Image of a rebased-algebra element in the module (x.vac or vac.x)."""
        return self.vector(self.project(x.terms))

    def basis(self, N: int) -> List[Word]:
        """Model monomials of degree <= N (odd generators with exponent <= 1)."""
        gens = self.cidx
        out: List[Word] = [()]
        frontier: List[Word] = [()]
        for _ in range(N):
            nxt = []
            for w in frontier:
                start = w[-1] if w else gens[0] if gens else 0
                for g in gens:
                    if g < start:
                        continue
                    if w and g == w[-1] and self.cpar[g]:
                        continue
                    nxt.append(w + (g,))
            out.extend(nxt)
            frontier = nxt
        return out

    def validate(self, N: int = 2):
        """Replay the defining relations and vacuum annihilation on low-degree monomials."""
        sp = self.space
        for u in self.subspace.generators:
            if self.act_vec(u, self.vacuum()):
                raise AssertionError(f"subspace generator does not kill the vacuum in {self!r}")
        basis = self.basis(N)
        for a in range(sp.dim):
            for b in range(a, sp.dim):
                va, vb = sp.basis_vec(a), sp.basis_vec(b)
                s = -1 if sp.parities[a] & sp.parities[b] else 1
                om = sp.gram[a][b]
                for w in basis:
                    m = self.monomial(w)
                    if self.side == "left":
                        ab = self.act_vec(va, self.act_vec(vb, m))
                        ba = self.act_vec(vb, self.act_vec(va, m))
                    else:
                        ab = self.act_vec(vb, self.act_vec(va, m))
                        ba = self.act_vec(va, self.act_vec(vb, m))
                    lhs = ab - ba if s > 0 else ab + ba
                    rhs = (self._twist_by(w, om) if self.side == "right" else om) * m
                    if lhs != rhs:
                        raise AssertionError(
                            f"relation ({sp.names[a]},{sp.names[b]}) fails on {self.word_str(w)} in {self!r}")


class RegularModule(ModuleModel):
    """W(V) acting on itself from the left (finite for purely odd V)."""

    vector_class = ModuleVector

    def __init__(self, space: SymplecticSpace):
        super().__init__(space)
        self.algebra = WeylAlgebra(space)

    def degree(self, w: Word) -> int:
        return len(w)

    def word_parity(self, w: Word) -> int:
        return sum(self.space.parities[g] for g in w) & 1

    def word_str(self, w: Word) -> str:
        return self.algebra.word_str(w)

    def act_gen(self, i: int, w: Word) -> Terms:
        return self.algebra._mul_terms({(i,): self.ring.one}, {w: self.ring.one})

    def basis(self, N: int) -> List[Word]:
        sp = self.space
        out = [()]
        frontier = [()]
        for _ in range(N):
            nxt = []
            for w in frontier:
                start = w[-1] if w else 0
                for g in range(start, sp.dim):
                    if w and g == w[-1] and sp.parities[g]:
                        continue
                    nxt.append(w + (g,))
            out.extend(nxt)
            frontier = nxt
        return out


class SubModuleModel(ModuleModel):
    """A submodule spanned by given vectors of a parent model, closed under the acting subspace.

    Basis monomials are the indices ``(k,)`` of the spanning vectors; used for M^I.
    """

    def __init__(self, parent: ModuleModel, vectors: Sequence[ModuleVector], levels: Sequence[int],
                 acting: Optional[Sequence[Vec]] = None):
        super().__init__(parent.space)
        self.side = parent.side
        self.parent = parent
        self.vectors = list(vectors)
        self.levels = list(levels)
        words = sorted({w for v in self.vectors for w in v.terms},
                       key=lambda w: (parent.degree(w), w))
        self._idx = parent.flat_index(words)
        self._red = Reducer()
        subs = self.ring.theta_subsets()
        self._tag = []
        for k, v in enumerate(self.vectors):
            for T, tv in zip(subs, parent.theta_multiples(v)):
                self._red.add(parent.flatten(tv, self._idx), tag=len(self._tag))
                self._tag.append((k, T))

    def degree(self, w: Word) -> int:
        return self.levels[w[0]] if w else 0

    def word_parity(self, w: Word) -> int:
        v = self.vectors[w[0]]
        return next(iter(self.parent.word_parity(u) for u in v.terms), 0)

    def word_str(self, w: Word) -> str:
        return f"[{self.vectors[w[0]]}]"

    def basis(self, N: int) -> List[Word]:
        return [(k,) for k, l in enumerate(self.levels) if l <= N]

    def express(self, x: ModuleVector) -> Terms:
        """Coordinates of a parent vector in the spanning set; raises if outside."""
        for w in x.terms:
            if (w, ()) not in self._idx:
                raise ValueError("vector leaves the submodule model")
        rem, combo = self._red.reduce(self.parent.flatten(x, self._idx), {})
        if rem:
            raise ValueError("vector leaves the submodule model")
        out: Terms = {}
        for j, c in combo.items():
            k, T = self._tag[j]
            _acc(out, (k,), Scalar(self.ring, {T: -c}))
        return out

    def act_gen(self, i: int, w: Word) -> Terms:
        v = self.vectors[w[0]]
        y = self.parent.act_vec(self.space.basis_vec(i), v)
        return self.express(y)

    def to_parent(self, x: ModuleVector) -> ModuleVector:
        out = self.parent.vector({})
        for w, c in x.terms.items():
            out = out + c * self.vectors[w[0]]
        return out


# ----------------------------------------------------------------- invariants

def invariants(M: ModuleModel, I: Subspace, N: int) -> Tuple[List[ModuleVector], List[int]]:
    """K-basis of M^I inside M_{<=N} (exact kernel) and the filtration dimensions per level.

    Returns (basis vectors sorted by level, [dim (M^I cap M_{<=d}) for d = 0..N]).
    """
    words = M.basis(N)
    words_hi = M.basis(N + 1)
    idx_out = M.flat_index(words_hi)
    subs = M.ring.theta_subsets()
    nS = len(subs)
    n_out = len(idx_out)
    cols = []
    dirs = []
    for w in words:
        for T in subs:
            x = Scalar(M.ring, {T: M.ring.K.one}) * M.monomial(w)
            col = {}
            for k, u in enumerate(I.generators):
                for key, c in M.flatten(M.act_vec(u, x), idx_out).items():
                    col[k * n_out + key] = c
            cols.append(col)
            dirs.append(x)
    red = Reducer()
    kern = []
    for j, c in enumerate(cols):
        ok, combo = red.add(c, tag=j)
        if not ok:
            kern.append(combo)
    vecs = []
    for combo in kern:
        v = M.vector({})
        for j, c in combo.items():
            v = v + Scalar(M.ring, {(): c}) * dirs[j]
        vecs.append(v)
    # re-echelonize by level so that low levels come first
    vecs.sort(key=lambda v: v.level())
    dims = [sum(1 for v in vecs if v.level() <= d) for d in range(N + 1)]
    return vecs, dims


# ----------------------------------------------------------------- Clifford factorization

def clifford_factorize(M: ModuleModel, L: Subspace, N: Optional[int] = None) -> dict:
    """Check that M(L) (x) M^L -> M, (u, s) -> lift(u) s, is bijective (purely odd V)."""
    sp = M.space
    if sp.sdim()[0] != 0:
        raise ValueError("Clifford factorization needs a purely odd space")
    if not L.is_lagrangian():
        raise ValueError("L must be Lagrangian")
    if N is None:
        N = sp.dim
    ML = FockModule(L, "left")
    lifts = ML.basis(sp.dim)
    inv, _ = invariants(M, L, N)
    mbasis = M.basis(N)
    idx = M.flat_index(mbasis)
    cols = []
    for u in lifts:
        gvecs = [ML.algebra.vectors[g] for g in u]
        for s in inv:
            y = s
            for gv in reversed(gvecs):
                y = M.act_vec(gv, y)
            for t in M.theta_multiples(y):
                cols.append(M.flatten(t, idx))
    red = Reducer()
    for c in cols:
        red.add(c)
    dimM = len(idx)
    rank = len(red)
    m = sp.dim // 2
    return {
        "dim_M": dimM // len(M.ring.theta_subsets()),
        "dim_ML": len(lifts),
        "dim_invariants": len(inv) // len(M.ring.theta_subsets()) if M.ring.q else len(inv),
        "rank": rank,
        "bijective": rank == dimM == len(cols),
        "dimension_identity": dimM == (2 ** m) * len(inv),
    }
