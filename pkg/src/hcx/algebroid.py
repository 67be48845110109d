"""First-order operators on trivialized charts of right Fock modules.

A chart of an isotropic family I is a constant frame V = I0 + I0* + V' with
(e_i*, e_j) = delta_ij and V' orthogonal to I0 + I0*, together with the graph
data of the normalized generators

    l_j = e_j + sum_i a_ij e_i* + sum_i b_ij f_i + c_j.

The right Fock module is modelled on W(V') (x) S(I0*) (words in the V' and
I0* generators, V' first).  Operators on the model are normal-ordered words
in left multiplications l_b, the grading operator J, right derivations
dr_x (x in I0), right multiplications r_f (f in V') and base derivations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy

from .exactcore import BaseRing, Reducer, Scalar, sparse_solve
from .fock import FockModule
from .heisenberg import (Element, Gen, HeisenbergAlgebra, NormalOrderAlgebra, Subspace,
                         SymplecticSpace, Vec, WeylAlgebra, Word, _acc, _left_inverse,
                         _o_generators, _perp_vectors, supercommutator, commutator)

Terms = Dict[Word, Scalar]


class ChartError(ValueError):
    pass


# ----------------------------------------------------------------- vector fields

class VectorField:
    """sum_t comps[t] * d/dt over the base coordinates (left derivatives for odd t)."""

    def __init__(self, ring: BaseRing, comps: Mapping[str, object]):
        self.ring = ring
        names = set(ring.even_names) | set(ring.odd_names)
        self.comps: Dict[str, Scalar] = {}
        for n, c in comps.items():
            if n not in names:
                raise KeyError(f"unknown base coordinate {n!r}")
            s = ring.scalar(c)
            if s:
                self.comps[n] = s
        par = self.parity()
        if par is None:
            raise ValueError("vector field is not homogeneous")

    @classmethod
    def coordinate(cls, ring: BaseRing, name: str) -> "VectorField":
        return cls(ring, {name: 1})

    def parity(self) -> Optional[int]:
        ps = set()
        for n, c in self.comps.items():
            cp = c.parity()
            if cp is None:
                return None
            ps.add(cp ^ (1 if self.ring.is_odd_name(n) else 0))
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def __call__(self, f: Scalar) -> Scalar:
        out = self.ring.zero
        for n, c in self.comps.items():
            d = f.deriv(n)
            if d:
                out = out + c * d
        return out

    def __add__(self, other: "VectorField") -> "VectorField":
        t = dict(self.comps)
        for n, c in other.comps.items():
            t[n] = t[n] + c if n in t else c
        return VectorField(self.ring, t)

    def scale(self, c) -> "VectorField":
        c = self.ring.scalar(c)
        return VectorField(self.ring, {n: c * a for n, a in self.comps.items()})

    def bracket(self, other: "VectorField") -> "VectorField":
        s = -1 if (self.parity() & other.parity()) else 1
        names = sorted(set(self.comps) | set(other.comps)
                       | set(self.ring.even_names) | set(self.ring.odd_names))
        t = {}
        for n in names:
            a = self(other.comps.get(n, self.ring.zero))
            b = other(self.comps.get(n, self.ring.zero))
            v = a - b if s > 0 else a + b
            if v:
                t[n] = v
        return VectorField(self.ring, t)

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.comps == other.comps

    def __str__(self):
        if not self.comps:
            return "0"
        return " + ".join(f"({c})*d_{n}" for n, c in sorted(self.comps.items()))


# ----------------------------------------------------------------- charts

class Chart:
    """Normalized graph chart of an isotropic family, in a constant frame."""

    def __init__(self, space: SymplecticSpace, i0: Sequence[Vec], dual: Sequence[Vec],
                 vprime: Sequence[Vec], phi, psi, lam, i0_names: Sequence[str] = None,
                 dual_names: Sequence[str] = None, vprime_names: Sequence[str] = None,
                 name: str = ""):
        self.space = space
        self.ring = ring = space.ring
        self.name = name
        self.i0, self.dual, self.vprime = list(i0), list(dual), list(vprime)
        m, k = len(self.i0), len(self.vprime)
        self.m, self.k = m, k
        if len(self.dual) != m:
            raise ChartError("I0 and its dual need the same number of vectors")
        if 2 * m + k != space.dim:
            raise ChartError("frame does not have the size of V")
        self.i0_names = list(i0_names or [f"u{i + 1}" for i in range(m)])
        self.dual_names = list(dual_names or [f"u{i + 1}s" for i in range(m)])
        self.vprime_names = list(vprime_names or [f"f{i + 1}" for i in range(k)])
        self._check_frame()
        self.i0_par = [space.vec_parity(v) for v in self.i0]
        self.vp_par = [space.vec_parity(v) for v in self.vprime]
        self.phi = [[ring.scalar(a) for a in row] for row in phi] if m else []
        self.psi = [[ring.scalar(a) for a in row] for row in psi] if k and m else [[] for _ in range(k)]
        self.lam = [ring.scalar(c) for c in lam]
        if len(self.phi) != m or any(len(r) != m for r in self.phi):
            raise ChartError(f"phi must be {m}x{m}")
        if len(self.psi) != k or any(len(r) != m for r in self.psi):
            raise ChartError(f"psi must be {k}x{m}")
        if len(self.lam) != m:
            raise ChartError(f"lambda must have {m} entries")
        self.generators = [self.generator(j) for j in range(m)]
        for j, g in enumerate(self.generators):
            if space.vec_parity(g) is None:
                raise ChartError(f"generator {j + 1} is not homogeneous (graph data has the wrong parity)")
        self.check_constraint()
        self.model = WeylAlgebra(space, self.vprime + self.dual, self.vprime_names + self.dual_names)
        self.ops = OperatorAlgebra(self)

    # frame
    def _check_frame(self):
        sp = self.space
        z = lambda a, b: not sp.pairing(a, b)
        for i, e in enumerate(self.i0):
            for j, d in enumerate(self.dual):
                want = 1 if i == j else 0
                if sp.pairing(d, e) != sp.ring.const(want):
                    raise ChartError(f"frame: ({self.dual_names[j]}, {self.i0_names[i]}) must be {want}")
            for e2 in self.i0:
                if not z(e, e2):
                    raise ChartError("frame: I0 is not isotropic")
        for d in self.dual:
            for d2 in self.dual:
                if not z(d, d2):
                    raise ChartError("frame: the dual of I0 is not isotropic")
        for f in self.vprime:
            for u in self.i0 + self.dual:
                if not z(f, u):
                    raise ChartError("frame: V' is not orthogonal to I0 + I0*")
        for v in self.i0 + self.dual + self.vprime:
            if sp.vec_parity(v) is None or v.central:
                raise ChartError("frame vectors must be homogeneous and central-free")
            if any(c.terms and not c.is_constant() for c in v.coords):
                raise ChartError("frame vectors must be constant")

    def frame(self) -> List[Vec]:
        return self.i0 + self.dual + self.vprime

    def frame_coordinates(self, v: Vec) -> List[Scalar]:
        """Coordinates of v (central part ignored) in the frame I0, I0*, V'."""
        G = [list(f.coords) for f in self.frame()]
        N = _inverse_constant(self.ring, G)
        n = len(G)
        out = []
        for k in range(n):
            acc = self.ring.zero
            for i in range(n):
                if v.coords[i] and N[i][k]:
                    acc = acc + v.coords[i] * N[i][k]
            out.append(acc)
        return out

    def generator(self, j: int) -> Vec:
        v = self.i0[j]
        for i in range(self.m):
            if self.phi[i][j]:
                v = v + self.dual[i].scale(self.phi[i][j])
        for i in range(self.k):
            if self.psi[i][j]:
                v = v + self.vprime[i].scale(self.psi[i][j])
        return Vec(v.central + self.lam[j], v.coords)

    def check_constraint(self):
        """Isotropy of the generators, i.e. -phi* + phi + psi^dagger psi = 0."""
        sp = self.space
        for i, a in enumerate(self.generators):
            for j in range(i, self.m):
                val = sp.pairing(a, self.generators[j])
                if val:
                    raise ChartError(
                        f"constraint violation in chart {self.name or '?'}: "
                        f"(l{i + 1}, l{j + 1}) = {val}")

    def subspace(self) -> Subspace:
        return Subspace(HeisenbergAlgebra(self.space), self.generators, self.name or "I")

    @classmethod
    def from_generators(cls, space: SymplecticSpace, gens: Sequence[Vec], i0: Sequence[Vec],
                        dual: Sequence[Vec], vprime: Sequence[Vec], **kw) -> "Chart":
        """Normalize arbitrary generators of the family against the I0 block."""
        ring = space.ring
        m, k = len(i0), len(vprime)
        probe = cls.__new__(cls)
        probe.space, probe.ring = space, ring
        probe.i0, probe.dual, probe.vprime = list(i0), list(dual), list(vprime)
        coords = [probe.frame_coordinates(g) for g in gens]
        if len(gens) != m:
            raise ChartError("need as many generators as I0 vectors")
        block = [c[:m] for c in coords]
        try:
            Ninv = _left_inverse(ring, block)
        except ZeroDivisionError:
            raise ChartError("family is not a graph over I0 in this frame") from None
        phi = [[ring.zero] * m for _ in range(m)]
        psi = [[ring.zero] * m for _ in range(k)]
        lam = [ring.zero] * m
        for j in range(m):
            acc = [ring.zero] * (2 * m + k)
            cen = ring.zero
            for jj in range(m):
                c = Ninv[j][jj]
                if not c:
                    continue
                acc = [a + c * b for a, b in zip(acc, coords[jj])]
                cen = cen + c * gens[jj].central
            for i in range(m):
                phi[i][j] = acc[m + i]
            for i in range(k):
                psi[i][j] = acc[2 * m + i]
            lam[j] = cen
        return cls(space, i0, dual, vprime, phi, psi, lam, **kw)

    # right Fock module of the same family, for audits
    def fock_module(self, validate: int = 0) -> FockModule:
        return FockModule(self.subspace(), "right", complement=self.vprime + self.dual,
                          complement_names=self.vprime_names + self.dual_names, validate=validate)

    def model_from_fock(self, M: FockModule, x) -> Element:
        off = len(M.subspace.generators)
        return self.model.element({tuple(g - off for g in w): c for w, c in x.terms.items()})

    def model_to_fock(self, M: FockModule, x: Element):
        off = len(M.subspace.generators)
        return M.vector({tuple(g + off for g in w): c for w, c in x.terms.items()})


def _inverse_constant(ring: BaseRing, G):
    """Inverse of a constant rational matrix (rows = frame vectors)."""
    n = len(G)
    A = sympy.Matrix(n, n, lambda i, j: sympy.Rational(str(ring.kstr(G[i][j].body())))
                     if G[i][j] else 0)
    if A.det() == 0:
        raise ChartError("frame vectors are linearly dependent")
    B = A.inv()
    return [[ring.const(sympy.Rational(B[i, j])) if B[i, j] else ring.zero for j in range(n)]
            for i in range(n)]


# ----------------------------------------------------------------- operator algebra

class OperatorAlgebra(NormalOrderAlgebra):
    """Normal-ordered operators on a chart model.

    Generator order: l(V'), l(I0*), J, dr(I0), r(V'), d(base coordinates).
    """

    def __init__(self, chart: Chart):
        self.chart = chart
        ring = chart.ring
        sp = chart.space
        m, k = chart.m, chart.k
        mvecs = chart.vprime + chart.dual
        mpars = chart.vp_par + [sp.vec_parity(d) for d in chart.dual]
        mnames = chart.vprime_names + chart.dual_names
        half = ring.const(1) / ring.const(2)
        gens: List[Gen] = []
        kinds: List[Tuple[str, int]] = []
        for a, (v, p, n) in enumerate(zip(mvecs, mpars, mnames)):
            om = sp.pairing(v, v)
            gens.append(Gen(f"l[{n}]", p, p, None, ({(): om * half} if om else {}) if p else None))
            kinds.append(("l", a))
        self.j_index = len(gens)
        gens.append(Gen("J", 0, 1, None, {(): ring.one}))
        kinds.append(("J", 0))
        self.dr_start = len(gens)
        for i in range(m):
            p = chart.i0_par[i]
            gens.append(Gen(f"dr[{chart.i0_names[i]}]", p, 0, None, {} if p else None))
            kinds.append(("dr", i))
        self.r_start = len(gens)
        for i in range(k):
            p = chart.vp_par[i]
            om = sp.pairing(chart.vprime[i], chart.vprime[i])
            gens.append(Gen(f"r[{chart.vprime_names[i]}]", p, 0, None,
                            ({(): om * half} if om else {}) if p else None))
            kinds.append(("r", i))
        self.d_start = len(gens)
        self.coords = list(ring.even_names) + list(ring.odd_names)
        for t in self.coords:
            p = 1 if ring.is_odd_name(t) else 0
            gens.append(Gen(f"d[{t}]", p, p, (lambda c, t=t: c.deriv(t)), {} if p else None))
            kinds.append(("d", t))
        self.kinds = kinds
        self.mvecs, self.mpars = mvecs, mpars
        pars = [g.parity for g in gens]

        def rule(a, b):
            ka, ia = kinds[a]
            kb, ib = kinds[b]
            pa, pb = pars[a], pars[b]
            s = -1 if pa & pb else 1
            if ka == kb == "l":
                c = sp.pairing(mvecs[ia], mvecs[ib])
                return s, ({(): c} if c else {})
            if ka == "J":  # J l_b
                return (-1 if pb else 1), {}
            if ka == "dr":
                if kb == "l":
                    if ib < k:
                        return 1, {}
                    c = sp.pairing(mvecs[ib], chart.i0[ia])
                    if not c:
                        return 1, {}
                    return 1, {((self.j_index,) if pb else ()): c}
                if kb == "J":
                    return (-1 if pa else 1), {}
                return s, {}
            if ka == "r":
                if kb == "l":
                    return 1, {}
                if kb == "J":
                    return (-1 if pa else 1), {}
                if kb == "dr":
                    return s, {}
                # r_a r_b = (-1)^{ab} r_b r_a + (b, a)
                c = sp.pairing(chart.vprime[ib], chart.vprime[ia])
                return s, ({(): c} if c else {})
            # base derivations
            if kb == "l":
                return s, {}
            if kb == "J":
                return (-1 if pa else 1), {}
            if kb in ("dr", "r"):
                return 1, {}
            return s, {}

        super().__init__(ring, gens, rule)

    # generators
    def l(self, x: Element) -> Element:
        """Left multiplication by a model element."""
        out = self.zero()
        for w, c in x.terms.items():
            out = out + c * self.element({w: self.ring.one})
        return out

    def l_vec(self, v: Vec) -> Element:
        """Left multiplication by a vector of V' + I0* (plus its central part)."""
        c = self.chart
        co = c.frame_coordinates(v)
        if any(co[:c.m]):
            raise ValueError("vector has an I0 component")
        out = self.scalar(v.central)
        for a, x in enumerate(co[2 * c.m:] + co[c.m:2 * c.m]):
            if x:
                out = out + x * self.gen(a)
        return out

    def J(self) -> Element:
        return self.gen(self.j_index)

    def dr(self, i: int) -> Element:
        return self.gen(self.dr_start + i)

    def r(self, i: int) -> Element:
        return self.gen(self.r_start + i)

    def d(self, name: str) -> Element:
        return self.gen(self.d_start + self.coords.index(name))

    def vf(self, v: VectorField) -> Element:
        out = self.zero()
        for n, c in v.comps.items():
            out = out + c * self.d(n)
        return out

    # structure of operators
    def symbol(self, D: Element) -> VectorField:
        comps = {}
        for w, c in D.terms.items():
            if len(w) == 1 and w[0] >= self.d_start:
                comps[self.coords[w[0] - self.d_start]] = c
            elif any(g >= self.d_start for g in w):
                if len(w) > 1:
                    raise ValueError("operator is not of the form v + l_X")
        return VectorField(self.ring, comps)

    def l_part(self, D: Element) -> Element:
        """The model element X of an operator v + l_X."""
        t = {}
        for w, c in D.terms.items():
            if w and w[-1] >= self.d_start:
                continue
            if any(g >= len(self.mvecs) for g in w):
                raise ValueError("operator is not of the form v + l_X")
            t[w] = c
        return self.chart.model.element(t)

    # action on the model
    def _apply_gen(self, g: int, x: Terms) -> Terms:
        kind, i = self.kinds[g]
        model = self.chart.model
        one = self.ring.one
        if kind == "l":
            return model._mul_terms({(i,): one}, x)
        if kind == "r":
            return model._mul_terms(x, {(i,): one})
        if kind == "d":
            out: Terms = {}
            for w, c in x.items():
                _acc(out, w, c.deriv(i))
            return out
        if kind == "J":
            out = {}
            for w, c in x.items():
                p = sum(self.mpars[a] for a in w) & 1
                tc = c.twist()
                _acc(out, w, -tc if p else tc)
            return out
        # right derivation along the I0 vector i
        out = {}
        xp = self.chart.i0_par[i]
        k = self.chart.k
        for w, c in x.items():
            tail = 0
            for pos in range(len(w) - 1, -1, -1):
                a = w[pos]
                if a >= k:
                    val = self.chart.space.pairing(self.mvecs[a], self.chart.i0[i])
                    if val:
                        coef = c * val
                        _acc(out, w[:pos] + w[pos + 1:], -coef if (xp and tail) else coef)
                tail ^= self.mpars[a]
        return out

    def apply(self, D: Element, x: Element) -> Element:
        """D applied to a model element (coefficients on the left)."""
        out: Terms = {}
        for w, c in D.terms.items():
            y = dict(x.terms)
            for g in reversed(w):
                y = self._apply_gen(g, y)
                if not y:
                    break
            for u, d in y.items():
                _acc(out, u, c * d)
        return self.chart.model.element(out)


# ----------------------------------------------------------------- right action

def right_action_ops(c: Chart) -> Dict[str, Element]:
    """Operators of right multiplication by the ambient basis vectors (and by the frame)."""
    A = c.ops
    sp = c.space
    frame_ops = []
    for i in range(c.m):
        lv = c.space.zero_vec()
        for a in range(c.m):
            if c.phi[a][i]:
                lv = lv + c.dual[a].scale(c.phi[a][i])
        for a in range(c.k):
            if c.psi[a][i]:
                lv = lv + c.vprime[a].scale(c.psi[a][i])
        lv = Vec(c.lam[i], lv.coords)
        term = A.l_vec(lv)
        if c.i0_par[i]:
            term = term * A.J()
        frame_ops.append(A.dr(i) - term)
    for i in range(c.m):
        op = A.gen(c.k + i)
        if sp.vec_parity(c.dual[i]):
            op = op * A.J()
        frame_ops.append(op)
    for i in range(c.k):
        frame_ops.append(A.r(i))
    out = {}
    for name, op in zip(c.i0_names + c.dual_names + c.vprime_names, frame_ops):
        out["frame:" + name] = op
    for b in range(sp.dim):
        co = c.frame_coordinates(sp.basis_vec(b))
        op = A.zero()
        for x, f in zip(co, frame_ops):
            if x:
                op = op + x * f
        out[sp.names[b]] = op
    return out


def weyl_relation_defects(c: Chart) -> List[Tuple[str, str, Element]]:
    """Nonzero values of r_b r_a - (-1)^{ab} r_a r_b - (a, b) on ambient basis pairs."""
    sp = c.space
    ops = right_action_ops(c)
    bad = []
    for a in range(sp.dim):
        for b in range(a, sp.dim):
            ra, rb = ops[sp.names[a]], ops[sp.names[b]]
            s = -1 if sp.parities[a] & sp.parities[b] else 1
            lhs = rb * ra - ra * rb if s > 0 else rb * ra + ra * rb
            diff = lhs - c.ops.scalar(sp.gram[a][b])
            if diff:
                bad.append((sp.names[a], sp.names[b], diff))
    return bad


def audit_right_action(c: Chart, N: int = 3) -> List[str]:
    """Compare the right-action operators with the Fock module on monomials of degree <= N."""
    M = c.fock_module()
    ops = right_action_ops(c)
    sp = c.space
    problems = []
    for w in M.basis(N):
        x = M.monomial(w)
        xm = c.model_from_fock(M, x)
        for b in range(sp.dim):
            want = M.act_vec(sp.basis_vec(b), x)
            got = c.model_to_fock(M, c.ops.apply(ops[sp.names[b]], xm))
            if got != want:
                problems.append(f"{sp.names[b]} on {M.word_str(w)}")
    return problems


# ----------------------------------------------------------------- lifts

def build_lift(c: Chart, v: VectorField) -> Element:
    """D_v = v + l_{F+G}, commuting with the right action and with symbol v."""
    A = c.ops
    ring = c.ring
    m, k = c.m, c.k
    vp = v.parity()
    half = ring.const(1) / ring.const(2)
    ep, fp = c.i0_par, c.vp_par
    va = [[v(c.phi[i][j]) for j in range(m)] for i in range(m)]
    vb = [[v(c.psi[i][j]) for j in range(m)] for i in range(k)]
    vc = [v(x) for x in c.lam]
    fpair = [[c.space.pairing(c.vprime[a], c.vprime[b]) for b in range(k)] for a in range(k)]
    Ls = [A.gen(k + i) for i in range(m)]
    Lf = [A.gen(i) for i in range(k)]
    D = A.vf(v)
    for i in range(m):
        for j in range(m):
            Aij = ring.zero
            for kk in range(k):
                for ll in range(k):
                    if not fpair[ll][kk]:
                        continue
                    t = c.psi[kk][j] * vb[ll][i] * fpair[ll][kk]
                    if (vp * (ep[j] + fp[kk]) + ep[i] * fp[kk]) % 2:
                        t = -t
                    Aij = Aij + t
            coef = (Aij - va[i][j]) * half
            if coef:
                D = D + coef * (Ls[i] * Ls[j])
        if vc[i]:
            D = D - vc[i] * Ls[i]
    for i in range(k):
        for j in range(m):
            if vb[i][j]:
                D = D - vb[i][j] * (Lf[i] * Ls[j])
    return D


def commutation_defects(c: Chart, D: Element) -> Dict[str, Element]:
    """Plain commutators [D, r_b] that fail to vanish."""
    ops = right_action_ops(c)
    out = {}
    for name in c.space.names:
        x = commutator(D, ops[name])
        if x:
            out[name] = x
    return out


def _l_monomials(c: Chart) -> List[Word]:
    """Model words spanning S^2(I0*) + I0* + V' (x) I0*."""
    k, m = c.k, c.m
    pars = c.ops.mpars
    out = []
    for i in range(m):
        for j in range(i, m):
            if i == j and pars[k + i]:
                continue
            out.append((k + i, k + j))
    out += [(k + i,) for i in range(m)]
    out += [(f, k + j) for f in range(k) for j in range(m)]
    return out


def _flat_op(x: Element, idx: Dict) -> Dict[int, object]:
    out = {}
    for w, c in x.terms.items():
        for S, a in c.terms.items():
            key = (w, S)
            if key not in idx:
                idx[key] = len(idx)
            out[idx[key]] = a
    return out


def solve_lift(c: Chart, v: VectorField) -> Optional[Element]:
    """Independent lift: solve [v + l_X, r_b] = 0 for X in S^2(I0*) + I0* + V' (x) I0*."""
    A = c.ops
    ring = c.ring
    ops = right_action_ops(c)
    frame = [ops["frame:" + n] for n in c.i0_names + c.dual_names + c.vprime_names]
    unknowns = []
    for w in _l_monomials(c):
        mono = A.element({w: ring.one})
        for T in ring.theta_subsets():
            unknowns.append(Scalar(ring, {T: ring.K.one}) * mono)
    idx: Dict = {}
    cols = []
    for u in unknowns:
        col = {}
        for a, r in enumerate(frame):
            for key, val in _flat_op(commutator(u, r), idx).items():
                col[(a, key)] = val
        cols.append(col)
    V = A.vf(v)
    target = {}
    for a, r in enumerate(frame):
        for key, val in _flat_op(commutator(V, r), idx).items():
            target[(a, key)] = -val
    keys = sorted({k for col in cols for k in col} | set(target))
    kidx = {k: n for n, k in enumerate(keys)}
    cols = [{kidx[k]: v_ for k, v_ in col.items()} for col in cols]
    tgt = {kidx[k]: v_ for k, v_ in target.items()}
    sol = sparse_solve(cols, tgt)
    if sol is None:
        return None
    D = V
    for j, a in sol.items():
        D = D + Scalar(ring, {(): ring.K.convert(a)}) * unknowns[j]
    return D


def curvature(lift: Callable[[VectorField], Element], fields: Sequence[VectorField]
              ) -> Dict[Tuple[int, int], Element]:
    """[lift(v), lift(w)] - lift([v, w]) on all pairs (including v = w for odd fields)."""
    out = {}
    for i, v in enumerate(fields):
        for j in range(i, len(fields)):
            w = fields[j]
            if i == j and not v.parity():
                continue
            val = supercommutator(lift(v), lift(w)) - lift(v.bracket(w))
            out[(i, j)] = val
    return out


def coordinate_fields(ring: BaseRing, names: Optional[Sequence[str]] = None) -> List[VectorField]:
    names = list(names) if names is not None else list(ring.even_names) + list(ring.odd_names)
    return [VectorField.coordinate(ring, n) for n in names]


# ----------------------------------------------------------------- canonical connection

@dataclass
class CanonicalConnection:
    chart: Chart
    J: List[Vec]
    hbar: List[Vec]
    kernel_basis: List[Tuple[str, Element]]      # (label, model element [u])
    lifts: Dict[str, Element]
    corrections: Dict[str, Element]

    def __call__(self, v: VectorField) -> Element:
        """Linear extension over the coordinate fields."""
        A = self.chart.ops
        out = A.zero()
        for n, a in v.comps.items():
            out = out + a * self.lifts[n]
        return out


class NormalizationError(ArithmeticError):
    pass


class _Decomposer:
    """Coordinates of a model element in the basis [u_alpha s_beta] over K."""

    def __init__(self, c: Chart, hbar: Sequence[Vec], J: Sequence[Vec]):
        self.c = c
        self.M = M = c.fock_module()
        ring = c.ring
        hv = list(hbar)
        one = [("1", M.vacuum())]
        U1 = [(f"h{a + 1}", M.act_vec(h, M.vacuum())) for a, h in enumerate(hv)]
        U2 = []
        for a, h in enumerate(hv):
            for b in range(a, len(hv)):
                if a == b and c.space.vec_parity(h):
                    continue
                U2.append((f"h{a + 1}h{b + 1}", M.act_vec(hv[b], M.act_vec(h, M.vacuum()))))
        self.kernel = one + U1 + U2
        jp = [c.space.vec_parity(j) for j in J]
        S1 = [(f"j{a + 1}", j) for a, j in enumerate(J)]
        S2 = [(f"j{a + 1}j{b + 1}", (J[a], J[b])) for a in range(len(J)) for b in range(a, len(J))
              if not (a == b and jp[a])]
        basis = []   # (label, allowed, vector)
        for lab, x in self.kernel:
            deg = 0 if lab == "1" else (1 if lab in dict(U1) else 2)
            basis.append((lab, False, x))
            if deg <= 1:
                for sl, j in S1:
                    basis.append((lab + "*" + sl, True, M.act_vec(j, x)))
            if deg == 0:
                for sl, (ja, jb) in S2:
                    basis.append((sl, True, M.act_vec(jb, M.act_vec(ja, x))))
        self.basis = basis
        words = M.basis(2)
        self.idx = M.flat_index(words)
        self.cols, self.meta = [], []
        for lab, ok, x in basis:
            for t in M.theta_multiples(x):
                self.cols.append(M.flatten(t, self.idx))
            self.meta.append((lab, ok))
        r = Reducer()
        for col in self.cols:
            r.add(col)
        if len(r) != len(self.cols) or len(self.cols) != len(self.idx):
            raise NormalizationError("the [u s] vectors do not form a basis of M_{<=2}; "
                                     "check that I and J pair perfectly")

    def coordinates(self, x: Element) -> List[Tuple[str, bool, Scalar]]:
        M, ring = self.M, self.c.ring
        fx = self.c.model_to_fock(M, x)
        if fx.level() > 2:
            raise NormalizationError("D(1) leaves M_{<=2}")
        sol = sparse_solve(self.cols, M.flatten(fx, self.idx))
        if sol is None:
            raise NormalizationError("D(1) is not in the span of the [u s] basis")
        subs = ring.theta_subsets()
        out = []
        for n, (lab, ok) in enumerate(self.meta):
            t = {}
            for s, T in enumerate(subs):
                a = sol.get(n * len(subs) + s)
                if a:
                    t[T] = ring.K.convert(a)
            out.append((lab, ok, Scalar(ring, t)))
        return out


def hbar_generators(c: Chart, J: Sequence[Vec]) -> List[Vec]:
    """O-generators of the part of V orthogonal to I and J (a model of the reduced space)."""
    sp = c.space
    return _o_generators(sp, _perp_vectors(sp, list(c.generators) + list(J)))


def canonical_connection(c: Chart, J: Sequence[Vec], names: Optional[Sequence[str]] = None
                         ) -> CanonicalConnection:
    """Correct the explicit lifts by U_{<=2}(Hbar) so that D(1) lies in S^2(J) + U_{<=1}(Hbar) J."""
    A = c.ops
    sp = c.space
    for j in J:
        if any(x.terms and not x.is_constant() for x in j.coords) or j.central:
            raise NormalizationError("J must be constant (horizontal)")
    P = [[sp.pairing(g, j) for j in J] for g in c.generators]
    if len(J) != c.m:
        raise NormalizationError("J must have the rank of I")
    try:
        _left_inverse(c.ring, P)
    except ZeroDivisionError:
        raise NormalizationError("the pairing between I and J is not perfect") from None
    hbar = hbar_generators(c, J)
    dec = _Decomposer(c, hbar, J)
    kb = [(lab, c.model_from_fock(dec.M, x)) for lab, x in dec.kernel]
    lifts, corr = {}, {}
    for v in coordinate_fields(c.ring, names):
        n = next(iter(v.comps))
        D = build_lift(c, v)
        X = A.zero()
        kmap = dict(kb)
        for lab, ok, a in dec.coordinates(A.apply(D, c.model.one())):
            if not ok and a:
                X = X + a * A.l(kmap[lab])
        lifts[n] = D - X
        corr[n] = X
    return CanonicalConnection(c, list(J), hbar, kb, lifts, corr)


def normalization_violations(conn: CanonicalConnection) -> Dict[str, bool]:
    """Per coordinate field: the lift is normalized, and each D + l_[u] (u a kernel basis element) is not."""
    c = conn.chart
    dec = _Decomposer(c, conn.hbar, conn.J)
    res = {}
    for n, D in conn.lifts.items():
        base = all(ok or not a for _, ok, a in dec.coordinates(c.ops.apply(D, c.model.one())))
        res[f"{n}"] = base
        for lab, u in conn.kernel_basis:
            E = D + c.ops.l(u)
            broken = not all(ok or not a for _, ok, a in dec.coordinates(c.ops.apply(E, c.model.one())))
            res[f"{n}+{lab}"] = broken
    return res


# ----------------------------------------------------------------- gamma operators

def model_class(c: Chart, w: Element) -> Element:
    """[w] = vac.w in the chart model, for w in the standard Weyl algebra of the space."""
    M = c.fock_module()
    return c.model_from_fock(M, M.act(w, M.vacuum(), "right"))


def gamma(c: Chart, w: Element, v: VectorField) -> Element:
    """gamma(w) = v_w + l_[w] for a supplied infinitesimal action v_w."""
    return c.ops.vf(v) + c.ops.l(model_class(c, w))


def tangent_field(c: Chart, w: Element, names: Optional[Sequence[str]] = None) -> Optional[VectorField]:
    """Solve for the vector field v with v + l_[w] commuting with the right action."""
    A = c.ops
    ring = c.ring
    names = list(names) if names is not None else A.coords
    ops = right_action_ops(c)
    frame = [ops["frame:" + n] for n in c.i0_names + c.dual_names + c.vprime_names]
    L = A.l(model_class(c, w))
    unknowns = []
    for n in names:
        for T in ring.theta_subsets():
            unknowns.append((n, T, Scalar(ring, {T: ring.K.one}) * A.d(n)))
    idx: Dict = {}
    cols = []
    for _, _, u in unknowns:
        col = {}
        for a, r in enumerate(frame):
            for key, val in _flat_op(commutator(u, r), idx).items():
                col[(a, key)] = val
        cols.append(col)
    target = {}
    for a, r in enumerate(frame):
        for key, val in _flat_op(commutator(L, r), idx).items():
            target[(a, key)] = -val
    keys = sorted({k for col in cols for k in col} | set(target), key=repr)
    kidx = {k: n for n, k in enumerate(keys)}
    cols_i = [{kidx[k]: x for k, x in col.items()} for col in cols]
    sol = sparse_solve(cols_i, {kidx[k]: x for k, x in target.items()})
    if sol is None:
        return None
    comps: Dict[str, Scalar] = {}
    for j, a in sol.items():
        n, T, _ = unknowns[j]
        comps[n] = comps.get(n, ring.zero) + Scalar(ring, {T: ring.K.convert(a)})
    return VectorField(ring, comps)


class GammaMap:
    """Linear gamma on a span of Weyl elements with supplied (or solved) fields v_w."""

    def __init__(self, c: Chart, table: Sequence[Tuple[Element, VectorField]]):
        self.c = c
        self.table = list(table)
        self.W = self.table[0][0].algebra
        idx: Dict = {}
        self.red_cols = []
        for w, _ in self.table:
            self.red_cols.append(_flat_op(w, idx))
        self.idx = idx

    def field(self, w: Element) -> VectorField:
        if not w.terms:
            return VectorField(self.c.ring, {})
        rest = {(): w.terms[()]} if () in w.terms else {}
        w0 = w - self.W.element(rest)
        if not w0:
            return VectorField(self.c.ring, {})
        idx = dict(self.idx)
        tgt = _flat_op(w0, idx)
        if len(idx) != len(self.idx):
            raise ValueError(f"{w} is outside the span of the table")
        sol = sparse_solve(self.red_cols, tgt)
        if sol is None:
            raise ValueError(f"{w} is outside the span of the table")
        v = VectorField(self.c.ring, {})
        for j, a in sol.items():
            v = v + self.table[j][1].scale(self.c.ring.const(a))
        return v

    def __call__(self, w: Element) -> Element:
        return gamma(self.c, w, self.field(w))

    def homomorphism_defects(self) -> Dict[Tuple[int, int], Element]:
        out = {}
        ws = [w for w, _ in self.table]
        for i in range(len(ws)):
            for j in range(i, len(ws)):
                a, b = ws[i], ws[j]
                lhs = self(supercommutator(a, b))
                rhs = supercommutator(self(a), self(b))
                if lhs != rhs:
                    out[(i, j)] = lhs - rhs
        return out


# ----------------------------------------------------------------- the two-dimensional example

def lg2_space(ring: BaseRing) -> SymplecticSpace:
    """Even plane with basis e, e* and (e*, e) = 1."""
    return SymplecticSpace(ring, ["e", "es"], [0, 0], [[0, -1], [1, 0]])


def lg2_chart0(ring: Optional[BaseRing] = None) -> Chart:
    """The line spanned by e + x e* + lambda, model O[e*]."""
    ring = ring or BaseRing(["x", "lam"])
    sp = lg2_space(ring)
    e, es = sp.basis_vec("e"), sp.basis_vec("es")
    return Chart(sp, [e], [es], [], [[ring.var("x")]], [], [ring.var("lam")],
                 i0_names=["e"], dual_names=["es"], name="U0")


def lg2_chart1(ring: Optional[BaseRing] = None) -> Chart:
    """The line spanned by -y e + e* + mu, model generated by d = -e."""
    ring = ring or BaseRing(["y", "mu"])
    sp = lg2_space(ring)
    e, es = sp.basis_vec("e"), sp.basis_vec("es")
    return Chart(sp, [es], [-e], [], [[ring.var("y")]], [], [ring.var("mu")],
                 i0_names=["es"], dual_names=["d"], name="U1")


def lg2_gamma_table(c: Chart) -> List[Tuple[Element, VectorField]]:
    """The infinitesimal action of W_{<=2} on the base of the first chart."""
    ring = c.ring
    W = WeylAlgebra(c.space)
    e, es = W.gen("e"), W.gen("es")
    x, lam = ring.var("x"), ring.var("lam")
    half = ring.const(1) / ring.const(2)
    V = lambda **kw: VectorField(ring, kw)
    return [
        (es, V(lam=-1)),
        (e, V(lam=x)),
        (half * (es * es), V(x=-1)),
        (e * es, V(x=2 * x, lam=lam)),
        (half * (e * e), V(x=-(x * x), lam=-(x * lam))),
    ]


def heat_operator(c0: Chart) -> Element:
    """2 nabla(d_x) + nabla(d_lam)^2 on the first chart."""
    A = c0.ops
    Dx = build_lift(c0, VectorField.coordinate(c0.ring, "x"))
    Dl = build_lift(c0, VectorField.coordinate(c0.ring, "lam"))
    return 2 * Dx + Dl * Dl


@dataclass
class HeatReport:
    degrees: List[int]
    annihilated: List[bool]
    cutoff: int

    @property
    def ok(self) -> bool:
        return all(self.annihilated)


def heat_check(c0: Chart, max_degree: int = 6) -> HeatReport:
    """The heat operator kills the class of vac.(e*)^k in the coinvariants by span(e)."""
    from .homology import Coinvariants
    M = c0.fock_module()
    H = HeisenbergAlgebra(c0.space)
    L0 = Subspace(H, [c0.space.basis_vec("e")], "L0")
    N = max_degree + 4
    Q = Coinvariants(L0, M, N)
    op = heat_operator(c0)
    es = c0.model.gen("es")
    degs, res = [], []
    for k in range(max_degree + 1):
        mk = es ** k
        y = c0.ops.apply(op, mk)
        degs.append(k)
        res.append(Q.is_zero(c0.model_to_fock(M, y)))
    return HeatReport(degs, res, N)


# ----------------------------------------------------------------- transition cocycle

@dataclass
class CechResult:
    differences: Dict[str, sympy.Expr]      # nabla1(d_t) - nabla0(d_t) for t in (y, mu)
    omega: Tuple[sympy.Expr, sympy.Expr]    # coefficients of dx, dlam
    closed: bool
    omega0: sympy.Expr                      # dx coefficient of the restriction to lam = 0
    primitive: sympy.Expr
    primitive_ok: bool


def _scalar_expr(s: Scalar) -> sympy.Expr:
    if set(s.terms) - {()}:
        raise ValueError("expected an even scalar")
    K = s.ring.K
    return sympy.sympify(K.to_sympy(s.body())) if s.terms else sympy.Integer(0)


def _expr_scalar(ring: BaseRing, e: sympy.Expr) -> Scalar:
    e = sympy.cancel(sympy.sympify(e))
    if e == 0:
        return ring.zero
    return Scalar(ring, {(): ring.K.from_sympy(e)})


def cech_class_lg2(primitive: str = "-lam**2/(2*x)") -> CechResult:
    """nabla1 - nabla0 on the overlap of the two charts, by applying both to the vacuum."""
    c0, c1 = lg2_chart0(), lg2_chart1()
    r0, r1 = c0.ring, c1.ring
    X, L, Y, MU = sympy.symbols("x lam y mu")
    to0 = {Y: -1 / X, MU: L / X}
    # inverse transition: x = -1/y, lam = -mu/y
    x_of, l_of = -1 / Y, -MU / Y
    M0 = c0.fock_module()

    def to_model0(elem1: Element) -> Element:
        """Transport an element of the second chart model into the first."""
        out = M0.vector({})
        for w, coef in elem1.terms.items():
            cexpr = _scalar_expr(coef).subs(to0)
            y = M0.vacuum()
            for g in w:
                v1 = c1.model.vectors[g]
                v0 = Vec(r0.zero, tuple(_expr_scalar(r0, _scalar_expr(a)) for a in v1.coords))
                y = M0.act_vec(v0, y)
            out = out + _expr_scalar(r0, cexpr) * y
        return c0.model_from_fock(M0, out)

    D0 = {t: build_lift(c0, VectorField.coordinate(r0, t)) for t in ("x", "lam")}
    diffs = {}
    for t, T in (("y", Y), ("mu", MU)):
        D1 = build_lift(c1, VectorField.coordinate(r1, t))
        a = to_model0(c1.ops.apply(D1, c1.model.one()))
        # chain rule: d_t = (dx/dt) d_x + (dlam/dt) d_lam in the first coordinates
        cx = _expr_scalar(r0, sympy.diff(x_of, T).subs(to0))
        cl = _expr_scalar(r0, sympy.diff(l_of, T).subs(to0))
        D0t = cx * D0["x"] + cl * D0["lam"]
        b = c0.ops.apply(D0t, c0.model.one())
        d = a - b
        if set(d.terms) - {()}:
            raise ArithmeticError(f"nabla1 - nabla0 along d_{t} is not a scalar: {d}")
        diffs[t] = sympy.factor(_scalar_expr(d.scalar_part()))
    # omega = f dy + g dmu, pulled back to (x, lam)
    y0, mu0 = to0[Y], to0[MU]
    f, g = diffs["y"], diffs["mu"]
    wx = sympy.cancel(f * sympy.diff(y0, X) + g * sympy.diff(mu0, X))
    wl = sympy.cancel(f * sympy.diff(y0, L) + g * sympy.diff(mu0, L))
    closed = sympy.cancel(sympy.diff(wl, X) - sympy.diff(wx, L)) == 0
    w0 = sympy.cancel(wx.subs(L, 0))
    P = sympy.sympify(primitive, locals={"x": X, "lam": L})
    prim_ok = (sympy.cancel(wx - w0 - sympy.diff(P, X)) == 0
               and sympy.cancel(wl - sympy.diff(P, L)) == 0)
    return CechResult(diffs, (wx, wl), closed, w0, P, prim_ok)


# ----------------------------------------------------------------- doubling

def doubled_chart(c: Chart) -> Chart:
    """The chart of I + I inside V + V (orthogonal sum, shared center)."""
    sp, ring = c.space, c.ring
    n = sp.dim
    names = [f"{a}_1" for a in sp.names] + [f"{a}_2" for a in sp.names]
    gram = [[ring.zero] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            gram[i][j] = sp.gram[i][j]
            gram[n + i][n + j] = sp.gram[i][j]
    sp2 = SymplecticSpace(ring, names, sp.parities * 2, gram)
    z = ring.zero

    def emb(v: Vec, copy: int) -> Vec:
        pad = tuple([z] * n)
        return Vec(v.central, v.coords + pad if copy == 0 else pad + v.coords)

    def dup(vs, nm):
        return [emb(v, 0) for v in vs] + [emb(v, 1) for v in vs], \
               [f"{a}_1" for a in nm] + [f"{a}_2" for a in nm]

    i0, i0n = dup(c.i0, c.i0_names)
    du, dun = dup(c.dual, c.dual_names)
    vp, vpn = dup(c.vprime, c.vprime_names)
    m, k = c.m, c.k
    phi = [[z] * (2 * m) for _ in range(2 * m)]
    psi = [[z] * (2 * m) for _ in range(2 * k)]
    for i in range(m):
        for j in range(m):
            phi[i][j] = phi[m + i][m + j] = c.phi[i][j]
    for i in range(k):
        for j in range(m):
            psi[i][j] = psi[k + i][m + j] = c.psi[i][j]
    return Chart(sp2, i0, du, vp, phi, psi, list(c.lam) * 2, i0_names=i0n, dual_names=dun,
                 vprime_names=vpn, name=(c.name or "I") + "x2")


def double_operator(c: Chart, c2: Chart, D: Element) -> Element:
    """D (x) 1 + 1 (x) D for operators of the form v + l_X."""
    A, A2 = c.ops, c2.ops
    out = A2.vf(A.symbol(D))
    X = A.l_part(D)
    nm = c.k + c.m
    k, m = c.k, c.m

    def idx2(g: int, copy: int) -> int:
        # model order V' then I0*, each doubled
        if g < k:
            return g + copy * k
        return 2 * k + (g - k) + copy * m

    for w, coef in X.terms.items():
        for copy in (0, 1):
            t = A2.one()
            for g in w:
                t = t * A2.gen(idx2(g, copy))
            out = out + coef * t
    return out


@dataclass
class DoublingReport:
    scalar_doubles: bool
    lifts_commute: bool
    lifts_match: bool
    brackets_match: bool

    @property
    def ok(self) -> bool:
        return self.scalar_doubles and self.lifts_commute and self.lifts_match and self.brackets_match


def doubling_check(c: Chart, fields: Optional[Sequence[VectorField]] = None) -> DoublingReport:
    c2 = doubled_chart(c)
    fields = list(fields) if fields is not None else coordinate_fields(c.ring)
    ring = c.ring
    f = ring.var(ring.even_names[0]) if ring.even_names else ring.const(3)
    sd = double_operator(c, c2, c.ops.scalar(f)) == c2.ops.scalar(2 * f)
    lifts = [build_lift(c, v) for v in fields]
    dl = [double_operator(c, c2, D) for D in lifts]
    commute = all(not commutation_defects(c2, D) for D in dl)
    match = all(D == build_lift(c2, v) for D, v in zip(dl, fields))
    br = True
    for i in range(len(lifts)):
        for j in range(i, len(lifts)):
            lhs = supercommutator(dl[i], dl[j])
            rhs = double_operator(c, c2, supercommutator(lifts[i], lifts[j]))
            br = br and lhs == rhs
    return DoublingReport(sd, commute, match, br)


# ----------------------------------------------------------------- isotropic reduction

@dataclass
class ReductionAlgebroidReport:
    commutes: Dict[str, bool]
    matches: Dict[str, bool]
    kernel_ranks: Tuple[int, int]
    killed_acts_by_left: bool

    @property
    def ok(self) -> bool:
        return (all(self.commutes.values()) and all(self.matches.values())
                and self.kernel_ranks[0] == self.kernel_ranks[1] and self.killed_acts_by_left)


def reduce_operator(c: Chart, cbar: Chart, D: Element, kill: Sequence[str]) -> Element:
    """Induced operator on the quotient model where generators in ``kill`` are set to zero."""
    A, B = c.ops, cbar.ops
    names = c.vprime_names + c.dual_names
    bnames = cbar.vprime_names + cbar.dual_names
    out = B.vf(A.symbol(D))
    X = A.l_part(D)
    for w, coef in X.terms.items():
        if any(names[g] in kill for g in w):
            continue
        t = B.one()
        for g in w:
            t = t * B.gen(bnames.index(names[g]))
        out = out + coef * t
    return out


def reduction_algebroid_check(c: Chart, cbar: Chart, I: Sequence[Vec], kill: Sequence[str],
                              fields: Optional[Sequence[VectorField]] = None) -> ReductionAlgebroidReport:
    """Lifts for the family J map to lifts for its reduction by the horizontal I."""
    ops = right_action_ops(c)
    names = c.vprime_names + c.dual_names
    kill_idx = [names.index(n) for n in kill]
    left_ok = True
    for u in I:
        op = c.ops.zero()
        co = c.frame_coordinates(u)
        for x, nm in zip(co, c.i0_names + c.dual_names + c.vprime_names):
            if x:
                op = op + x * ops["frame:" + nm]
        for w in op.terms:
            if not w or w[0] not in kill_idx:
                left_ok = False
    fields = list(fields) if fields is not None else coordinate_fields(c.ring)
    commutes, matches = {}, {}
    for v in fields:
        key = str(v)
        D = build_lift(c, v)
        Db = reduce_operator(c, cbar, D, kill)
        commutes[key] = not commutation_defects(cbar, Db)
        matches[key] = Db == build_lift(cbar, v)
    return ReductionAlgebroidReport(commutes, matches, (c.k, cbar.k), left_ok)
