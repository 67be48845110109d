"""Generalized Pfaffian Pf(phi, lambda) by sign formula, minor recursion and a coinvariant solve."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .exactcore import BaseRing, Scalar, SuperMatrix, det, rees_member
from .fock import FockModule
from .heisenberg import HeisenbergAlgebra, Subspace, SymplecticSpace, Vec
from .homology import coinvariants


@dataclass
class PfInput:
    ring: BaseRing
    phi: List[List[Scalar]]
    lam: List[Scalar]

    def __post_init__(self):
        r = self.ring
        self.phi = [[r.scalar(a) for a in row] for row in self.phi]
        self.lam = [r.scalar(a) for a in self.lam]
        m = self.m
        if any(len(row) != m for row in self.phi):
            raise ValueError(f"phi must be {m}x{m}")
        for i in range(m):
            for j in range(m):
                a = self.phi[i][j]
                if a and a.parity() != 0:
                    raise ValueError(f"phi[{i + 1}][{j + 1}] = {a} is not even")
                if a != -self.phi[j][i]:
                    raise ValueError(f"phi is not skew at ({i + 1},{j + 1})")
        for i, l in enumerate(self.lam):
            if l and l.parity() != 1:
                raise ValueError(f"lambda[{i + 1}] = {l} is not odd")

    @property
    def m(self) -> int:
        return len(self.lam)

    def restrict(self, keep: Sequence[int]) -> "PfInput":
        return PfInput(self.ring, [[self.phi[i][j] for j in keep] for i in keep], [self.lam[i] for i in keep])


@dataclass
class PfValue:
    """coefficient * e_m^* ... e_2^* e_1^*."""
    coefficient: Scalar
    m: int

    def __str__(self):
        mono = "*".join(f"e{i}s" for i in range(self.m, 0, -1)) or "1"
        return f"({self.coefficient}) * {mono}"

    def ascending(self) -> Scalar:
        """The coefficient against e_1^* e_2^* ... e_m^*."""
        flip = (self.m * (self.m - 1) // 2) % 2
        return -self.coefficient if flip else self.coefficient

    def total_parity_even(self) -> bool:
        p = self.coefficient.parity()
        return not self.coefficient or p == self.m % 2


def classical_pfaffian(ring: BaseRing, A: Sequence[Sequence[Scalar]]) -> Scalar:
    """Expansion along the first row; 0 for odd size, 1 for the empty matrix."""
    n = len(A)
    if n == 0:
        return ring.one
    if n % 2:
        return ring.zero
    out = ring.zero
    for j in range(1, n):
        a = A[0][j]
        if not a:
            continue
        rest = [k for k in range(1, n) if k != j]
        sub = [[A[p][q] for q in rest] for p in rest]
        term = a * classical_pfaffian(ring, sub)
        out = out + term if j % 2 else out - term
    return out


def _lam_product(ring, lam, I) -> Scalar:
    out = ring.one
    for i in I:
        out = out * lam[i]
    return out


def pf_formula(inp: PfInput) -> PfValue:
    r, m = inp.ring, inp.m
    total = r.zero
    for k in range(m + 1):
        if (m - k) % 2:
            continue
        for I in combinations(range(m), k):
            w = sum(i - j for j, i in enumerate(I))
            keep = [i for i in range(m) if i not in I]
            pf = classical_pfaffian(r, [[inp.phi[a][b] for b in keep] for a in keep])
            term = _lam_product(r, inp.lam, I) * pf
            total = total - term if (w + (m - k) // 2) % 2 else total + term
    return PfValue(total, m)


def pf_recursion(inp: PfInput) -> PfValue:
    r = inp.ring
    memo: Dict[Tuple[int, ...], Scalar] = {}

    def P(S: Tuple[int, ...]) -> Scalar:
        if not S:
            return r.one
        hit = memo.get(S)
        if hit is not None:
            return hit
        s1 = S[0]
        out = inp.lam[s1] * P(S[1:])
        for p in range(1, len(S)):
            sp_ = S[p]
            a = inp.phi[sp_][s1]
            if not a:
                continue
            term = a * P(tuple(x for x in S[1:] if x != sp_))
            # moving e_{s_p}^* past the p - 1 starred vectors before it
            out = out + term if p % 2 else out - term
        memo[S] = out
        return out

    return PfValue(P(tuple(range(inp.m))), inp.m)


def pf_space(ring: BaseRing, m: int) -> SymplecticSpace:
    """L + L^v with odd bases e_i, e_i^* and (e_i, e_j^*) = delta_ij."""
    names = [f"e{i + 1}" for i in range(m)] + [f"e{i + 1}s" for i in range(m)]
    gram = [[0] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        gram[i][m + i] = 1
        gram[m + i][i] = 1
    return SymplecticSpace(ring, names, [1] * (2 * m), gram)


def pf_lagrangian(inp: PfInput, space: SymplecticSpace) -> Subspace:
    """L(phi, lambda) = {(l, -phi(l), -lambda(l))}."""
    m = inp.m
    H = HeisenbergAlgebra(space)
    gens = []
    for j in range(m):
        coords = {f"e{j + 1}": 1}
        for i in range(m):
            if inp.phi[i][j]:
                coords[f"e{i + 1}s"] = -inp.phi[i][j]
        gens.append(space.vec(coords, -inp.lam[j]))
    return Subspace(H, gens, "L(phi,lam)")


def _top_monomial(M: FockModule, m: int):
    """e_m^* ... e_1^* written in the normal-ordered model."""
    word = tuple(M.cidx)
    sign = -1 if (m * (m - 1) // 2) % 2 else 1
    v = M.monomial(word)
    return v if sign > 0 else -v


def pf_oracle(inp: PfInput) -> PfValue:
    """Vacuum class in the L(phi,lambda)-coinvariants of M(L), against e_m^*...e_1^*."""
    m = inp.m
    if m == 0:
        return PfValue(inp.ring.one, 0)
    sp = pf_space(inp.ring, m)
    H = HeisenbergAlgebra(sp)
    L = Subspace(H, [sp.basis_vec(i) for i in range(m)], "L")
    M = FockModule(L, "left", complement=[sp.basis_vec(m + i) for i in range(m)],
                   complement_names=sp.names[m:], validate=0)
    Q = coinvariants(pf_lagrangian(inp, sp), M, m)
    top = _top_monomial(M, m)
    if not Q.certify_free_rank_one(top):
        raise ArithmeticError("coinvariants are not free of rank one on the top monomial")
    return PfValue(Q.coordinate(M.vacuum(), top), m)


def pf_all(inp: PfInput) -> Dict[str, PfValue]:
    return {"formula": pf_formula(inp), "recursion": pf_recursion(inp), "oracle": pf_oracle(inp)}


def pf_rees_check(inp: PfInput, filt_names: Sequence[str]) -> dict:
    """Rees-filtration membership and reduction mod odd functions.

    ``filt_names`` are the even names carrying the algebra filtration (degree
    in those names); phi must not involve them, lambda may do so linearly.
    """
    r = inp.ring
    pv = pf_formula(inp)
    val = pv.coefficient
    pos = [r.even_names.index(n) for n in filt_names]
    # split each coefficient by degree in the filtration variables
    element: Dict[Tuple[Tuple[int, ...], int], Scalar] = {}
    for S, c in val.terms.items():
        if r.even_names:
            if any(mon[p] for mon in c.denom.monoms() for p in pos):
                raise ValueError("filtration variables in a denominator")
            degs = {sum(mon[p] for p in pos) for mon in c.numer.monoms()}
        else:
            degs = {0}
        for d in degs:
            element[(S, d)] = Scalar(r, {S: r.K.one})
    member = rees_member(element, lambda key: key[1], inp.m)
    classical = classical_pfaffian(r, inp.phi)
    body_ok = pv.ascending().body() == classical.body()
    return {"rees_member": member, "reduces_to_classical": body_ok}


# ----------------------------------------------------------------- theta section

def pairing_matrix(L1: Subspace, L2: Subspace) -> List[List[Scalar]]:
    sp = L1.space
    return [[sp.pairing(a.pi(), b.pi()) for b in L2.generators] for a in L1.generators]


def theta_section(L1: Subspace, L2: Subspace) -> Scalar:
    """Berezinian of the pairing L1 -> L2^v for purely odd Lagrangians: det^{-1}."""
    sp = L1.space
    if sp.sdim()[0] != 0:
        raise ValueError("theta section needs a purely odd space")
    if not (L1.is_lagrangian() and L2.is_lagrangian()):
        raise ValueError("theta section needs Lagrangian subspaces")
    P = pairing_matrix(L1, L2)
    n = len(P)
    d = det(SuperMatrix(sp.ring, P, [0] * n, [0] * n))
    if not d.body():
        raise ZeroDivisionError("pairing is degenerate")
    return sp.ring.one / d


def theta_inverse(L1: Subspace, L2: Subspace) -> Scalar:
    P = pairing_matrix(L1, L2)
    n = len(P)
    return det(SuperMatrix(L1.space.ring, P, [0] * n, [0] * n))


@dataclass
class ThetaPfSample:
    point: object
    theta_inverse: Scalar
    vacuum: Scalar
    ratio: Optional[Scalar]


def theta_pf_samples(ring: BaseRing, phi_at, points: Sequence) -> List[ThetaPfSample]:
    """For L(phi(t), 0) against M(L): theta^{-1} and the vacuum coordinate at each point."""
    out = []
    for t in points:
        phi = phi_at(t)
        m = len(phi)
        inp = PfInput(ring, phi, [0] * m)
        sp = pf_space(ring, m)
        H = HeisenbergAlgebra(sp)
        L = Subspace(H, [sp.basis_vec(i) for i in range(m)], "L")
        Lt = pf_lagrangian(inp, sp)
        ti = theta_inverse(Lt, L)
        v = pf_oracle(inp).coefficient
        ratio = ti / (v * v) if (v * v).body() else None
        out.append(ThetaPfSample(t, ti, v, ratio))
    return out


class RatioError(ArithmeticError):
    pass


def theta_pf_constant(ring: BaseRing, phi_at, points: Sequence) -> Scalar:
    """The common value of theta^{-1} / v^2 over the nondegenerate sample points.

    Degenerate points must have both sides vanish; any other disagreement raises.
    """
    c = None
    for s in theta_pf_samples(ring, phi_at, points):
        if s.ratio is None:
            if s.theta_inverse:
                raise RatioError(f"v vanishes at {s.point} but theta^-1 = {s.theta_inverse}")
            continue
        if c is None:
            c = s.ratio
        elif s.ratio != c:
            raise RatioError(f"ratio {s.ratio} at {s.point} differs from {c}")
    if c is None:
        raise RatioError("no nondegenerate sample point")
    return c


def _skew(m: int, entries) -> List[List[object]]:
    A = [[0] * m for _ in range(m)]
    for (i, j), v in entries.items():
        A[i][j], A[j][i] = v, -v
    return A


# fixed 1-parameter families of skew forms on L, keyed by the rank m of L
THETA_FAMILIES = {
    2: {
        "linear": lambda t: _skew(2, {(0, 1): t}),
        "quadratic": lambda t: _skew(2, {(0, 1): t * t + 1}),
    },
    4: {
        "mixed": lambda t: _skew(4, {(0, 1): t, (2, 3): 1, (0, 2): 2, (1, 3): t - 1}),
        "dense": lambda t: _skew(4, {(0, 1): 1, (0, 2): t, (0, 3): t * t, (1, 2): 3, (1, 3): 1, (2, 3): t + 2}),
    },
}
THETA_POINTS = (1, 2, 3, -2)
