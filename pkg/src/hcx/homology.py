"""Koszul complexes of isotropic subspaces acting on module models, truncated exact homology."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exactcore import Reducer, Scalar, sparse_solve
from .fock import ModuleModel, ModuleVector, SubModuleModel, invariants
from .heisenberg import Subspace, Vec, Word, _acc, centralizer, intersection, span_sum

Lam = Tuple[int, ...]
ChainKey = Tuple[Lam, Word]
Chain = Dict[ChainKey, Scalar]


class WindowError(ValueError):
    pass


def lambda_monomials(parities: Sequence[int], k: int) -> List[Lam]:
    """Monomials of degree k in the super-exterior algebra: even generators
    anticommute (no repeats), odd generators commute (repeats allowed)."""
    out: List[Lam] = []

    def rec(start, left, acc):
        if left == 0:
            out.append(tuple(acc))
            return
        for g in range(start, len(parities)):
            acc.append(g)
            rec(g if parities[g] else g + 1, left - 1, acc)
            acc.pop()

    if k >= 0:
        rec(0, k, [])
    return out


def _lambda_parity(parities, lam: Lam) -> int:
    return sum(parities[g] for g in lam) & 1


def lambda_mul(parities, a: Lam, b: Lam) -> Tuple[int, Lam]:
    """Product of two sorted monomials: (sign, sorted monomial) or (0, ())."""
    seq = list(a) + list(b)
    sign = 1
    # insertion sort, tracking the super-exterior swap sign
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            x, y = seq[j - 1], seq[j]
            if not (parities[x] & parities[y]):
                sign = -sign
            seq[j - 1], seq[j] = y, x
            j -= 1
    for i in range(1, len(seq)):
        if seq[i] == seq[i - 1] and not parities[seq[i]]:
            return 0, ()
    return sign, tuple(seq)


class KoszulComplex:
    """Lambda^k(I) (x) M with the Koszul differential; internal degree = M-level."""

    def __init__(self, I: Subspace, M: ModuleModel, window: Tuple[int, int] = (0, 2), N: int = 4):
        bad = I.offending_pair()
        if bad is not None:
            raise ValueError(f"Koszul complex needs an isotropic subspace; pairing {bad[:2]} = {bad[2]}")
        if M.side != "left":
            raise ValueError("Koszul complex needs a left module")
        self.I = I
        self.M = M
        self.ring = M.ring
        self.gens = list(I.generators)
        self.par = list(I.parities)
        self.window = (max(0, window[0]), window[1])
        self.N = N
        self._dcache: Dict[ChainKey, Chain] = {}
        self._subs = self.ring.theta_subsets()
        self._sidx = {S: i for i, S in enumerate(self._subs)}

    def __repr__(self):
        return f"KoszulComplex({self.I!r}, window={self.window}, N={self.N})"

    def chain_basis(self, k: int, N: int) -> List[ChainKey]:
        if k < 0:
            return []
        words = self.M.basis(N)
        return [(lam, w) for lam in lambda_monomials(self.par, k) for w in words]

    def level(self, key: ChainKey) -> int:
        return self.M.degree(key[1])

    def d_basis(self, lam: Lam, w: Word) -> Chain:
        key = (lam, w)
        hit = self._dcache.get(key)
        if hit is not None:
            return hit
        out: Chain = {}
        n = len(lam)
        m = self.M.monomial(w)
        for i in range(n):
            g = lam[i]
            tail = sum(self.par[h] for h in lam[i + 1:]) & 1
            sign = -1 if ((i + 1) + self.par[g] * tail) & 1 else 1
            rest = lam[:i] + lam[i + 1:]
            prest = _lambda_parity(self.par, rest)
            y = self.M.act_vec(self.gens[g], m)
            for u, c in y.terms.items():
                if prest:
                    c = c.twist()
                _acc(out, (rest, u), c if sign > 0 else -c)
        self._dcache[key] = out
        return out

    def d(self, chain: Chain) -> Chain:
        out: Chain = {}
        for (lam, w), c in chain.items():
            for key, e in self.d_basis(lam, w).items():
                _acc(out, key, c * e)
        return out

    # flattening over K
    def flat(self, chain: Chain, idx) -> Dict[int, object]:
        out = {}
        for key, c in chain.items():
            for S, a in c.terms.items():
                j = idx.get((key, S))
                if j is None:
                    j = idx[(key, S)] = len(idx)
                out[j] = a
        return out

    def theta_basis(self, k: int, N: int):
        """Flattened K-basis of C_{k,<=N}: pairs (theta^T, chain key)."""
        return [(T, key) for key in self.chain_basis(k, N) for T in self._subs]

    def theta_chain(self, T, key) -> Chain:
        return {key: Scalar(self.ring, {T: self.ring.K.one})}

    def d_theta(self, T, key) -> Chain:
        if not T:
            return self.d_basis(*key)
        th = Scalar(self.ring, {T: self.ring.K.one})
        return {k2: th * c for k2, c in self.d_basis(*key).items() if th * c}

    def check_dsquared(self, k: int, N: Optional[int] = None) -> bool:
        """d_{k-1} d_k = 0 on every basis chain of C_{k,<=N}."""
        N = self.N if N is None else N
        for key in self.chain_basis(k, N):
            if self.d(self.d_basis(*key)):
                return False
        return True

    def chain_rank(self, k: int, N: int) -> int:
        """O-rank of C_{k,<=N} (monomial count)."""
        return len(self.chain_basis(k, N))


def build_koszul(I: Subspace, M: ModuleModel, k_window: Tuple[int, int] = (0, 2), N: int = 4,
                 check: bool = True) -> KoszulComplex:
    C = KoszulComplex(I, M, k_window, N)
    if check:
        lo, hi = C.window
        for k in range(max(lo, 2), hi + 1):
            if not C.check_dsquared(k, min(N, 3)):
                raise AssertionError(f"d^2 != 0 in degree {-k}")
    return C


@dataclass
class HomologyEntry:
    degree: int
    rank: int
    cutoff: int
    stabilized: bool
    representatives: List[Chain] = field(default_factory=list)
    history: List[Tuple[int, int]] = field(default_factory=list)
    mode: str = "generic"


def _cycles_and_boundaries(C: KoszulComplex, k: int, N: int):
    """Cycle vectors of C_{k,<=N} and the reducer of boundaries inside C_{k,<=N}."""
    idx: Dict = {}
    # boundaries: D on C_{k+1,<=N+1}, keep combinations whose image has no level > N
    tb = C.theta_basis(k + 1, N + 1)
    imgs = [C.d_theta(T, key) for T, key in tb]
    high = Reducer()
    low_combos = []
    for j, img in enumerate(imgs):
        hv = C.flat({kk: c for kk, c in img.items() if C.level(kk) > N}, idx)
        ok, combo = high.add(hv, tag=j)
        if not ok:
            low_combos.append(combo)
    bred = Reducer()
    for combo in low_combos:
        ch: Chain = {}
        for j, a in combo.items():
            for kk, c in imgs[j].items():
                _acc(ch, kk, Scalar(C.ring, {(): a}) * c)
        bred.add(C.flat(ch, idx))
    # cycles
    src = C.theta_basis(k, N)
    cycles: List[Chain] = []
    if k == 0:
        cycles = [C.theta_chain(T, key) for T, key in src]
    else:
        kr = Reducer()
        outs = [C.d_theta(T, key) for T, key in src]
        idx2: Dict = {}
        for j, img in enumerate(outs):
            ok, combo = kr.add(C.flat(img, idx2), tag=j)
            if not ok:
                ch: Chain = {}
                for jj, a in combo.items():
                    T, key = src[jj]
                    _acc(ch, key, Scalar(C.ring, {T: a}))
                cycles.append(ch)
    return cycles, bred, idx


def _rank_at(C: KoszulComplex, k: int, N: int):
    cycles, bred, idx = _cycles_and_boundaries(C, k, N)
    # low-level cycles first so that representatives are as simple as possible
    cycles.sort(key=lambda ch: max((C.level(kk) for kk in ch), default=0))
    reps = []
    for ch in cycles:
        ok, _ = bred.add(C.flat(ch, idx))
        if ok:
            reps.append(ch)
    return len(reps), reps


def homology(C: KoszulComplex, k: int, N: Optional[int] = None, ceiling: Optional[int] = None,
             mode: str = "generic") -> HomologyEntry:
    """Exact truncated rank (over K, flattened) of H_{-k}; escalates N until stable."""
    lo, hi = C.window
    if k < lo or k + 1 > hi:
        raise WindowError(f"window {C.window} does not contain degrees {-(k + 1)}..{-k}")
    N = C.N if N is None else N
    ceiling = N + 4 if ceiling is None else ceiling
    history = []
    r0, reps0 = _rank_at(C, k, N)
    history.append((N, r0))
    while True:
        r1, reps1 = _rank_at(C, k, N + 1)
        history.append((N + 1, r1))
        if r1 == r0:
            return HomologyEntry(-k, r0, N, True, reps0, history, mode)
        if N + 1 >= ceiling:
            return HomologyEntry(-k, r1, N + 1, False, reps1, history, mode)
        N, r0, reps0 = N + 1, r1, reps1


# ----------------------------------------------------------------- coinvariants

class Coinvariants:
    """H_0 = M / span(I.M), degreewise exact below the cutoff, with a normal-form projection."""

    def __init__(self, I: Subspace, M: ModuleModel, N: int):
        self.I, self.M, self.N = I, M, N
        self.ring = M.ring
        subs = self.ring.theta_subsets()
        words = M.basis(N + 2)
        words.sort(key=lambda w: (M.degree(w), w))
        self.idx = {}
        for w in words:
            for S in subs:
                self.idx[(w, S)] = len(self.idx)
        self.keys = {v: k for k, v in self.idx.items()}
        # relations u.m with m of level <= N+1, restricted to level <= N
        high = Reducer()
        rel_imgs = []
        low = []
        for w in M.basis(N + 1):
            for T in subs:
                x = Scalar(self.ring, {T: self.ring.K.one}) * M.monomial(w)
                for u in I.generators:
                    y = M.act_vec(u, x)
                    j = len(rel_imgs)
                    rel_imgs.append(y)
                    hv = {self.idx[(ww, S)]: a for ww, c in y.terms.items() if M.degree(ww) > N
                          for S, a in c.terms.items()}
                    ok, combo = high.add(hv, tag=j)
                    if not ok:
                        low.append(combo)
        self.red = Reducer()
        for combo in low:
            v = {}
            for j, a in combo.items():
                for key, c in M.flatten(rel_imgs[j], self.idx).items():
                    nv = v.get(key, 0) + a * c
                    if nv:
                        v[key] = nv
                    else:
                        v.pop(key, None)
            self.red.add(v)
        n_low = sum(1 for (w, S) in self.idx if M.degree(w) <= N)
        self.survivors = [j for j in range(n_low) if j not in self.red.rows]

    @property
    def dim(self) -> int:
        """K-dimension of H_0 below the cutoff."""
        return len(self.survivors)

    def normal_form(self, x: ModuleVector) -> Dict[int, object]:
        if x.level() > self.N:
            raise ValueError("vector above the cutoff")
        return self.red.normal_form(self.M.flatten(x, self.idx))

    def project(self, x: ModuleVector) -> ModuleVector:
        nf = self.normal_form(x)
        out: Dict[Word, Scalar] = {}
        for j, a in nf.items():
            w, S = self.keys[j]
            _acc(out, w, Scalar(self.ring, {S: a}))
        return self.M.vector(out)

    def is_zero(self, x: ModuleVector) -> bool:
        return not self.normal_form(x)

    def vacuum_class(self) -> ModuleVector:
        return self.project(self.M.vacuum())

    def class_basis(self) -> List[ModuleVector]:
        out = []
        for j in self.survivors:
            w, S = self.keys[j]
            out.append(self.M.vector({w: Scalar(self.ring, {S: self.ring.K.one})}))
        return out

    def certify_free_rank_one(self, g: ModuleVector) -> bool:
        """True if the Grassmann multiples of g span H_0 (so H_0 is free of rank 1 on g)."""
        n = len(self.ring.theta_subsets())
        if self.dim != n:
            return False
        r = Reducer()
        for t in self.M.theta_multiples(g):
            r.add(self.normal_form(t))
        return len(r) == n

    def coordinate(self, x: ModuleVector, g: ModuleVector) -> Scalar:
        """The scalar c with [x] = c [g] when H_0 is free of rank one on g."""
        cols = [self.normal_form(t) for t in self.M.theta_multiples(g)]
        sol = sparse_solve(cols, self.normal_form(x))
        if sol is None:
            raise ValueError("class is not a multiple of the generator")
        subs = self.ring.theta_subsets()
        return Scalar(self.ring, {subs[j]: a for j, a in sol.items()})


def coinvariants(I: Subspace, M: ModuleModel, N: int = 4) -> Coinvariants:
    return Coinvariants(I, M, N)


def two_stage_h0_dim(I: Subspace, J: Subspace, M: ModuleModel, N: int = 4) -> int:
    """dim of (M/I M)/(J (M/I M)) below N, computed in two quotient steps."""
    Q1 = Coinvariants(I, M, N + 2)
    ring = M.ring
    subs = ring.theta_subsets()
    # Q1 restricted to levels <= N+1 acts as source; J-images land in Q1 up to N+2
    lvl = {j: M.degree(Q1.keys[j][0]) for j in Q1.survivors}
    high = Reducer()
    imgs = []
    low = []
    for j in Q1.survivors:
        if lvl[j] > N + 1:
            continue
        w, S = Q1.keys[j]
        x = M.vector({w: Scalar(ring, {S: ring.K.one})})
        for u in J.generators:
            nf = Q1.normal_form(M.act_vec(u, x))
            t = len(imgs)
            imgs.append(nf)
            ok, combo = high.add({a: c for a, c in nf.items() if lvl.get(a, 0) > N}, tag=t)
            if not ok:
                low.append(combo)
    red = Reducer()
    for combo in low:
        v = {}
        for t, a in combo.items():
            for key, c in imgs[t].items():
                nv = v.get(key, 0) + a * c
                if nv:
                    v[key] = nv
                else:
                    v.pop(key, None)
        red.add(v)
    n_low = sum(1 for j in Q1.survivors if lvl[j] <= N)
    return n_low - len(red)


# ----------------------------------------------------------------- reduction

def _express_in(I: Subspace, v: Vec) -> List[Scalar]:
    """Coefficients c with v = sum c_i x_i over the generators of I."""
    sp = I.space
    ring = sp.ring
    cols, tags = [], []
    for i, g in enumerate(I.generators):
        for T in ring.theta_subsets():
            th = Scalar(ring, {T: ring.K.one})
            cols.append(sp.flat(g.scale(th), True))
            tags.append((i, T))
    sol = sparse_solve(cols, sp.flat(v, True))
    if sol is None:
        raise ValueError(f"{sp.vec_str(v)} is not in {I!r}")
    out = [ring.zero] * len(I.generators)
    for j, a in sol.items():
        i, T = tags[j]
        out[i] = out[i] + Scalar(ring, {T: a})
    return out


@dataclass
class ReductionReport:
    degrees: List[int]
    source_ranks: List[int]
    target_ranks: List[int]
    induced_ranks: List[int]
    stabilized: List[bool]
    chain_map_ok: bool

    @property
    def quasi_isomorphism(self) -> bool:
        return self.chain_map_ok and all(
            s == t == r for s, t, r, ok in zip(self.source_ranks, self.target_ranks, self.induced_ranks,
                                            self.stabilized) if ok)


class ReductionChainMap:
    """Lambda(J cap c(I)) (x) M^I -> Lambda(J) (x) M, induced by the inclusions."""

    def __init__(self, I: Subspace, J: Subspace, M: ModuleModel, N: int = 3, window: int = 1):
        c = centralizer(I)
        if not _spans_everything(span_sum(c, J)):
            raise ValueError("span condition c(I) + J = H fails")
        self.I, self.J, self.M, self.N = I, J, M, N
        self.window = window
        self.Jbar = intersection(J, c)
        self.coef = [_express_in(J, v) for v in self.Jbar.generators]
        inv, _ = invariants(M, I, N + window + 2)
        levels = [v.level() for v in inv]
        self.MI = SubModuleModel(M, inv, levels)
        self.source = KoszulComplex(self.Jbar, self.MI, (0, window + 1), N)
        self.target = KoszulComplex(J, M, (0, window + 1), N)

    def map_chain(self, chain: Chain) -> Chain:
        """Apply the chain map to a source chain."""
        M, tgt_par = self.M, self.target.par
        out: Chain = {}
        for (lam, w), c in chain.items():
            img: Dict[Lam, Scalar] = {(): self.M.ring.one}
            for g in lam:
                nxt: Dict[Lam, Scalar] = {}
                for mono, a in img.items():
                    pm = _lambda_parity(tgt_par, mono)
                    for i, b in enumerate(self.coef[g]):
                        if not b:
                            continue
                        s, prod = lambda_mul(tgt_par, mono, (i,))
                        if not s:
                            continue
                        bb = b.twist() if pm else b
                        _acc(nxt, prod, a * bb if s > 0 else -(a * bb))
                img = nxt
            mv = self.MI.to_parent(self.MI.monomial(w))
            plam = _lambda_parity(self.source.par, lam)
            for mono, a in img.items():
                for u, e in mv.terms.items():
                    ee = e.twist() if plam else e
                    _acc(out, (mono, u), c * a * ee)
        return out

    def check_chain_map(self, k: int) -> bool:
        for key in self.source.chain_basis(k, min(self.N, 2)):
            lhs = self.map_chain(self.source.d_basis(*key))
            rhs = self.target.d(self.map_chain({key: self.M.ring.one}))
            if lhs != rhs:
                return False
        return True

    def induced_rank(self, k: int, N: int) -> int:
        reps = _rank_at(self.source, k, N)[1]
        _, bred, idx = _cycles_and_boundaries(self.target, k, N)
        base = len(bred)
        for ch in reps:
            bred.add(self.target.flat(self.map_chain(ch), idx))
        return len(bred) - base

    def report(self) -> ReductionReport:
        degs, sr, tr, ir, st = [], [], [], [], []
        ok = all(self.check_chain_map(k) for k in range(1, self.window + 2))
        for k in range(0, self.window + 1):
            hs = homology(self.source, k)
            ht = homology(self.target, k)
            degs.append(-k)
            sr.append(hs.rank)
            tr.append(ht.rank)
            ir.append(self.induced_rank(k, self.N))
            st.append(hs.stabilized and ht.stabilized)
        return ReductionReport(degs, sr, tr, ir, st, ok)


def _spans_everything(S: Subspace) -> bool:
    sp = S.space
    for i in range(sp.dim):
        if not S.contains(sp.basis_vec(i)):
            return False
    return True


def reduction_chain_map(I: Subspace, J: Subspace, M: ModuleModel, N: int = 3, window: int = 1) -> ReductionChainMap:
    return ReductionChainMap(I, J, M, N, window)


# ----------------------------------------------------------------- vanishing spot checks

@dataclass
class SpotCheck:
    point: object
    entries: List[HomologyEntry]

    @property
    def concentrated(self) -> bool:
        return all(e.rank == 0 and e.stabilized for e in self.entries if e.degree < 0)


def vanishing_spotcheck(build: Callable[[object], Tuple[Subspace, ModuleModel]], points: Sequence,
                        window: int = 2, N: int = 4) -> List[SpotCheck]:
    """For each sample point build (I, M) and compute H_0 .. H_{-window}."""
    out = []
    for p in points:
        I, M = build(p)
        C = build_koszul(I, M, (0, window + 1), N)
        entries = [homology(C, k, mode="point") for k in range(0, window + 1)]
        out.append(SpotCheck(p, entries))
    return out
