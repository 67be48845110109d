"""Where the derived coinvariants of a Lagrangian pair live.

For Lagrangians L, L' the Koszul complex of L acting on the Fock module M(L')
has homology of rank one, sitting in degree minus the even rank of the
intersection.  The ranks are computed on truncations of M(L') and accepted
once two successive cutoffs agree.
"""
from hcx.exactcore import BaseRing
from hcx.fock import FockModule
from hcx.heisenberg import HeisenbergAlgebra, Subspace, SymplecticSpace
from hcx.homology import build_koszul, homology


def space(ne, no):
    names = ([f"e{i + 1}" for i in range(ne)] + [f"f{i + 1}" for i in range(ne)]
             + [f"a{i + 1}" for i in range(no)] + [f"b{i + 1}" for i in range(no)])
    n = len(names)
    G = [[0] * n for _ in range(n)]
    for i in range(ne):
        G[i][ne + i], G[ne + i][i] = -1, 1
    for i in range(no):
        G[2 * ne + i][2 * ne + no + i] = G[2 * ne + no + i][2 * ne + i] = 1
    return SymplecticSpace(BaseRing(), names, [0] * (2 * ne) + [1] * (2 * no), G)


def span(sp, names):
    return Subspace(HeisenbergAlgebra(sp), [sp.basis_vec(n) for n in names])


cases = [
    (2, 1, ["e1", "e2", "a1"], ["f1", "f2", "b1"]),
    (2, 1, ["e1", "e2", "a1"], ["e1", "f2", "b1"]),
    (2, 1, ["e1", "e2", "a1"], ["e1", "e2", "b1"]),
    (0, 2, ["a1", "a2"], ["a1", "b2"]),
]
for ne, no, L, Lp in cases:
    sp = space(ne, no)
    I, M = span(sp, L), FockModule(span(sp, Lp))
    C = build_koszul(I, M, (0, 4), 4)
    ranks = []
    for k in range(4):
        h = homology(C, k)
        ranks.append(f"H_{-k}={h.rank}{'' if h.stabilized else '?'}")
    print(f"({2 * ne}|{2 * no})  L={'+'.join(L):10} L'={'+'.join(Lp):10} " + "  ".join(ranks))
print("\nan odd common line leaves the homology in degree 0; each even one shifts it down by one")
