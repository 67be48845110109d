"""Shared Lagrangian, isotropic and chart fixtures."""
from conftest import span, std_space
from hcx.algebroid import Chart
from hcx.exactcore import BaseRing
from hcx.fock import FockModule
from hcx.heisenberg import SymplecticSpace, Vec

# (even pairs, odd pairs, L, L', even rank of L cap L')
PLACEMENT = [
    (1, 0, ["e1"], ["f1"], 0),
    (1, 0, ["e1"], ["e1"], 1),
    (2, 0, ["e1", "e2"], ["f1", "f2"], 0),
    (2, 0, ["e1", "e2"], ["e1", "f2"], 1),
    (2, 0, ["e1", "e2"], ["e1", "e2"], 2),
    (2, 1, ["e1", "e2", "a1"], ["f1", "f2", "b1"], 0),
    (2, 1, ["e1", "e2", "a1"], ["e1", "f2", "b1"], 1),
    (2, 1, ["e1", "e2", "a1"], ["e1", "e2", "b1"], 2),
    (0, 1, ["a1"], ["b1"], 0),
    (0, 1, ["a1"], ["a1"], 0),
    (0, 2, ["a1", "a2"], ["b1", "b2"], 0),
    (0, 2, ["a1", "a2"], ["a1", "b2"], 0),
]


def placement_pair(ne, no, L, Lp):
    sp = std_space(ne, no)
    return span(sp, L, "L"), FockModule(span(sp, Lp, "Lp"))


def deformed_placement_pairs():
    """Non-coordinate pairs: graphs and theta-shifted generators with known intersections."""
    out = []
    sp = std_space(2, 0)
    # graph of a nondegenerate symmetric form over span(f): transversal to span(e)
    L = span(sp, [sp.vec({"f1": 1, "e1": 2, "e2": 1}), sp.vec({"f2": 1, "e1": 1, "e2": 3})], "L")
    out.append(("graph-transversal", L, FockModule(span(sp, ["e1", "e2"])), 0, 1))
    # against span(f) the graph meets it in the kernel of the form
    out.append(("graph-nondegenerate", L, FockModule(span(sp, ["f1", "f2"])), 0, 1))
    L = span(sp, [sp.vec({"f1": 1, "e1": 1, "e2": 1}), sp.vec({"f2": 1, "e1": 1, "e2": 1})], "L")
    out.append(("graph-rank-one", L, FockModule(span(sp, ["f1", "f2"])), 1, 1))
    L = span(sp, [sp.vec({"f1": 1}), sp.vec({"f2": 1})], "L")
    out.append(("graph-zero", L, FockModule(span(sp, ["f1", "f2"])), 2, 1))
    T = BaseRing([], ["t1", "t2"])
    sp = std_space(1, 1, T)
    L = span(sp, [sp.vec({"e1": 1, "b1": "t1"}), sp.vec({"a1": 1, "f1": "t1"})], "L")
    Lp = span(sp, [sp.vec({"f1": 1}, "t1*t2"), sp.vec({"b1": 1})], "Lp")
    # H_0 is free of rank one over Lambda(t1, t2): K-dimension 4
    out.append(("theta-transversal", L, FockModule(Lp), 0, 4))
    return out


def reduction_fixtures():
    """(name, I, J, M) with c(I) + J = H."""
    out = []
    sp = std_space(2, 0)
    out.append(("4|0 transversal", span(sp, ["e1"]), span(sp, ["f1", "f2"]), FockModule(span(sp, ["e1", "e2"]))))
    out.append(("4|0 line", span(sp, ["e1"]), span(sp, ["f1", "e2"]), FockModule(span(sp, ["e1", "e2"]))))
    sp = std_space(2, 1)
    out.append(("4|2", span(sp, ["e1"]), span(sp, ["f1", "f2", "b1"]), FockModule(span(sp, ["e1", "e2", "a1"]))))
    sp = std_space(1, 2)
    out.append(("2|4 odd", span(sp, ["a1"]), span(sp, ["f1", "b1", "b2"]), FockModule(span(sp, ["e1", "a1", "a2"]))))
    return out


def transitivity_fixtures():
    """(name, I, J, M) with I inside J."""
    out = []
    sp = std_space(2, 1)
    out.append(("4|2", span(sp, ["e1"]), span(sp, ["e1", "e2", "a1"]), FockModule(span(sp, ["f1", "f2", "b1"]))))
    sp = std_space(2, 0)
    M = FockModule(span(sp, [sp.vec({"f1": 1, "e1": 2, "e2": 1}), sp.vec({"f2": 1, "e1": 1, "e2": 3})]))
    out.append(("4|0 graph", span(sp, [sp.vec({"e1": 1, "e2": 1})]), span(sp, ["e1", "e2"]), M))
    T = BaseRing([], ["t"])
    sp = std_space(0, 2, T)
    I = span(sp, [sp.vec({"a1": 1}, "t")])
    J = span(sp, [sp.vec({"a1": 1}, "t"), sp.vec({"a2": 1})])
    out.append(("0|4 theta", I, J, FockModule(span(sp, ["b1", "b2"]))))
    return out


def spot_family(ne=1):
    """span(e_i + t f_i + 1): crosses span(e) at t = 0, where the central shift kills everything."""
    def build(t):
        sp = std_space(ne, 0)
        gens = [sp.vec({f"e{i + 1}": 1, f"f{i + 1}": t}, 1 if i == 0 else 0) for i in range(ne)]
        return span(sp, gens, "L"), FockModule(span(sp, [f"e{i + 1}" for i in range(ne)]))
    return build


# ----------------------------------------------------------------- charts

def _plane2(ring):
    return SymplecticSpace(ring, ["e1", "e2", "e1s", "e2s"], [0] * 4,
                           [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])


def psi_chart():
    """Line in (4|0) over a 2-parameter base, with nonzero V' component."""
    r = BaseRing(["s", "t"])
    sp = _plane2(r)
    b = sp.basis_vec
    s, t = r.var("s"), r.var("t")
    return Chart(sp, [b("e1")], [b("e1s")], [b("e2"), b("e2s")], [[s]], [[t], [s * s]], [s * t],
                 i0_names=["e1"], dual_names=["e1s"], vprime_names=["e2", "e2s"], name="psi")


def lagrangian_chart():
    """Lagrangian graph over span(e1, e2) in (4|0) with a symmetric non-constant phi."""
    r = BaseRing(["s", "t"])
    sp = _plane2(r)
    b = sp.basis_vec
    s, t = r.var("s"), r.var("t")
    return Chart(sp, [b("e1"), b("e2")], [b("e1s"), b("e2s")], [], [[s, t], [t, s * s]], [],
                 [t, s * t], i0_names=["e1", "e2"], dual_names=["e1s", "e2s"], name="lag")


def odd_chart():
    """Line in (2|2) over a (1|2) base with odd graph data."""
    r = BaseRing(["s"], ["al", "be"])
    sp = SymplecticSpace(r, ["e", "es", "xi", "eta"], [0, 0, 1, 1],
                         [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    b = sp.basis_vec
    al, be, s = r.var("al"), r.var("be"), r.var("s")
    return Chart(sp, [b("e")], [b("es")], [b("xi"), b("eta")], [[s + al * be]], [[al], [s * be]],
                 [al * be * s], i0_names=["e"], dual_names=["es"], vprime_names=["xi", "eta"], name="odd")


def constant_chart():
    """A chart whose graph data does not depend on the base."""
    r = BaseRing(["s"])
    sp = _plane2(r)
    b = sp.basis_vec
    return Chart(sp, [b("e1")], [b("e1s")], [b("e2"), b("e2s")], [[3]], [[1], [2]], [5],
                 i0_names=["e1"], dual_names=["e1s"], vprime_names=["e2", "e2s"], name="const")


def clifford_chart():
    """The line spanned by xi + alpha in the odd plane (0|2)."""
    r = BaseRing([], ["al"])
    sp = SymplecticSpace(r, ["xi", "xis"], [1, 1], [[0, 1], [1, 0]])
    b = sp.basis_vec
    return Chart(sp, [b("xi")], [b("xis")], [], [[0]], [], [r.var("al")],
                 i0_names=["xi"], dual_names=["xis"], name="cliff")


def connection_fixtures():
    """(name, chart, J) triples for canonical connections on non-constant charts."""
    c1, c2, c3 = psi_chart(), lagrangian_chart(), odd_chart()
    b1, b2, b3 = c1.space.basis_vec, c2.space.basis_vec, c3.space.basis_vec
    return [
        ("psi-J-dual", c1, [b1("e1s")]),
        ("psi-J-tilted", c1, [b1("e1s") + b1("e2")]),
        ("lagrangian-J-dual", c2, [b2("e1s"), b2("e2s")]),
        ("lagrangian-J-tilted", c2, [b2("e1s") + b2("e2"), b2("e2s") + b2("e1")]),
        ("odd-J-dual", c3, [b3("es")]),
    ]


def reduction_fixture():
    """J = span(e1s + s e1, e2 + x e2s + lam) in (4|0), reduced by I = span(e1)."""
    r = BaseRing(["s", "x", "lam"])
    sp = _plane2(r)
    b = sp.basis_vec
    s, x, lam = r.var("s"), r.var("x"), r.var("lam")
    g1 = b("e1s") + b("e1").scale(s)
    g2 = b("e2") + b("e2s").scale(x)
    g2 = Vec(lam, g2.coords)
    cJ = Chart.from_generators(sp, [g1, g2], [b("e1s"), b("e2")], [-b("e1"), b("e2s")], [],
                               i0_names=["e1s", "e2"], dual_names=["d1", "e2s"])
    spb = SymplecticSpace(r, ["e2", "e2s"], [0, 0], [[0, -1], [1, 0]])
    cb = Chart(spb, [spb.basis_vec("e2")], [spb.basis_vec("e2s")], [], [[x]], [], [lam],
               i0_names=["e2"], dual_names=["e2s"])
    return cJ, cb, [b("e1")], ["d1"]
