import pytest
import sympy
from hypothesis import given, strategies as st

from conftest import span, std_space
from hcx.exactcore import BaseRing
from hcx.heisenberg import (HeisenbergAlgebra, Subspace, SymplecticSpace, WeylAlgebra, centralizer,
                            intersection, perp, pushout_central_character, reduced_heisenberg,
                            span_sum, supercommutator)

Q = BaseRing()

# ----------------------------------------------------------------- oracle representations

z = sympy.Symbol("z")
PLANE = SymplecticSpace(Q, ["e", "es"], [0, 0], [[0, -1], [1, 0]])
W_PLANE = WeylAlgebra(PLANE)


def _plane_op(word):
    """e -> multiplication by z, es -> d/dz; then es e - e es = 1 = (es, e)."""
    def act(p):
        for g in reversed(word):
            p = sympy.expand(z * p) if g == 0 else sympy.diff(p, z)
        return p
    return act


def _apply_plane(x, p):
    out = 0
    for w, c in x.terms.items():
        out += sympy.Rational(str(c.body())) * _plane_op(w)(p)
    return sympy.expand(out)


ODD = SymplecticSpace(Q, ["a", "b"], [1, 1], [[0, 1], [1, 0]])
W_ODD = WeylAlgebra(ODD)
# a, b on span(1, xi): a = mult by xi, b = contraction; ab + ba = 1 = (a, b)
_ODD_MATS = {0: sympy.Matrix([[0, 0], [1, 0]]), 1: sympy.Matrix([[0, 1], [0, 0]])}


def _odd_matrix(x):
    out = sympy.zeros(2, 2)
    for w, c in x.terms.items():
        m = sympy.eye(2)
        for g in w:
            m = m * _ODD_MATS[g]
        out += sympy.Rational(str(c.body())) * m
    return out


words = st.lists(st.integers(0, 1), max_size=4)


def _elem(W, ws, cs):
    x = W.zero()
    for w, c in zip(ws, cs):
        y = W.scalar(c)
        for g in w:
            y = y * W.gen(g)
        x = x + y
    return x


@given(st.lists(words, min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=3, max_size=3),
       st.lists(words, min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_plane_product_matches_differential_operators(w1, c1, w2, c2):
    x, y = _elem(W_PLANE, w1, c1), _elem(W_PLANE, w2, c2)
    for p in (sympy.Integer(1), z ** 3 + 2 * z, z ** 5):
        assert _apply_plane(x * y, p) == _apply_plane(x, _apply_plane(y, p))


@given(st.lists(words, min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=3, max_size=3),
       st.lists(words, min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_clifford_product_matches_matrices(w1, c1, w2, c2):
    x, y = _elem(W_ODD, w1, c1), _elem(W_ODD, w2, c2)
    assert _odd_matrix(x * y) == _odd_matrix(x) * _odd_matrix(y)


def test_normal_form_is_pbw():
    e, es = W_PLANE.gen("e"), W_PLANE.gen("es")
    assert str(es * e) == "1 + e*es"
    a, b = W_ODD.gen("a"), W_ODD.gen("b")
    assert a * a == W_ODD.zero()
    assert str(b * a) == "1 - a*b"


# ----------------------------------------------------------------- super Weyl relations with parameters

R = BaseRing(["x"], ["t1", "t2"])
SP = std_space(1, 1, R)
W = WeylAlgebra(SP)


@st.composite
def weyl_elements(draw):
    out = W.zero()
    for _ in range(draw(st.integers(1, 3))):
        coef = draw(st.sampled_from(["1", "x", "-2", "t1", "t1*t2", "x*t2 + 1"]))
        w = W.scalar(coef)
        for g in draw(st.lists(st.integers(0, 3), max_size=3)):
            w = w * W.gen(g)
        out = out + w
    return out


@given(weyl_elements(), weyl_elements(), weyl_elements())
def test_weyl_associativity(a, b, c):
    assert (a * b) * c == a * (b * c)


def test_defining_relations():
    n = SP.dim
    for i in range(n):
        for j in range(n):
            gi, gj = W.gen(i), W.gen(j)
            expected = SP.pairing(SP.basis_vec(i), SP.basis_vec(j))
            assert supercommutator(gi, gj) == W.scalar(expected)


def test_scalars_pass_generators_with_sign():
    a1 = W.gen("a1")
    t1 = R.var("t1")
    assert a1 * W.scalar(t1) == (-t1) * a1


def test_rebased_algebra_agrees_with_standard():
    g1 = SP.vec({"e1": 1, "f1": "x"}, "t1*t2")
    g2 = SP.vec({"a1": 1, "e1": "t1"})
    g3 = SP.vec({"f1": 1})
    g4 = SP.vec({"b1": 1, "f1": "t2"})
    W2 = WeylAlgebra(SP, [g1, g2, g3, g4], ["g1", "g2", "g3", "g4"])
    x = W2.gen("g3") * W2.gen("g1") * W2.gen("g4")
    std = W.from_vec(g3) * W.from_vec(g1) * W.from_vec(g4)
    assert W2.convert(std) == x


# ----------------------------------------------------------------- subspaces

def test_offending_pair_names_bracket():
    sp = std_space(2, 0)
    I = span(sp, ["e1", "f1"])
    i, j, v = I.offending_pair()
    assert (i, j) == (0, 1) and v == Q.const(-1)


def test_subspace_meeting_center_rejected():
    sp = std_space(1, 0)
    H = HeisenbergAlgebra(sp)
    with pytest.raises(ValueError):
        Subspace(H, [H.one])


def test_perp_and_intersection():
    sp = std_space(2, 1, BaseRing([], ["t"]))
    A = span(sp, ["e1", sp.vec({"e2": 1, "a1": "t"})])
    P = perp(A)
    for g in P.generators:
        for h in A.generators:
            assert not sp.pairing(g, h)
    # (V, A^perp) rank: dim V - rank A = 6 - 2 over theta
    assert len(P.k_span()) == (6 - 2) * 2
    B = span(sp, ["e1", "f2"])
    X = intersection(A, B)
    assert len(X.k_span()) == 2 and X.contains(sp.basis_vec("e1"))
    S = span_sum(A, B)
    assert len(S.k_span()) == 3 * 2


def test_centralizer_contains_center():
    sp = std_space(2, 0)
    I = span(sp, ["e1"])
    c = centralizer(I)
    assert c.contains(sp.center_vec()) and c.contains(sp.basis_vec("e2")) and not c.contains(sp.basis_vec("f1"))


@pytest.mark.parametrize("ne,no,gens,expected", [
    (2, 0, ["e1"], (1, 0)),
    (2, 1, ["e1", "a1"], (1, 0)),
    (1, 2, ["a1"], (1, 1)),
    (2, 2, ["e1", "e2", "a1"], (0, 1)),
])
def test_reduced_heisenberg_dimension(ne, no, gens, expected):
    sp = std_space(ne, no)
    I = span(sp, gens)
    Hb = reduced_heisenberg(I)
    p, q = Hb.algebra.space.sdim()
    assert (p // 2, q // 2) == expected
    # the projection preserves brackets of centralizer elements
    c = centralizer(I)
    for u in c.generators:
        for v in c.generators:
            assert sp.pairing(u, v) == Hb.algebra.space.pairing(Hb.project(u), Hb.project(v))


def test_reduction_keeps_central_shift():
    sp = std_space(2, 0)
    I = span(sp, [sp.vec({"e1": 1}, 5)])
    Hb = reduced_heisenberg(I)
    v = Hb.project(sp.vec({"e1": 1, "e2": 2}, 1))
    # e1 = -5 in H-bar
    assert v.central == Q.const(-4)


def test_pushout_central_character():
    src = SymplecticSpace(Q, ["k", "e", "es"], [0, 0, 0], [[0, 0, 0], [0, 0, -1], [0, 1, 0]], degenerate=True)
    P = pushout_central_character(src, [src.basis_vec("k")], [3])
    v = P.project(src.vec({"k": 2, "e": 1}))
    assert v.central == Q.const(6) and P.algebra.space.names == ["e", "es"]
    I = Subspace(HeisenbergAlgebra(src), [src.vec({"e": 1, "k": 1})], check=False)
    assert P.image(I).generators[0].central == Q.const(3)


def _theta_cases():
    T = BaseRing([], ["t1", "t2"])
    sp = std_space(2, 1, T)
    return sp, [
        ([sp.vec({"e1": 1, "a1": "t1"})], (1, 1)),
        ([sp.vec({"a1": 1, "e2": "t1"})], (2, 0)),
        ([sp.vec({"e1": 1, "b1": "t1"}), sp.vec({"e2": 1, "a1": "t1"})], (0, 1)),
    ]


@pytest.mark.parametrize("case", range(3))
def test_reduced_heisenberg_with_theta_deformed_subspace(case):
    sp, cases = _theta_cases()
    gens, expected = cases[case]
    I = span(sp, gens)
    assert I.is_isotropic()
    Hb = reduced_heisenberg(I)
    p, q = Hb.algebra.space.sdim()
    assert (p // 2, q // 2) == expected
    c = centralizer(I)
    for u in c.generators:
        for v in c.generators:
            assert sp.pairing(u, v) == Hb.algebra.space.pairing(Hb.project(u), Hb.project(v))
    for g in I.generators:
        assert Hb.project(g).is_zero()
