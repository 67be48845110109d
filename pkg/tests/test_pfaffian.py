import json
import random
from importlib import resources

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from conftest import span
from hcx.cli import random_pf_instance
from hcx.exactcore import BaseRing, parse_scalar
from hcx.heisenberg import HeisenbergAlgebra, Subspace
from hcx.pfaffian import (THETA_FAMILIES, THETA_POINTS, PfInput, RatioError, classical_pfaffian, pf_all,
                          pf_formula, pf_lagrangian, pf_oracle, pf_recursion, pf_rees_check, pf_space,
                          theta_inverse, theta_pf_constant, theta_pf_samples, theta_section)

Q = BaseRing()


def _skew(m, vals):
    A = [[0] * m for _ in range(m)]
    it = iter(vals)
    for i in range(m):
        for j in range(i + 1, m):
            v = next(it)
            A[i][j], A[j][i] = v, (f"-({v})" if isinstance(v, str) else -v)
    return A


@given(st.integers(0, 6).flatmap(
    lambda m: st.tuples(st.just(m), st.lists(st.integers(-4, 4), min_size=m * (m - 1) // 2,
                                             max_size=m * (m - 1) // 2))))
def test_classical_pfaffian_squares_to_determinant(data):
    m, vals = data
    A = _skew(m, vals)
    pf = classical_pfaffian(Q, [[Q.const(a) for a in row] for row in A])
    assert pf * pf == Q.const(int(sympy.Matrix(A).det()) if m else 1)


def test_m2_instance():
    R = BaseRing(["a"], ["l1", "l2"])
    inp = PfInput(R, [[0, "a"], ["-a", 0]], ["l1", "l2"])
    for v in pf_all(inp).values():
        assert v.coefficient == parse_scalar("-a + l1*l2", R)


def test_empty_and_single():
    assert pf_formula(PfInput(Q, [], [])).coefficient == Q.one
    R = BaseRing([], ["l1"])
    for v in pf_all(PfInput(R, [[0]], ["l1"])).values():
        assert v.coefficient == R.var("l1")


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_three_way_agreement(seed, m):
    inp = random_pf_instance(random.Random(seed), m)
    vals = pf_all(inp)
    assert vals["formula"].coefficient == vals["recursion"].coefficient == vals["oracle"].coefficient
    assert vals["formula"].total_parity_even()


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 4]))
def test_zero_lambda_is_classical(seed, m):
    rng = random.Random(seed)
    A = _skew(m, [rng.randint(-3, 3) for _ in range(m * (m - 1) // 2)])
    inp = PfInput(Q, A, [0] * m)
    expected = classical_pfaffian(Q, inp.phi)
    assert pf_formula(inp).ascending() == expected == pf_oracle(inp).ascending()


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_zero_phi_is_lambda_product(m):
    R = BaseRing([], [f"l{i + 1}" for i in range(m)])
    inp = PfInput(R, [[0] * m for _ in range(m)], list(R.odd_names))
    prod = R.one
    for n in R.odd_names:
        prod = prod * R.var(n)
    for v in pf_all(inp).values():
        assert v.coefficient == prod


def test_block_diagonal_multiplicativity():
    R = BaseRing(["a", "b"], ["l1", "l2", "l3", "l4"])
    phi = [[0, "a", 0, 0], ["-a", 0, 0, 0], [0, 0, 0, "b"], [0, 0, "-b", 0]]
    whole = pf_formula(PfInput(R, phi, ["l1", "l2", "l3", "l4"])).coefficient
    w = pf_formula(PfInput(R, [[0, "a"], ["-a", 0]], ["l1", "l2"])).coefficient
    wp = pf_formula(PfInput(R, [[0, "b"], ["-b", 0]], ["l3", "l4"])).coefficient
    assert whole == w * wp


def test_rees_membership():
    R = BaseRing(["a", "s1", "s2", "s3"], ["l1", "l2", "l3"])
    inp = PfInput(R, _skew(3, ["a", 1, "2*a"]), ["s1*l1", "s2*l2 + l3", "s3*l3"])
    rep = pf_rees_check(inp, ["s1", "s2", "s3"])
    assert rep == {"rees_member": True, "reduces_to_classical": True}


@pytest.mark.parametrize("m", [2, 4])
def test_rees_reduction_even_rank(m):
    R = BaseRing(["a", "s"], [f"l{i + 1}" for i in range(m)])
    entries = ["a", 2, "a + 1", 3, 1, "-a"][: m * (m - 1) // 2]
    lam = ["s*l1"] + [f"l{i + 1}" for i in range(1, m)]
    rep = pf_rees_check(PfInput(R, _skew(m, entries), lam), ["s"])
    assert rep == {"rees_member": True, "reduces_to_classical": True}


def test_input_validation():
    R = BaseRing(["a"], ["l1", "l2"])
    with pytest.raises(ValueError):
        PfInput(R, [[0, "a"], ["a", 0]], ["l1", "l2"])
    with pytest.raises(ValueError):
        PfInput(R, [[0, "l1"], ["-l1", 0]], ["l1", "l2"])
    with pytest.raises(ValueError):
        PfInput(R, [[0, "a"], ["-a", 0]], ["a", "l2"])


# ----------------------------------------------------------------- theta sections

def test_theta_of_dual_bases_is_one():
    sp = pf_space(Q, 2)
    L1 = span(sp, ["e1", "e2"])
    L2 = span(sp, ["e1s", "e2s"])
    assert theta_section(L1, L2) == Q.one


def test_theta_scales_with_generator():
    R = BaseRing(["t", "u"])
    sp = pf_space(R, 2)
    L2 = span(sp, ["e1s", "e2s"])
    L1 = span(sp, [sp.vec({"e1": "t"}), sp.vec({"e2": 1})])
    assert theta_inverse(L1, L2) == R.var("t")
    L1u = span(sp, [sp.vec({"e1": "t*u"}), sp.vec({"e2": 1})])
    assert theta_section(L1u, L2) == theta_section(L1, L2) / R.var("u")


def test_theta_needs_odd_lagrangians():
    R = BaseRing()
    sp = pf_space(R, 2)
    with pytest.raises(ValueError):
        theta_section(span(sp, ["e1"]), span(sp, ["e1s"]))


@pytest.mark.parametrize("t", [1, 2, 5, -3])
def test_theta_inverse_matches_determinant_oracle(t):
    vals = [t, 2, 1, t - 1, 3, 1]
    inp = PfInput(Q, _skew(4, vals), [0] * 4)
    sp = pf_space(Q, 4)
    L = span(sp, [f"e{i + 1}" for i in range(4)])
    assert theta_inverse(pf_lagrangian(inp, sp), L) == Q.const(int(sympy.Matrix(_skew(4, vals)).det()))


def test_degenerate_point_vanishes_on_both_sides():
    fam = THETA_FAMILIES[4]["mixed"]
    s = theta_pf_samples(Q, fam, [2])[0]
    assert not s.theta_inverse and not s.vacuum and s.ratio is None


def test_non_constant_ratio_is_detected():
    # rescaling the chart generator by t breaks the normalization, so the ratio moves
    fam = lambda t: [[0, t], [-t, 0]]
    assert theta_pf_constant(Q, fam, [1, 2]) == Q.one
    with pytest.raises(RatioError):
        theta_pf_constant(Q, fam, [0])


def test_theta_constants_match_golden():
    golden = json.loads(resources.files("hcx").joinpath("data/golden.json").read_text())["theta_pf_ratio"]
    for m, fams in THETA_FAMILIES.items():
        entry = golden[f"0|{m}"]
        assert tuple(entry["points"]) == THETA_POINTS
        for name, fam in fams.items():
            assert str(theta_pf_constant(Q, fam, THETA_POINTS)) == entry["families"][name] == entry["constant"]
