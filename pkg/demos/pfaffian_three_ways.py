"""The generalized Pfaffian computed three ways.

A skew form phi on an odd space L and an odd linear form lambda define a
Lagrangian graph in L + L^v.  Its coinvariants on the Fock module of L are
free of rank one, and the class of the vacuum against e_m^* ... e_1^* is the
generalized Pfaffian.  Here we compare that linear-algebra answer with the
closed sign formula and with a minor recursion.
"""
import random

from hcx.cli import random_pf_instance
from hcx.exactcore import BaseRing
from hcx.pfaffian import PfInput, classical_pfaffian, pf_all


def show(inp, label):
    vals = pf_all(inp)
    print(f"{label}:")
    for name, v in vals.items():
        print(f"  {name:9} {v}")
    same = len({str(v.coefficient) for v in vals.values()}) == 1
    print(f"  agree:    {same}\n")


R = BaseRing(["a"], ["l1", "l2"])
show(PfInput(R, [[0, "a"], ["-a", 0]], ["l1", "l2"]), "rank 2")

R3 = BaseRing(["a12", "a13", "a23"], ["l1", "l2", "l3"])
phi3 = [[0, "a12", "a13"], ["-a12", 0, "a23"], ["-a13", "-a23", 0]]
show(PfInput(R3, phi3, ["l1", "l2", "l3"]), "rank 3 (odd rank: every term carries a lambda)")

# with lambda = 0 the answer is the classical Pfaffian, once the top
# monomial is written in increasing order e_1^* ... e_m^*
Q = BaseRing()
phi4 = [[0, 1, 2, 3], [-1, 0, 4, 5], [-2, -4, 0, 6], [-3, -5, -6, 0]]
inp = PfInput(Q, phi4, [0] * 4)
v = pf_all(inp)["oracle"]
print(f"rank 4, lambda = 0: ascending coefficient {v.ascending()}, "
      f"classical Pf {classical_pfaffian(Q, inp.phi)}\n")

rng = random.Random(11)
ok = 0
for _ in range(10):
    vals = pf_all(random_pf_instance(rng, rng.randint(1, 4)))
    ok += len({str(x.coefficient) for x in vals.values()}) == 1
print(f"random instances with nilpotent corrections: {ok}/10 agree")
