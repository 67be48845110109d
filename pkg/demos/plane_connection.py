"""Lifts, gamma operators and the transition cocycle for the plane.

Lines in the even plane (e, e*) near span(e) are span(e + x e* + lam).  On
this chart the right Fock module is O[e*], and vector fields on (x, lam) lift
to first-order operators commuting with the right action.  The Weyl operators
of degree <= 2 act by gamma, a Lie homomorphism into lifts plus scalars, and
the operator 2 D_x + D_lam^2 kills the classes coming from M(span e).
"""
from hcx.algebroid import (GammaMap, build_lift, cech_class_lg2, curvature, coordinate_fields,
                           heat_check, lg2_chart0, lg2_gamma_table, right_action_ops)

c = lg2_chart0()
print("right action on O[e*]:")
for name, op in right_action_ops(c).items():
    if not name.startswith("frame:"):
        print(f"  r_{name} = {op}")

print("\nlifts of the coordinate fields:")
for v in coordinate_fields(c.ring):
    print(f"  D({v}) = {build_lift(c, v)}")
curv = curvature(lambda v: build_lift(c, v), coordinate_fields(c.ring))
print(f"  flat: {all(not x for x in curv.values())}")

G = GammaMap(c, lg2_gamma_table(c))
print("\ngamma on W_{<=2}:")
for w, v in G.table:
    print(f"  gamma({w}) = {G(w)}")
print(f"  Lie homomorphism: {G.homomorphism_defects() == {}}")

rep = heat_check(c, 6)
print(f"\nheat operator annihilates (e*)^k classes for k <= 6: {rep.ok}")

r = cech_class_lg2()
print("\nsecond chart y = -1/x, mu = lam/x; the lifts differ by a closed 1-form")
print(f"  along d_y: {r.differences['y']}    along d_mu: {r.differences['mu']}")
print(f"  closed: {r.closed}; minus dx/2x it is d({r.primitive}): {r.primitive_ok}")
