"""Scenario files, verification suites and deterministic reports.

A scenario is a YAML document::

    name: demo
    ring: {even: [x], odd: []}
    space: {basis: [e, es], parities: [0, 0], gram: [[0, -1], [1, 0]]}
    subspaces:
      L: {generators: [{e: 1}], lagrangian: true}
    charts: {}
    tasks:
      - {kind: homology, subspace: L, module: {fock: L}, window: [0, 1]}

All mathematical entries are expression strings (or integers) in the base ring.
"""
from __future__ import annotations

import argparse
import ast
import json
import random
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import yaml

from . import algebroid as alg
from .exactcore import BaseRing, ParseError, Scalar, format_scalar, parse_scalar, prepare_source, source_column
from .fock import FockModule, RegularModule, clifford_factorize
from .heisenberg import Element, HeisenbergAlgebra, Subspace, SymplecticSpace, Vec, WeylAlgebra
from .homology import build_koszul, coinvariants, homology
from .pfaffian import PfInput, pf_all, pf_formula

REPORT_SCHEMA = "hcx-report/1"

# closed set of statement tags; every task carries exactly one
TAGS = (
    "pfaffian-closed-form",
    "pfaffian-agreement",
    "koszul-dsquared",
    "coinvariants-transversal",
    "homology-placement",
    "clifford-factorization",
    "right-action",
    "lift-formula",
    "gamma-operators",
    "heat-equation",
    "transition-cocycle",
    "flat-connection",
)

SUITES = {
    "pfaffian-paper-examples": ["pfaffian_examples.yaml"],
    "lg2-worked-example": ["lg2_worked_example.yaml"],
    "koszul-dsquared": ["koszul_dsquared.yaml"],
}
SUITES["all"] = [f for k in ("pfaffian-paper-examples", "lg2-worked-example", "koszul-dsquared")
                 for f in SUITES[k]]


class LoadError(ValueError):
    """Scenario load failure; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ----------------------------------------------------------------- expressions

def _scalar(ring: BaseRing, value, path: str) -> Scalar:
    if isinstance(value, bool):
        raise LoadError(path, "expected an expression, got a boolean")
    if isinstance(value, int):
        return ring.const(value)
    if not isinstance(value, str):
        raise LoadError(path, f"expected an expression string, got {type(value).__name__}")
    try:
        return parse_scalar(value, ring)
    except ParseError as exc:
        raise LoadError(path, str(exc)) from None


def parse_weyl(text, W: WeylAlgebra, ring: BaseRing, path: str = "expression") -> Element:
    """Polynomial expressions in the basis names of W with ring coefficients."""
    if isinstance(text, int) and not isinstance(text, bool):
        return W.scalar(text)
    if not isinstance(text, str):
        raise LoadError(path, "expected a Weyl expression string")
    try:
        tree = ast.parse(prepare_source(text), mode="eval")
    except SyntaxError as exc:
        off = exc.offset - 1 if exc.offset else len(prepare_source(text))
        raise LoadError(path, f"syntax error in {text!r} (at column {source_column(text, off)})") from None

    def err(msg, node):
        raise LoadError(path, f"{msg} (at column {source_column(text, getattr(node, 'col_offset', None))})")

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                err("only integer literals are allowed", node)
            return W.scalar(node.value)
        if isinstance(node, ast.Name):
            if node.id in W.index:
                return W.gen(node.id)
            try:
                return W.scalar(ring.var(node.id))
            except KeyError:
                err(f"unknown identifier {node.id!r}", node)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            op = node.op
            if isinstance(op, ast.Pow):
                e = node.right
                if not (isinstance(e, ast.Constant) and type(e.value) is int and e.value >= 0):
                    err("exponent must be a nonnegative integer literal", e)
                return walk(node.left) ** e.value
            a, b = walk(node.left), walk(node.right)
            if isinstance(op, ast.Add):
                return a + b
            if isinstance(op, ast.Sub):
                return a - b
            if isinstance(op, ast.Mult):
                return a * b
            if isinstance(op, ast.Div):
                if set(b.terms) - {()} or not b.scalar_part().body() or set(b.scalar_part().terms) - {()}:
                    err("can only divide by a nonzero even constant", node.right)
                inv = Scalar(ring, {(): ring.K.one / b.scalar_part().body()})
                return inv * a
        err(f"unsupported syntax {type(node).__name__}", node)

    return walk(tree)


# ----------------------------------------------------------------- scenarios

@dataclass
class Scenario:
    name: str
    ring: BaseRing
    space: Optional[SymplecticSpace]
    subspaces: Dict[str, Subspace]
    charts: Dict[str, alg.Chart]
    tasks: List[Dict[str, Any]]
    source: Dict[str, Any] = field(repr=False, default_factory=dict)


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict) or key not in d:
        raise LoadError(path, f"missing field {key!r}")
    return d[key]


def _vector(sp: SymplecticSpace, spec, path: str) -> Vec:
    if not isinstance(spec, dict):
        raise LoadError(path, "a vector is a mapping from basis names (or '1' for the center) to expressions")
    coords, central = {}, 0
    for k, v in spec.items():
        k = str(k)
        if k == "1":
            central = _scalar(sp.ring, v, f"{path}.1")
        elif k in sp.index:
            coords[k] = _scalar(sp.ring, v, f"{path}.{k}")
        else:
            raise LoadError(f"{path}.{k}", f"unknown basis vector {k!r}")
    return sp.vec(coords, central)


def _named_vectors(sp, spec, path) -> Tuple[List[str], List[Vec]]:
    if spec is None:
        return [], []
    if not isinstance(spec, dict):
        raise LoadError(path, "expected a mapping name -> vector")
    names = [str(k) for k in spec]
    return names, [_vector(sp, v, f"{path}.{k}") for k, v in spec.items()]


def _matrix(ring, spec, rows, cols, path) -> List[List[Scalar]]:
    spec = spec if spec is not None else []
    if rows == 0:
        return []
    if not isinstance(spec, list) or len(spec) != rows:
        raise LoadError(path, f"expected {rows} rows")
    out = []
    for i, row in enumerate(spec):
        if not isinstance(row, list) or len(row) != cols:
            raise LoadError(f"{path}[{i}]", f"expected {cols} entries")
        out.append([_scalar(ring, x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return out


def load_scenario_data(data: dict, origin: str = "<scenario>") -> Scenario:
    if not isinstance(data, dict):
        raise LoadError("<root>", "scenario must be a mapping")
    ringd = data.get("ring") or {}
    try:
        ring = BaseRing([str(x) for x in ringd.get("even", [])], [str(x) for x in ringd.get("odd", [])])
    except ValueError as exc:
        raise LoadError("ring", str(exc)) from None
    sp = None
    if data.get("space") is not None:
        sd = data["space"]
        basis = [str(b) for b in _need(sd, "basis", "space")]
        pars = _need(sd, "parities", "space")
        if len(pars) != len(basis):
            raise LoadError("space.parities", "length differs from the basis")
        gram = _matrix(ring, _need(sd, "gram", "space"), len(basis), len(basis), "space.gram")
        try:
            sp = SymplecticSpace(ring, basis, pars, gram)
        except ValueError as exc:
            raise LoadError("space", str(exc)) from None
    subs: Dict[str, Subspace] = {}
    for name, sd in (data.get("subspaces") or {}).items():
        path = f"subspaces.{name}"
        if sp is None:
            raise LoadError(path, "subspaces need a space")
        gens = [_vector(sp, g, f"{path}.generators[{i}]")
                for i, g in enumerate(_need(sd, "generators", path))]
        try:
            S = Subspace(HeisenbergAlgebra(sp), gens, str(name))
        except ValueError as exc:
            raise LoadError(path, str(exc)) from None
        if sd.get("isotropic") or sd.get("lagrangian"):
            bad = S.offending_pair()
            if bad is not None:
                i, j, val = bad
                raise LoadError(path, f"declared isotropic but (generators[{i}], generators[{j}]) "
                                      f"has bracket {format_scalar(val)}")
        if sd.get("lagrangian") and not S.is_lagrangian():
            raise LoadError(path, "declared Lagrangian but the rank is not half the dimension")
        subs[str(name)] = S
    charts: Dict[str, alg.Chart] = {}
    for name, cd in (data.get("charts") or {}).items():
        path = f"charts.{name}"
        if sp is None:
            raise LoadError(path, "charts need a space")
        i0n, i0 = _named_vectors(sp, _need(cd, "i0", path), f"{path}.i0")
        dn, du = _named_vectors(sp, _need(cd, "dual", path), f"{path}.dual")
        vn, vp = _named_vectors(sp, cd.get("vprime"), f"{path}.vprime")
        m, k = len(i0), len(vp)
        try:
            if "generators" in cd:
                gens = [_vector(sp, g, f"{path}.generators[{i}]") for i, g in enumerate(cd["generators"])]
                c = alg.Chart.from_generators(sp, gens, i0, du, vp, i0_names=i0n, dual_names=dn,
                                              vprime_names=vn, name=str(name))
            else:
                phi = _matrix(ring, cd.get("phi"), m, m, f"{path}.phi")
                psi = _matrix(ring, cd.get("psi"), k, m, f"{path}.psi")
                lam_spec = cd.get("lam") or [0] * m
                if len(lam_spec) != m:
                    raise LoadError(f"{path}.lam", f"expected {m} entries")
                lam = [_scalar(ring, x, f"{path}.lam[{j}]") for j, x in enumerate(lam_spec)]
                c = alg.Chart(sp, i0, du, vp, phi, psi, lam, i0_names=i0n, dual_names=dn,
                              vprime_names=vn, name=str(name))
        except alg.ChartError as exc:
            raise LoadError(path, str(exc)) from None
        charts[str(name)] = c
    tasks = data.get("tasks") or []
    if not isinstance(tasks, list):
        raise LoadError("tasks", "expected a list")
    seen = set()
    for i, t in enumerate(tasks):
        path = f"tasks[{i}]"
        if not isinstance(t, dict):
            raise LoadError(path, "a task is a mapping")
        kind = _need(t, "kind", path)
        if kind not in TASKS:
            raise LoadError(f"{path}.kind", f"unknown task kind {kind!r}")
        tag = t.get("tag", DEFAULT_TAG[kind])
        if tag not in TAGS:
            raise LoadError(f"{path}.tag", f"unknown statement tag {tag!r}")
        tid = str(t.get("id", f"task{i + 1}"))
        if tid in seen:
            raise LoadError(f"{path}.id", f"duplicate task id {tid!r}")
        seen.add(tid)
        for key in ("subspace", "chart"):
            if key in t:
                table = subs if key == "subspace" else charts
                if t[key] not in table:
                    raise LoadError(f"{path}.{key}", f"unresolved name {t[key]!r}")
        mod = t.get("module")
        if isinstance(mod, dict) and "fock" in mod and mod["fock"] not in subs:
            raise LoadError(f"{path}.module.fock", f"unresolved name {mod['fock']!r}")
    return Scenario(str(data.get("name", origin)), ring, sp, subs, charts, tasks, data)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise LoadError("<file>", str(exc)) from None
    return loads_scenario(text, path)


def loads_scenario(text: str, origin: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise LoadError("<yaml>", f"malformed document{where}") from None
    return load_scenario_data(data or {}, origin)


# ----------------------------------------------------------------- tasks

@dataclass
class Flags:
    max_degree: Optional[int] = None
    mode: str = "generic"
    window: Optional[Tuple[int, int]] = None
    seed: Optional[int] = None

    def as_dict(self):
        return {"max_degree": self.max_degree, "mode": self.mode,
                "window": list(self.window) if self.window else None, "seed": self.seed}


class Expectation:
    """Collects named checks of one task."""

    def __init__(self):
        self.checks: List[Tuple[str, bool]] = []

    def check(self, name: str, ok: bool):
        self.checks.append((name, bool(ok)))

    @property
    def status(self) -> str:
        if not self.checks:
            return "info"
        return "pass" if all(ok for _, ok in self.checks) else "fail"


def _s(x: Scalar) -> str:
    return format_scalar(x)


def _module(sc: Scenario, spec, path: str):
    if spec is None or spec == "regular":
        return RegularModule(sc.space)
    if isinstance(spec, dict) and "fock" in spec:
        return FockModule(sc.subspaces[spec["fock"]], spec.get("side", "left"))
    raise LoadError(path, "module must be 'regular' or {fock: <subspace>, side: left|right}")


def _point_scenario(sc: Scenario, t: dict) -> Scenario:
    """Re-load the scenario with the task's point substituted for even parameters."""
    point = t.get("point")
    if not point:
        return sc
    data = json.loads(json.dumps(sc.source))
    ring = data.setdefault("ring", {})
    ring["even"] = [n for n in ring.get("even", []) if n not in point]

    def sub(x):
        if isinstance(x, str):
            return _subst(x, point)
        if isinstance(x, list):
            return [sub(y) for y in x]
        if isinstance(x, dict):
            return {k: (sub(v) if k not in ("tasks",) else v) for k, v in x.items()}
        return x

    for key in ("space", "subspaces", "charts"):
        if key in data:
            data[key] = sub(data[key])
    data["tasks"] = []
    return load_scenario_data(data, sc.name)


def _subst(text: str, point: Dict[str, Any]) -> str:
    tree = ast.parse(text.replace("^", "**"), mode="eval")

    class R(ast.NodeTransformer):
        def visit_Name(self, node):
            if node.id in point:
                return ast.parse(f"({point[node.id]})", mode="eval").body
            return node

    return ast.unparse(R().visit(tree))


def _window(t, flags, default=(0, 2)):
    if flags.window:
        return flags.window
    w = t.get("window", list(default))
    return int(w[0]), int(w[1])


def _cutoff(t, flags, default=4):
    return flags.max_degree if flags.max_degree is not None else int(t.get("max_degree", default))


def task_homology(sc, t, flags, ex: Expectation):
    if flags.mode == "point":
        sc = _point_scenario(sc, t)
    I = sc.subspaces[t["subspace"]]
    M = _module(sc, t.get("module"), "module")
    lo, hi = _window(t, flags)
    N = _cutoff(t, flags)
    C = build_koszul(I, M, (lo, hi + 1), N, check=False)
    res = {"window": [lo, hi], "cutoff": N, "degrees": {}}
    for k in range(lo, hi + 1):
        h = homology(C, k, N)
        res["degrees"][str(-k)] = {"rank": h.rank, "cutoff": h.cutoff, "stabilized": h.stabilized}
    exp = t.get("expect") or {}
    for deg, r in (exp.get("ranks") or {}).items():
        got = res["degrees"].get(str(deg))
        ex.check(f"rank at {deg}", got is not None and got["rank"] == int(r))
    if exp.get("stabilized"):
        ex.check("stabilized", all(d["stabilized"] for d in res["degrees"].values()))
    if t.get("vacuum_unit"):
        Q = coinvariants(I, M, N)
        vac = M.vacuum()
        gen = Q.certify_free_rank_one(vac)
        res["vacuum_generates"] = gen
        if gen:
            res["vacuum_coordinate"] = _s(Q.coordinate(vac, vac))
        if exp.get("vacuum_unit"):
            ex.check("vacuum is a unit", gen)
    return res


def task_dsquared(sc, t, flags, ex):
    if flags.mode == "point":
        sc = _point_scenario(sc, t)
    I = sc.subspaces[t["subspace"]]
    M = _module(sc, t.get("module"), "module")
    lo, hi = _window(t, flags, (0, 3))
    N = _cutoff(t, flags, 3)
    C = build_koszul(I, M, (lo, hi), N, check=False)
    ok = all(C.check_dsquared(k, N) for k in range(max(lo, 2), hi + 1))
    ex.check("d^2 = 0", ok)
    return {"window": [lo, hi], "cutoff": N, "dsquared_zero": ok}


def _pf_input(sc, t) -> PfInput:
    ring = sc.ring
    lam = [_scalar(ring, x, f"lam[{i}]") for i, x in enumerate(t["lam"])]
    m = len(lam)
    phi = _matrix(ring, t.get("phi") or [[0] * m for _ in range(m)], m, m, "phi")
    return PfInput(ring, phi, lam)


def task_pfaffian(sc, t, flags, ex):
    inp = _pf_input(sc, t)
    vals = pf_all(inp)
    res = {"m": inp.m, "values": {k: _s(v.coefficient) for k, v in vals.items()},
           "monomial": str(vals["formula"]).split(" * ", 1)[1]}
    coeffs = [v.coefficient for v in vals.values()]
    agree = all(c == coeffs[0] for c in coeffs)
    res["agree"] = agree
    ex.check("three methods agree", agree)
    exp = t.get("expect") or {}
    if "value" in exp:
        ex.check("closed form", coeffs[0] == _scalar(sc.ring, exp["value"], "expect.value"))
    return res


def random_pf_instance(rng: random.Random, m: int) -> PfInput:
    odd = [f"l{i + 1}" for i in range(m)]
    ring = BaseRing([], odd)
    phi = [[ring.zero] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            a = ring.const(rng.randint(-3, 3))
            if rng.random() < 0.3 and m >= 3:
                # an even nilpotent correction
                p, q = rng.sample(range(m), 2)
                a = a + ring.const(rng.randint(-2, 2)) * ring.var(odd[p]) * ring.var(odd[q])
            phi[i][j], phi[j][i] = a, -a
    lam = []
    for i in range(m):
        x = ring.var(odd[i])
        if rng.random() < 0.5:
            x = x + ring.const(rng.randint(-2, 2)) * ring.var(odd[rng.randrange(m)])
        lam.append(x)
    return PfInput(ring, phi, lam)


def task_pfaffian_random(sc, t, flags, ex):
    seed = flags.seed if flags.seed is not None else int(t.get("seed", 0))
    rng = random.Random(seed)
    count, mmax = int(t.get("count", 10)), int(t.get("m_max", 4))
    agree = 0
    for _ in range(count):
        inp = random_pf_instance(rng, rng.randint(1, mmax))
        vals = pf_all(inp)
        cs = [v.coefficient for v in vals.values()]
        agree += all(c == cs[0] for c in cs)
    ex.check("all instances agree", agree == count)
    return {"count": count, "m_max": mmax, "seed": seed, "agreements": agree}


def task_clifford(sc, t, flags, ex):
    M = _module(sc, t.get("module"), "module")
    L = sc.subspaces[t["subspace"]]
    r = clifford_factorize(M, L, _cutoff(t, flags, 4))
    ex.check("bijective", r["bijective"])
    ex.check("dimension identity", r["dimension_identity"])
    return {k: r[k] for k in sorted(r)}


def _field(sc, ring, spec, path) -> alg.VectorField:
    if not isinstance(spec, dict):
        raise LoadError(path, "a vector field is a mapping coordinate -> expression")
    try:
        return alg.VectorField(ring, {str(k): _scalar(ring, v, f"{path}.{k}") for k, v in spec.items()})
    except KeyError as exc:
        raise LoadError(path, f"unknown base coordinate {exc.args[0]!r}") from None


def task_right_action(sc, t, flags, ex):
    c = sc.charts[t["chart"]]
    ops = alg.right_action_ops(c)
    res = {"ops": {n: str(ops[n]) for n in c.space.names}}
    defects = alg.weyl_relation_defects(c)
    audit = alg.audit_right_action(c, int(t.get("audit_degree", 3)))
    res["weyl_relations"] = not defects
    res["fock_audit"] = not audit
    ex.check("Weyl relations", not defects)
    ex.check("agrees with the Fock module", not audit)
    for n, want in ((t.get("expect") or {}).get("ops") or {}).items():
        ex.check(f"r_{n}", res["ops"].get(str(n)) == str(want))
    return res


def task_lift(sc, t, flags, ex):
    c = sc.charts[t["chart"]]
    res = {"lifts": {}}
    for name, spec in (t.get("fields") or {}).items():
        v = _field(sc, c.ring, spec, f"fields.{name}")
        D = alg.build_lift(c, v)
        entry = {"operator": str(D), "commutes": not alg.commutation_defects(c, D),
                 "oracle_agrees": alg.solve_lift(c, v) == D}
        res["lifts"][str(name)] = entry
        ex.check(f"{name} commutes", entry["commutes"])
        ex.check(f"{name} oracle", entry["oracle_agrees"])
    for name, want in ((t.get("expect") or {}).get("operators") or {}).items():
        got = res["lifts"].get(str(name), {}).get("operator")
        ex.check(f"{name} normal form", got == str(want))
    return res


def task_gamma(sc, t, flags, ex):
    c = sc.charts[t["chart"]]
    W = WeylAlgebra(c.space)
    table = []
    res = {"table": [], "identities": []}
    for i, row in enumerate(t.get("table") or []):
        w = parse_weyl(row["w"], W, c.ring, f"table[{i}].w")
        v = _field(sc, c.ring, row["field"], f"table[{i}].field")
        g = alg.gamma(c, w, v)
        tangent = not alg.commutation_defects(c, g)
        res["table"].append({"w": str(w), "field": str(v), "gamma": str(g), "tangent": tangent})
        ex.check(f"{row['w']} tangent", tangent)
        table.append((w, v))
    G = alg.GammaMap(c, table)
    defects = G.homomorphism_defects()
    res["lie_homomorphism"] = not defects
    ex.check("Lie homomorphism", not defects)
    fields = alg.coordinate_fields(c.ring)
    nabla = {next(iter(v.comps)): alg.build_lift(c, v) for v in fields}
    for i, row in enumerate(t.get("identities") or []):
        w = parse_weyl(row["w"], W, c.ring, f"identities[{i}].w")
        v = _field(sc, c.ring, row.get("nabla") or {}, f"identities[{i}].nabla")
        plus = _scalar(c.ring, row.get("plus", 0), f"identities[{i}].plus")
        rhs = c.ops.scalar(plus)
        for n, a in v.comps.items():
            rhs = rhs + a * nabla[n]
        ok = G(w) == rhs
        res["identities"].append({"w": str(w), "holds": ok})
        ex.check(f"gamma({row['w']})", ok)
    return res


def task_heat(sc, t, flags, ex):
    c = sc.charts[t["chart"]]
    n = flags.max_degree if flags.max_degree is not None else int(t.get("max_degree", 6))
    r = alg.heat_check(c, n)
    ex.check("annihilates I(m)", r.ok)
    return {"max_degree": n, "cutoff": r.cutoff, "annihilated": dict(zip(map(str, r.degrees), r.annihilated))}


def task_cech(sc, t, flags, ex):
    r = alg.cech_class_lg2()
    res = {"f_y": str(r.differences["y"]), "f_mu": str(r.differences["mu"]),
           "omega_dx": str(r.omega[0]), "omega_dlam": str(r.omega[1]), "closed": r.closed,
           "omega0_dx": str(r.omega0), "primitive": str(r.primitive), "primitive_ok": r.primitive_ok}
    import sympy
    X, L = sympy.symbols("x lam")
    exp = t.get("expect") or {}
    for key, name in (("f_y", "y"), ("f_mu", "mu")):
        if key in exp:
            want = sympy.sympify(str(exp[key]).replace("^", "**"), locals={"x": X, "lam": L})
            ex.check(key, sympy.simplify(r.differences[name] - want) == 0)
    ex.check("closed", r.closed)
    ex.check("primitive", r.primitive_ok)
    return res


def task_connection(sc, t, flags, ex):
    c = sc.charts[t["chart"]]
    J = [_vector(c.space, v, f"J[{i}]") for i, v in enumerate(t.get("J") or [])]
    conn = alg.canonical_connection(c, J)
    curv = alg.curvature(conn, alg.coordinate_fields(c.ring))
    flat = all(not v for v in curv.values())
    uniq = all(alg.normalization_violations(conn).values())
    ex.check("flat", flat)
    ex.check("unique", uniq)
    return {"lifts": {n: str(D) for n, D in sorted(conn.lifts.items())}, "flat": flat, "unique": uniq}


TASKS: Dict[str, Callable] = {
    "homology": task_homology,
    "dsquared": task_dsquared,
    "pfaffian": task_pfaffian,
    "pfaffian_random": task_pfaffian_random,
    "clifford": task_clifford,
    "right_action": task_right_action,
    "lift": task_lift,
    "gamma": task_gamma,
    "heat": task_heat,
    "cech": task_cech,
    "connection": task_connection,
}

DEFAULT_TAG = {
    "homology": "homology-placement",
    "dsquared": "koszul-dsquared",
    "pfaffian": "pfaffian-closed-form",
    "pfaffian_random": "pfaffian-agreement",
    "clifford": "clifford-factorization",
    "right_action": "right-action",
    "lift": "lift-formula",
    "gamma": "gamma-operators",
    "heat": "heat-equation",
    "cech": "transition-cocycle",
    "connection": "flat-connection",
}


# ----------------------------------------------------------------- reports

def run(sc: Scenario, flags: Optional[Flags] = None) -> Dict[str, Any]:
    flags = flags or Flags()
    out = []
    for i, t in enumerate(sc.tasks):
        kind = t["kind"]
        entry = {"id": str(t.get("id", f"task{i + 1}")), "kind": kind,
                 "tag": t.get("tag", DEFAULT_TAG[kind]),
                 "inputs": {k: v for k, v in t.items() if k not in ("id", "kind", "tag", "expect")}}
        ex = Expectation()
        try:
            entry["results"] = TASKS[kind](sc, t, flags, ex)
            entry["status"] = ex.status
        except Exception as exc:  # captured so sibling tasks still run
            entry["results"] = {}
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
        entry["checks"] = [{"name": n, "ok": ok} for n, ok in ex.checks]
        out.append(entry)
    summary = {s: sum(1 for e in out if e["status"] == s) for s in ("pass", "fail", "error", "info")}
    summary["total"] = len(out)
    return {"schema": REPORT_SCHEMA, "scenario": sc.name, "flags": flags.as_dict(),
            "tasks": out, "summary": summary}


def combine(reports: Sequence[Dict[str, Any]], suite: str) -> Dict[str, Any]:
    summary = {s: sum(r["summary"][s] for r in reports) for s in ("pass", "fail", "error", "info", "total")}
    return {"schema": REPORT_SCHEMA, "suite": suite, "reports": list(reports), "summary": summary}


def report_ok(report: Dict[str, Any]) -> bool:
    return report["summary"]["fail"] == 0 and report["summary"]["error"] == 0


def _plain(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, (dict, list)):
        return json.dumps(x, sort_keys=True, ensure_ascii=False)
    return str(x)


def render_text(report: Dict[str, Any]) -> str:
    lines: List[str] = []

    def one(r):
        lines.append(f"scenario {r['scenario']}")
        lines.append(f"  flags: {_plain(r['flags'])}")
        for t in r["tasks"]:
            lines.append(f"  [{t['status'].upper()}] {t['id']} ({t['kind']}; {t['tag']})")
            if "error" in t:
                lines.append(f"    error: {t['error']}")
            for k in sorted(t["inputs"]):
                lines.append(f"    input {k}: {_plain(t['inputs'][k])}")
            for k in sorted(t["results"]):
                lines.append(f"    {k}: {_plain(t['results'][k])}")
            for c in t["checks"]:
                lines.append(f"    check {c['name']}: {'ok' if c['ok'] else 'FAILED'}")
        s = r["summary"]
        lines.append(f"  summary: {s['pass']} pass, {s['fail']} fail, {s['error']} error, {s['info']} info")

    if "reports" in report:
        lines.append(f"suite {report['suite']} ({report['schema']})")
        for r in report["reports"]:
            one(r)
        s = report["summary"]
        lines.append(f"total: {s['pass']} pass, {s['fail']} fail, {s['error']} error, {s['info']} info")
    else:
        lines.append(f"report {report['schema']}")
        one(report)
    return "\n".join(lines) + "\n"


def render(report: Dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    return render_text(report)


# ----------------------------------------------------------------- suites and entry point

def suite_path(filename: str):
    return resources.files("hcx").joinpath("data", "scenarios", filename)


def verify(suite: str, flags: Optional[Flags] = None) -> Dict[str, Any]:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; try 'hcx list-suites'")
    reports = []
    for fn in SUITES[suite]:
        sc = loads_scenario(suite_path(fn).read_text(encoding="utf-8"), fn)
        reports.append(run(sc, flags))
    return combine(reports, suite)


def _window_arg(text: str) -> Tuple[int, int]:
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like a..b") from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = argparse.ArgumentParser(prog="hcx", description="Heisenberg coinvariants toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)
    pr = sub.add_parser("run", help="run a scenario file")
    pr.add_argument("scenario")
    pr.add_argument("--max-degree", type=int, default=None)
    pr.add_argument("--mode", choices=["point", "generic"], default="generic")
    pr.add_argument("--window", type=_window_arg, default=None)
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--report", choices=["text", "json"], default="text")
    pv = sub.add_parser("verify", help="run a built-in verification suite")
    pv.add_argument("suite")
    pv.add_argument("--seed", type=int, default=None)
    pv.add_argument("--report", choices=["text", "json"], default="text")
    sub.add_parser("list-suites", help="list the built-in suites")
    args = p.parse_args(argv)
    if args.cmd == "list-suites":
        for name in SUITES:
            sys.stdout.write(f"{name}: {', '.join(SUITES[name])}\n")
        return 0
    if args.cmd == "verify":
        try:
            rep = verify(args.suite, Flags(seed=args.seed))
        except KeyError as exc:
            sys.stderr.write(f"hcx: {exc.args[0]}\n")
            return 2
        sys.stdout.write(render(rep, args.report))
        return 0 if report_ok(rep) else 1
    try:
        sc = load_scenario(args.scenario)
    except LoadError as exc:
        sys.stderr.write(f"hcx: cannot load {args.scenario}: {exc}\n")
        return 2
    rep = run(sc, Flags(args.max_degree, args.mode, args.window, args.seed))
    sys.stdout.write(render(rep, args.report))
    return 0 if report_ok(rep) else 1


if __name__ == "__main__":
    sys.exit(main())
