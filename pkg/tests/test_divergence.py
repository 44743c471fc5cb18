"""Divergence quotient: exactness, completeness on random divergences,
witness behavior."""

import itertools

import pytest
import sympy as sp

from curvhess import divergence as dv
from curvhess import expr as ex
from curvhess import rules
from curvhess.parser import parse_expr
from curvhess.rules import ConstraintSet
from curvhess.spaceform import SpaceFormModel

CS_K = ConstraintSet.kaehler_tt()
CS_TT = ConstraintSet.tt_symmetric()
MSYM = SpaceFormModel()


def test_ibp_pairing_identity():
    e = parse_expr("-D_a(D_a(h(p,q)))*h(p,q) - D_b(h(p,q))*D_b(h(p,q))")
    res = dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM)
    assert res.is_zero()


def test_exact_divergence_dies():
    e = parse_expr("D_a(h(b,e)*D_a(h(b,e)))")
    assert dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM).is_zero()


def test_non_divergence_survives():
    e = parse_expr("h(a,b)*h(a,b)")
    res = dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM)
    assert len(res.normal_form.terms) == 1
    assert res.normal_form.terms[0].coeff == 1


def test_random_divergences_reduce_to_zero():
    """50 random rank-1 monomials V with jets <= 3 (raw presentations,
    gauge edges allowed): D_a V^a == 0 in the quotient, both backgrounds."""
    import random
    rng = random.Random(20240)
    count = 0
    attempts = 0
    while count < 50 and attempts < 400:
        attempts += 1
        sym = rng.random() < 0.4
        cs, model = (CS_TT, None) if sym else (CS_K, MSYM)
        q1, q2 = rng.choice([(1, 0), (2, 1), (3, 0), (1, 1), (2, 0)])
        if (q1 + q2) % 2 == 0:
            q2 += 1
        use_r = sym and rng.random() < 0.3
        if use_r:
            q1, q2 = 1, 0  # curvature generators live in the weight-3 sector
        factors_spec = ([("R", 0)] if use_r else []) + [("h", q1), ("h", q2)]
        nslots = [q + (2 if k == "h" else 4) for k, q in factors_spec]
        total = sum(nslots)
        slots = list(range(total))
        rng.shuffle(slots)
        free_slot = slots[0]
        pairs = [(slots[i], slots[i + 1]) for i in range(1, total - 1, 2)]
        assign = {free_slot: ("a", rng.randint(0, 1) if not sym else 0)}
        for k, (s1, s2) in enumerate(pairs):
            bit = rng.randint(0, 1) if not sym else 0
            assign[s1] = (100 + k, bit)
            assign[s2] = (100 + k, 0)
        factors = []
        pos = 0
        for (kind, q), ns in zip(factors_spec, nslots):
            ids = [assign[pos + t][0] for t in range(ns)]
            bits = [assign[pos + t][1] for t in range(ns)]
            pos += ns
            nd = q if kind == "h" else 0
            factors.append(ex.Factor(kind, tuple(ids[:nd]), tuple(ids[nd:]),
                                     tuple(bits[:nd]), tuple(bits[nd:])))
        v = ex.TensorExpr(("a",), [ex.Monomial(sp.Integer(1), factors)])
        if rules.normalize(v, cs=cs, model=model).is_zero():
            continue
        e = rules.divergence(v, "a")
        res = dv.reduce_mod_divergence(e, cs=cs, model=model, max_factor_jet=3)
        assert res.is_zero(), v.pretty()
        count += 1
    assert count >= 50


def test_mixed_weight_rejected():
    e = parse_expr("h(a,b)*h(a,b) + D_i(h(a,b))*D_i(h(a,b))")
    with pytest.raises(ex.ExprError, match="mixed sector"):
        dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM)


def test_rank_guard():
    with pytest.raises(ex.ExprError, match="scalar"):
        dv.reduce_mod_divergence(parse_expr("h(a,b)"), cs=CS_K, model=MSYM)


def test_basis_cap():
    e = parse_expr("-D_a(D_a(h(p,q)))*h(p,q)")
    with pytest.raises(dv.BasisOverflow):
        dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM, basis_cap=2)


def test_expr_equal_symmetric_reflexive():
    e1 = parse_expr("D_a(h(p,q))*D_a(h(p,q))")
    e2 = parse_expr("-D_a(D_a(h(p,q)))*h(p,q)")
    ok_ab, _ = dv.expr_equal(e1, e2, cs=CS_K, model=MSYM, mod_div=True)
    ok_ba, _ = dv.expr_equal(e2, e1, cs=CS_K, model=MSYM, mod_div=True)
    ok_aa, _ = dv.expr_equal(e1, e1, cs=CS_K, model=MSYM, mod_div=True)
    assert ok_ab and ok_ba and ok_aa


def test_false_verdict_carries_stable_witness():
    e1 = parse_expr("D_a(h(p,q))*D_a(h(p,q))")
    e2 = parse_expr("-2*D_a(D_a(h(p,q)))*h(p,q)")
    ok, witness = dv.expr_equal(e1, e2, cs=CS_K, model=MSYM, mod_div=True)
    assert not ok and not witness.is_zero()
    renorm = dv.reduce_mod_divergence(witness, cs=CS_K, model=MSYM)
    assert renorm.normal_form.pretty() == witness.pretty()


def test_decomposition_reconstructs_expression():
    """e = nf + sum(mult * relation) exactly, as canonical vectors."""
    e = parse_expr("-D_a(D_a(h(p,q)))*h(p,q)")
    res = dv.reduce_mod_divergence(e, cs=CS_K, model=MSYM,
                                   want_decomposition=True)
    assert res.decomposition
    recon = res.normal_form
    for mult, tag, src in res.decomposition:
        if tag == "div":
            recon = recon + mult * rules.normalize(
                rules.divergence(src, "a"), cs=CS_K, model=MSYM)
        else:
            recon = recon + mult * rules.normalize(src, cs=CS_K, model=MSYM)
    assert rules.normalize(recon - e, cs=CS_K, model=MSYM).is_zero()


def test_dD_norm_identity_symbolic_background():
    """|dD h|^2 = 2|Dh|^2 + 2 lam |h|^2 - 2 <Rring h, h>  (mod divergence)."""
    dd = ("( D_b(h(a,e)) - D_e(h(a,b)) )")
    e1 = parse_expr(f"{dd}*{dd}")
    e2 = parse_expr(
        "2*D_i(h(p,q))*D_i(h(p,q)) + 2*lam*h(p,q)*h(p,q)"
        " - 2*R(i,p,j,q)*h(i,j)*h(p,q)")
    ok, witness = dv.expr_equal(e1, e2, cs=CS_TT, mod_div=True)
    assert ok, witness.pretty()
