"""The identity suite: lemmas, Kahler chain, Hessian assembly."""

import pytest
import sympy as sp

from curvhess import expr as ex
from curvhess import variation as va
from curvhess.divergence import expr_equal
from curvhess.parser import parse_expr
from curvhess.rules import ConstraintSet, normalize
from curvhess.spaceform import SpaceFormModel


def test_pi_symmetry_and_compatibility():
    pi = va.connection_variation()
    swapped = pi.substitute_indices({"x": "y", "y": "x"})
    assert normalize(pi - swapped).is_zero()
    assert va.pi_metric_compatibility().ok


def test_pi_conformal_constant():
    """h = g (parallel conformal factor) gives Pi = 0: every term carries Dh."""
    pi = va.connection_variation()
    assert all(any(f.q >= 1 for f in t.factors) for t in pi.terms)


def test_linearized_curvature_h_zero():
    rp = va.linearized_curvature()
    assert all(any(f.kind == "h" for f in t.factors) for t in rp.terms)


def test_linearized_curvature_flat_is_half_q():
    model = SpaceFormModel(m=2, c=0)
    rp = normalize(va.linearized_curvature(), model=model)
    half_q = normalize(va.q_tensor() * sp.Rational(1, 2), model=model)
    assert normalize(rp - half_q).is_zero()


def test_lemma1():
    assert va.verify_lemma1().ok


def test_lemma1_falsifiability():
    v = va.verify_lemma1(perturb=sp.Rational(1, 2))
    assert not v.ok and not v.witness.is_zero()


def test_lemma1_weakened_gauge_witness():
    """Dropping delta_g h = 0 leaves divergence patterns in the witness."""
    cs = ConstraintSet(trace_free=True, symmetric_space=True, name="weak")
    v = va.verify_lemma1(cs=cs)
    assert not v.ok
    has_div_edge = any(
        any(d in f.vslots for d in f.dslots)
        for t in v.witness.terms for f in t.factors if f.kind == "h")
    assert has_div_edge


def test_lemma2():
    assert va.verify_lemma2().ok
    assert not va.verify_lemma2(perturb=1).ok


def test_lemma2_space_form_specialization():
    lhs = va.delta_d_of_dD()
    rhs = parse_expr("-2*D_i(D_i(h(p,q))) + (2*lam - 4*c)*h(p,q)")
    ok, witness = expr_equal(lhs, rhs, cs=ConstraintSet.kaehler_tt(),
                             model=SpaceFormModel())
    assert ok, witness.pretty()


def test_lemma3():
    assert va.verify_lemma3().ok


def test_lemma3_falsifiability():
    v = va.verify_lemma3(perturb=1)
    assert not v.ok and not v.witness.is_zero()


def test_w_pairing_vanishes_flat():
    model = SpaceFormModel(m=2, c=0)
    wp = normalize(va.w_pairing(), model=model)
    assert wp.is_zero()


def test_k2():
    assert va.verify_k2().ok


def test_k2_needs_closedness():
    """Without the closedness instances the K2 residual is nonzero."""
    from curvhess import divergence as dvg
    model = SpaceFormModel()
    cs = ConstraintSet.kaehler_tt()
    lhs = -1 * va._feed_J(va.connection_variation(), "z", "u")
    rhs = va._feed_J(va.connection_variation(), "y", "u")
    residual = normalize(lhs - rhs, cs=cs, model=model)
    assert not residual.is_zero()


def test_s_pairing_chain():
    d = va.s_pairing()
    assert sp.expand(d.poly("norm_Dh") - ex.c) == 0
    assert d.poly("norm_h") == 0
    assert d.poly("norm_lap") == 0 and d.poly("pair_lap_h") == 0
    assert not d.extra_classes


def test_ricci_of_q():
    rq = va.ricci_of_q()
    target = parse_expr("-D_i(D_i(h(p,q))) + 2*m*c*h(p,q)")
    ok, witness = expr_equal(rq, target, cs=ConstraintSet.kaehler_tt(),
                             model=SpaceFormModel())
    assert ok, witness.pretty()


def test_rcheck_prime_pairing():
    d = va.rcheck_prime_pairing()
    assert sp.expand(d.poly("norm_Dh") - 2 * ex.c) == 0
    assert sp.expand(d.poly("norm_h") + 8 * ex.c ** 2 * (ex.m + 2)) == 0


def test_hessian_integrand_classes():
    d = va.hessian_integrand()
    assert not d.extra_classes
    assert sp.expand(d.poly("norm_lap") - 1) == 0
    assert sp.expand(d.poly("norm_Dh") - 2 * ex.c * (ex.m - 3)) == 0
    assert sp.expand(d.poly("norm_h") - 16 * ex.c ** 2 * (ex.m + 2)) == 0
    assert d.poly("pair_lap_h") == 0


def test_hessian_flat_limit():
    d = va.hessian_integrand()
    for name, want in (("norm_lap", 1), ("norm_Dh", 0), ("norm_h", 0)):
        assert sp.expand(d.poly(name).subs(ex.c, 0) - want) == 0


def test_eq21_consistency_sign():
    out = va.eq21_consistency()
    assert out["epsilon"] == -1


def test_rring_j_invariance_requirement():
    full = va.rring_reduction(ConstraintSet.kaehler_tt())
    assert normalize(full - parse_expr("2*c*h(p,q)"),
                     cs=ConstraintSet.kaehler_tt()).is_zero()
    partial = va.rring_reduction(ConstraintSet.trace_only_kaehler())
    assert not normalize(partial - parse_expr("2*c*h(p,q)"),
                         cs=ConstraintSet.trace_only_kaehler()).is_zero()
