"""Stability certificate: coefficients, k, criticality, comparison table."""

import numpy as np
import pytest
import sympy as sp

from curvhess import certificate as ce
from curvhess import expr as ex
from curvhess import variation as va
from curvhess.spaceform import SpaceFormModel

_HD = va.hessian_integrand()
_Q = ce.extract_coeffs(_HD)


def test_extract_coeffs():
    assert sp.expand(_Q.a - 1) == 0
    assert sp.expand(_Q.b - 2 * ex.c * (ex.m - 3)) == 0
    assert sp.expand(_Q.d - 16 * ex.c ** 2 * (ex.m + 2)) == 0


def test_extract_coeffs_guards():
    bad = va.DerivedCoefficient("x", None, {"norm_lap": sp.Integer(1),
                                            "norm_Dh": sp.Integer(0),
                                            "norm_h": sp.Integer(0),
                                            "pair_lap_h": sp.Integer(1)}, [])
    with pytest.raises(ce.CoefficientError):
        ce.extract_coeffs(bad)


def test_prefactor():
    # p |R|^(p-2); flat case uses 0^0 = 1
    assert ce.prefactor(2, 1, 2) == 2
    assert ce.prefactor(2, 0, 2) == 2
    v = ce.prefactor(2, -1, 3)
    assert sp.simplify(v - 3 * sp.sqrt(192)) == 0


def test_stability_constants_positive_grid():
    for mv in range(1, 6):
        for cv in (1, -1, 2, -2):
            for pv in (2, 3, 4):
                sc = ce.stability_constant(_Q, cv, mv, pv)
                assert sc.k > 0
                assert sc.attainment in ("boundary", "interior")


def test_stability_attainment_regimes():
    # b >= 0 (boundary) for c > 0, m >= 3; interior otherwise
    assert ce.stability_constant(_Q, 1, 4, 2).attainment == "boundary"
    assert ce.stability_constant(_Q, 1, 1, 2).attainment == "interior"
    assert ce.stability_constant(_Q, -1, 4, 2).attainment == "interior"


def test_stability_exact_values():
    sc = ce.stability_constant(_Q, 1, 1, 2)
    # pref = 2, b = -4c, d = 48 c^2: interior k = 2 (48 - 4) = 88
    assert sc.k == 88
    sc2 = ce.stability_constant(_Q, -1, 2, 3)
    assert sp.simplify(sc2.k - 1536 * sp.sqrt(3)) == 0


def test_scaling_law_exact():
    for pv in (2, 3, 4):
        k1 = ce.stability_constant(_Q, 1, 2, pv).k
        k2 = ce.stability_constant(_Q, 2, 2, pv).k
        assert sp.simplify(k2 / k1 - 2 ** pv) == 0
        assert abs(float(k2) / float(k1) - 2.0 ** pv) <= 1e-10 * 2.0 ** pv


def test_cone_lower_bound_random_triples():
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 10, 10_000)
    t = rng.uniform(0.01, 10, 10_000)
    s = np.sqrt(X * t) * rng.uniform(0, 1, 10_000)
    triples = np.stack([X, s, t], axis=1)
    for (mv, cv, pv) in ((1, 1, 2), (2, -1, 3), (5, 2, 4)):
        assert ce.hessian_lower_bound_holds(_Q, cv, mv, pv, triples)


def test_nonpositive_k_raises():
    badq = ce.QuadraticFormCoeffs(sp.Integer(1), sp.Integer(0),
                                  -sp.Integer(1) * ex.c ** 2)
    with pytest.raises(ce.StabilityError):
        ce.stability_constant(badq, 1, 2, 2)


def test_criticality_symbolic_and_numeric():
    rep = ce.criticality_check()
    assert rep.verdict_zero
    assert [str(t) for t in rep.cancellation] == \
        ["-p/(2*m)", "1/2", "p/(2*m)", "-1/2"]
    for mv in (1, 3, 5):
        for cv in (1, -2):
            for pv in (2, 3, 4):
                assert ce.criticality_check(SpaceFormModel(m=mv, c=cv),
                                            pv).verdict_zero
    assert ce.criticality_check(SpaceFormModel(m=2, c=0), 2).verdict_zero


def test_paper_comparison_rows():
    rows = {r.name: r for r in ce.paper_comparison({"hessian": _HD})}
    assert rows["einstein_constant"].match
    assert rows["curvature_norm_sq"].match
    assert rows["hessian_a"].match
    assert rows["hessian_b"].match
    assert rows["s_pairing_Dh"].match
    assert rows["rcheck_prime_Dh"].match
    for name in ("s_pairing_h", "r_q_h", "rcheck_prime_h", "hessian_d",
                 "hessian_d_resummed", "square_residual"):
        assert not rows[name].match
        assert rows[name].expected_mismatch


def test_reported_d_candidates_coincide_at_m1():
    from curvhess.reference import REPORTED
    a = REPORTED["hessian_d"].subs(ex.m, 1)
    b = REPORTED["hessian_d_resummed"].subs(ex.m, 1)
    assert sp.expand(a - b) == 0 and a == 36 * ex.c ** 2
    derived = _Q.d.subs(ex.m, 1)
    assert sp.expand(derived - 48 * ex.c ** 2) == 0
