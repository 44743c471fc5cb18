"""Flat-torus spectral harness."""

import numpy as np
import pytest

from curvhess import torus as to

M1 = to.FlatTorusModel(m=1, N=3)
M2 = to.FlatTorusModel(m=2, N=2)


def test_model_validation():
    with pytest.raises(ValueError):
        to.FlatTorusModel(m=0)
    with pytest.raises(ValueError):
        to.FlatTorusModel(m=1, N=0)


def test_reality_and_parseval():
    f = to.FourierTensorField.random(M1, 1, seed=2)
    assert abs(f.norm_sq() - f.grid_norm_sq()) <= 1e-10 * max(f.norm_sq(), 1)


def test_laplacian_symbol():
    f = to.FourierTensorField(M1, 0)
    mode = (M1.N + 1, M1.N)          # xi = (1, 0)
    f.coeffs[mode] = 1.0
    f = f.realified()
    lap = to.laplace(f)
    sym = (2 * np.pi) ** 2
    assert abs(lap.coeffs[mode] - sym * f.coeffs[mode]) <= 1e-12


def test_trace_of_metric_field():
    g = to.FourierTensorField(M2, 2)
    zero = (M2.N,) * M2.n
    g.coeffs[zero] = np.eye(M2.n)
    assert abs(to.trace(g).coeffs[zero] - 2 * M2.m) <= 1e-14


def test_rank_guards():
    w = to.FourierTensorField.random(M1, 1, seed=0)
    with pytest.raises(ValueError):
        to.delta_g(w)
    with pytest.raises(ValueError):
        to.apply_operator("deltaD", w)
    with pytest.raises(ValueError):
        to.apply_operator("nope", w)


def test_adjointness_pairs():
    for model in (M1, M2):
        adj = to.adjointness_checks(model, seed=4)
        assert adj["delta_pair"] <= 1e-10
        assert adj["dD_pair"] <= 1e-10
        assert adj["dD_pair_sign"] == 1


def test_one_form_identities_random():
    for model in (M1, M2):
        w = to.FourierTensorField.random(model, 1, seed=5)
        ids = to.one_form_identities(w)
        assert ids["eq26"] <= 1e-10
        assert ids["eq27"] <= 1e-10
        assert not ids["holomorphic"] and not ids["parallel"]


def test_one_form_identities_parallel():
    w = to.constant_part(to.FourierTensorField.random(M1, 1, seed=6))
    ids = to.one_form_identities(w)
    assert ids["eq25_residual"] <= 1e-10
    assert ids["holomorphic"] and ids["parallel"]


def test_single_mode_not_holomorphic():
    w = to.FourierTensorField(M1, 1)
    w.coeffs[(M1.N + 1, M1.N)] = np.array([1.0, 0.5])
    w = w.realified()
    ids = to.one_form_identities(w)
    assert not ids["holomorphic"]


def test_kaehler_potential_variation():
    for model in (M1, M2):
        phi = to.FourierTensorField.random(model, 0, seed=7)
        h = to.kaehler_variation_from_potential(phi)
        assert to.eq_2_4_residual(h) <= 1e-10
        assert to.k1_residual(h) <= 1e-12
    # constant potential gives h = 0
    phi0 = to.FourierTensorField(M1, 0)
    phi0.coeffs[(M1.N,) * M1.n] = 3.0
    assert to.kaehler_variation_from_potential(phi0).norm() == 0.0


def test_tt_projection_idempotent():
    h = to.FourierTensorField.random(M2, 2, seed=8)
    p1 = to.tt_j_project(h, include_j=False)
    p2 = to.tt_j_project(p1, include_j=False)
    assert (p1 - p2).norm() <= 1e-12 * max(p1.norm(), 1)
    res = to.tt_residuals(p1, include_j=False)
    assert max(res.values()) <= 1e-12


def test_j_invariant_projection_vanishes_m_le_2():
    for model in (M1, M2):
        h = to.FourierTensorField.random(model, 2, seed=9)
        hp = to.tt_j_project(h, include_j=True)
        assert hp.norm() <= 1e-10 * h.norm()


def test_j_invariant_projection_m3():
    m3 = to.FlatTorusModel(m=3, N=1)
    h = to.tt_j_project(to.FourierTensorField.random(m3, 2, seed=10))
    assert h.norm() > 1.0
    res = to.tt_residuals(h)
    assert max(res.values()) <= 1e-12


def test_flat_hessian_dual_assembly():
    h = to.tt_j_project(to.FourierTensorField.random(M2, 2, seed=11),
                        include_j=False)
    lhs, rhs = to.hessian_flat_check(h)
    assert abs(lhs - rhs) <= 1e-9 * abs(rhs)
    m3 = to.FlatTorusModel(m=3, N=1)
    h3 = to.tt_j_project(to.FourierTensorField.random(m3, 2, seed=12))
    l3, r3 = to.hessian_flat_check(h3)
    assert abs(l3 - r3) <= 1e-9 * abs(r3)


def test_flat_hessian_single_mode():
    h = to.FourierTensorField(M2, 2)
    xi = (1, 0, -1, 2)
    mode = tuple(k + M2.N for k in xi)
    h.coeffs[mode][0, 1] = h.coeffs[mode][1, 0] = 1.0
    h = to.tt_j_project(h.realified(), include_j=False)
    lhs, rhs = to.hessian_flat_check(h)
    sym = (2 * np.pi) ** 2 * sum(k * k for k in xi)
    assert abs(rhs - 2 * sym ** 2 * h.norm_sq()) <= 1e-9 * abs(rhs)
    assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


def test_zero_field_hessian():
    h = to.FourierTensorField(M2, 2)
    lhs, rhs = to.hessian_flat_check(h)
    assert lhs == 0.0 and rhs == 0.0


def test_json_roundtrip():
    h = to.FourierTensorField.random(M1, 2, seed=13)
    text = h.to_json()
    back = to.FourierTensorField.from_json(text)
    assert (h - back).norm() <= 1e-14
    assert back.to_json() == text
