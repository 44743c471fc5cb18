"""Mini-language grammar, spec examples, and error reporting."""

import pytest

from curvhess import expr as ex
from curvhess.parser import ParseError, parse_expr
from curvhess.rules import ConstraintSet, normalize


def test_trace_example():
    e = parse_expr("g(a,b)*h(a,b)")
    assert e.rank == 0
    assert len(e.terms) == 1


def test_rcheck_example():
    e = parse_expr("R(p,i,j,k)*R(q,i,j,k)")
    assert e.frees == ("p", "q")


def test_free_order_first_appearance():
    e = parse_expr("h(q,p) + g(q,p)")
    assert e.frees == ("q", "p")


def test_arity_error():
    with pytest.raises(ParseError, match="takes 2 indices"):
        parse_expr("h(a,b,e)")


def test_triple_index_error():
    with pytest.raises(ex.ExprError, match="3 times"):
        parse_expr("h(a,a)*w(a)")


def test_rank_mismatch_across_summands():
    with pytest.raises(ex.ExprError, match="rank mismatch"):
        parse_expr("h(a,b) + w(a)")


def test_syntax_error_position():
    with pytest.raises(ParseError, match="position"):
        parse_expr("h(a,")
    with pytest.raises(ParseError):
        parse_expr("q(a,b)")
    with pytest.raises(ParseError):
        parse_expr("h(ab)")


def test_rationals_and_scalars():
    e = parse_expr("3/2*c*h(a,b) - m*h(a,b)")
    coeffs = sorted(str(t.coeff) for t in e.terms)
    assert coeffs == ["-m", "3*c/2"]


def test_derivative_wrapper_leibniz():
    e = parse_expr("D_a(h(b,e)*h(b,e))")
    assert e.rank == 1
    assert len(e.terms) == 2


def test_derivative_divergence_pattern():
    # the outer D contracts with the inner free index
    e = parse_expr("D_a(h(b,e)*D_a(h(b,e)))")
    assert e.rank == 0
    assert normalize(e, cs=ConstraintSet.none()).terms


def test_parenthesized_sums_distribute():
    e = parse_expr("(h(a,b) + g(a,b))*w(b)")
    assert e.rank == 1 and len(e.terms) == 2


def test_unary_minus():
    e = parse_expr("-h(a,b) + h(a,b)")
    assert normalize(e).is_zero()


def test_derivatives_do_not_hit_background():
    # DR = Dg = DJ = 0: derivative of a pure background product is empty
    assert parse_expr("D_a(R(a,b,x,y))").is_zero()
    assert parse_expr("D_a(g(a,b))").is_zero()
