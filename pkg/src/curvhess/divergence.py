"""Equality of scalar integrands modulo total divergences.

A scalar monomial basis is built from the expression together with the
expansions of all candidate divergences D_a(V^a), where V runs over the
rank-1 monomials of the matching sector (same h-degree, weight one less;
weight = jet count + 2 * curvature count + 2 * curvature-scalar degree,
which every rewrite preserves).  On a symbolic symmetric-space background
the first Bianchi identity contributes extra linear relations.  The
quotient is then decided by exact sparse Gaussian elimination; the residual
is the normal form, with the preferred representatives |D*Dh|^2, |Dh|^2,
<D*Dh, h>, |h|^2 protected so that quadratic-form coefficients can be read
off the result.

Weight homogeneity lets the curvature scalar (c on a space form, lam on a
symbolic symmetric space) be scaled out of the linear algebra: setting it
to 1 is an invertible diagonal rescaling of the columns, so row-space
membership is unchanged, and each monomial's scalar power is recovered
afterwards from its jet and curvature counts.  Matrix entries then live in
QQ(m); the per-sector elimination is cached across calls.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import sympy as sp

from . import expr as ex
from . import rules
from .parser import parse_expr

DEFAULT_BASIS_CAP = 10_000

_FIELD = sp.QQ.frac_field(ex.m)

_sector_cache = {}


def clear_sector_cache():
    _sector_cache.clear()


class BasisOverflow(ex.ExprError):
    pass


def _grading(factors):
    jets = sum(f.q for f in factors)
    nr = sum(1 for f in factors if f.kind == "R")
    return jets, nr


def monomial_weight(mono: ex.Monomial) -> int:
    jets, nr = _grading(mono.factors)
    poly = sp.Poly(mono.coeff, ex.c, ex.lam)
    return jets + 2 * (nr + sp.degree(poly, ex.c) + sp.degree(poly, ex.lam))


def h_degree(mono: ex.Monomial) -> int:
    return sum(1 for f in mono.factors if f.kind == "h")


# ---------------------------------------------------------------------------
# generator enumeration
# ---------------------------------------------------------------------------

def _pairings(slots):
    if not slots:
        yield []
        return
    a = slots[0]
    for k in range(1, len(slots)):
        rest = slots[1:k] + slots[k + 1:]
        for sub in _pairings(rest):
            yield [(a, slots[k])] + sub


def _jet_multisets(total, max_jet):
    out = []
    for q1 in range(min(total, max_jet), -1, -1):
        q2 = total - q1
        if q2 <= q1 and q2 <= max_jet:
            out.append((q1, q2))
    return out


def _dies_or_reduces(mono, cs):
    """Candidates whose gauge edges would be rewritten away reduce to
    combinations of cleaner candidates; skip them during enumeration."""
    for f in mono.factors:
        if f.kind == "h":
            if cs.trace_free and f.vslots[0] == f.vslots[1]:
                return True
            if cs.div_free and any(d in f.vslots for d in f.dslots):
                return True
        if f.kind == "R":
            if len(set(f.vslots)) < 4:
                return True
    return False


def enumerate_generators(weight: int, cs: rules.ConstraintSet, model,
                         max_factor_jet: int = 3, free_letter: str = "a"):
    """Canonical rank-1 monomials V of the h^2 sector at the given weight.

    Jet budgets weight, weight-2, ... are all covered (lower budgets are
    curvature-scalar multiples spanning the same relations over the
    coefficient field).  In symbolic mode one explicit curvature factor is
    allowed.  Candidates carrying an intra-factor gauge edge are skipped:
    the gauge rules rewrite them into the cleaner candidates that the
    enumeration reaches directly.
    """
    decorate = cs.j_invariant
    symbolic_r = model is None
    seen = {}
    for budget in range(weight, -1, -2):
        configs = []
        for r in (0, 1) if symbolic_r else (0,):
            jb = budget - 2 * r
            if jb < 0:
                continue
            for q1, q2 in _jet_multisets(jb, min(max_factor_jet, ex.MAX_JET)):
                configs.append((q1, q2, r))
        for q1, q2, r in configs:
            base = [("R", 0)] * r + [("h", q1), ("h", q2)]
            nslots = [q + (2 if kind == "h" else 4) for kind, q in base]
            total = sum(nslots)
            for free_slot in range(total):
                rest = [s for s in range(total) if s != free_slot]
                for pairing in _pairings(rest):
                    deco_space = itertools.product((0, 1),
                                                   repeat=len(pairing) + 1) \
                        if decorate else [(0,) * (len(pairing) + 1)]
                    for decos in deco_space:
                        assign = {free_slot: (free_letter, decos[-1])}
                        for k, (s1, s2) in enumerate(pairing):
                            assign[s1] = (100 + k, decos[k])
                            assign[s2] = (100 + k, 0)
                        factors = []
                        pos = 0
                        for (kind, q), ns in zip(base, nslots):
                            ids = [assign[pos + t][0] for t in range(ns)]
                            bits = [assign[pos + t][1] for t in range(ns)]
                            pos += ns
                            nd = q if kind == "h" else 0
                            factors.append(ex.Factor(
                                kind, tuple(ids[:nd]), tuple(ids[nd:]),
                                tuple(bits[:nd]), tuple(bits[nd:])))
                        mono = ex.Monomial(sp.Integer(1), factors)
                        if _dies_or_reduces(mono, cs):
                            continue
                        v = rules.normalize(
                            ex.TensorExpr((free_letter,), [mono]),
                            cs=cs, model=model)
                        for t in v.terms:
                            got = ex.canon_monomial(t, (free_letter,),
                                                    allow_flip=cs.j_invariant)
                            if got is None:
                                continue
                            key, _, rep = got
                            if key not in seen:
                                seen[key] = ex.TensorExpr(
                                    (free_letter,),
                                    [ex.Monomial(sp.Integer(1), rep)],
                                    validate=False)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# vectorization with the curvature scalar scaled out
# ---------------------------------------------------------------------------

def _vectorize(e: ex.TensorExpr, cs, frees=()):
    """{canonical key: (coeff, rep)} with the curvature scalars set to 1
    (recoverable from the weight grading)."""
    out = {}
    for t in e.terms:
        got = ex.canon_monomial(t, tuple(frees), allow_flip=cs.j_invariant)
        if got is None:
            continue
        key, sign, rep = got
        coeff = sign * t.coeff.subs({ex.c: 1, ex.lam: 1})
        if key in out:
            out[key] = (out[key][0] + coeff, rep)
        else:
            out[key] = (coeff, rep)
    return {k: (sp.expand(v[0]), v[1]) for k, v in out.items()
            if sp.expand(v[0]) != 0}


def _restore_power(coeff, rep, weight, scalar):
    jets, nr = _grading(rep)
    excess = weight - jets - 2 * nr
    if excess < 0 or excess % 2:
        raise ex.ExprError("weight grading violated during restoration")
    return sp.expand(coeff * scalar ** (excess // 2))


def _scalar_for(cs, model):
    if model is not None:
        scalar = sp.sympify(model.c)
    elif cs.symmetric_space:
        scalar = ex.lam
    else:
        scalar = sp.Integer(1)
    if not getattr(scalar, "free_symbols", set()):
        scalar = sp.Integer(1)
    return scalar


# ---------------------------------------------------------------------------
# sparse exact elimination over QQ(m)
# ---------------------------------------------------------------------------

class _Solver:
    """Sparse row echelon with pivot choice following a caller-supplied
    column order and combination tracking for decompositions."""

    def __init__(self, column_rank):
        self.column_rank = column_rank
        self.pivot_rows = {}
        self.n_rows = 0

    @staticmethod
    def _to_field(x):
        return _FIELD.from_sympy(sp.sympify(x))

    def add_row(self, sym_row, tag):
        row = {k: self._to_field(v) for k, v in sym_row.items()}
        combo = {tag: _FIELD.one}
        while row:
            pk = min(row, key=self.column_rank)
            if pk in self.pivot_rows:
                prow, pcombo = self.pivot_rows[pk]
                factor = row[pk] / prow[pk]
                for k, v in prow.items():
                    nv = row.get(k, _FIELD.zero) - factor * v
                    if nv:
                        row[k] = nv
                    elif k in row:
                        del row[k]
                for k, v in pcombo.items():
                    combo[k] = combo.get(k, _FIELD.zero) - factor * v
            else:
                self.pivot_rows[pk] = (row, combo)
                self.n_rows += 1
                return True
        return False

    def reduce(self, sym_row):
        """(residual {key: sympy}, multipliers {tag: sympy})."""
        row = {k: self._to_field(v) for k, v in sym_row.items()}
        mults = {}
        residual = {}
        while row:
            pk = min(row, key=self.column_rank)
            if pk in self.pivot_rows:
                prow, pcombo = self.pivot_rows[pk]
                factor = row[pk] / prow[pk]
                for k, v in prow.items():
                    nv = row.get(k, _FIELD.zero) - factor * v
                    if nv:
                        row[k] = nv
                    elif k in row:
                        del row[k]
                for k, v in pcombo.items():
                    mults[k] = mults.get(k, _FIELD.zero) + factor * v
            else:
                residual[pk] = row.pop(pk)
        return ({k: sp.expand(_FIELD.to_sympy(v)) for k, v in residual.items()},
                {k: sp.cancel(_FIELD.to_sympy(v)) for k, v in mults.items()})


# ---------------------------------------------------------------------------
# relations and sectors
# ---------------------------------------------------------------------------

def bianchi_relations(reps, cs):
    """First-Bianchi instances R(a,b,x,y)+R(b,x,a,y)+R(x,a,b,y) = 0 applied
    to every curvature factor of the supplied canonical monomials."""
    rels = []
    seen = set()
    for rep in reps:
        for i, f in enumerate(rep):
            if f.kind != "R":
                continue
            terms = []
            a, b, x, y = f.vslots
            ja, jb, jx, jy = f.jv
            for (s1, b1), (s2, b2), (s3, b3) in (
                    ((a, ja), (b, jb), (x, jx)),
                    ((b, jb), (x, jx), (a, ja)),
                    ((x, jx), (a, ja), (b, jb))):
                nf = ex.Factor("R", (), (s1, s2, s3, y), (), (b1, b2, b3, jy))
                terms.append(ex.Monomial(sp.Integer(1),
                                         rep[:i] + (nf,) + rep[i + 1:]))
            rel = rules.normalize(ex.TensorExpr((), terms, validate=False),
                                  cs=cs)
            if rel.is_zero():
                continue
            key = tuple(sorted(_vectorize(rel, cs)))
            if key not in seen:
                seen.add(key)
                rels.append(rel)
    return rels


def _reference_keys(cs, model):
    refs = {}
    for name, text in (
            ("pair_lap_h", "D_a(D_a(h(p,q)))*h(p,q)"),
            ("norm_Dh", "D_a(h(p,q))*D_a(h(p,q))"),
            ("norm_h", "h(p,q)*h(p,q)"),
            ("norm_lap", "D_a(D_a(h(p,q)))*D_b(D_b(h(p,q)))")):
        e = rules.normalize(parse_expr(text), cs=cs, model=model)
        if len(e.terms) == 1:
            got = ex.canon_monomial(e.terms[0], (), allow_flip=cs.j_invariant)
            refs[got[0]] = name
    return refs


_CLASS_ORDER = {"pair_lap_h": 1, "norm_Dh": 2, "norm_h": 3, "norm_lap": 4}


def _make_column_rank(universe, refs):
    def rank(key):
        name = refs.get(key)
        if name is not None:
            return (1, _CLASS_ORDER[name], key)
        info = universe.get(key)
        maxjet = max((f.q for f in info[1]), default=0) if info else 0
        return (0, -maxjet, key)
    return rank


@dataclass
class _Sector:
    solver: _Solver
    rel_sources: list
    rel_weights: list
    universe: dict
    refs: dict


def _build_sector(cs, model, weight, max_factor_jet, basis_cap):
    gens = enumerate_generators(weight - 1, cs, model,
                                max_factor_jet=max_factor_jet)
    rel_vecs, rel_sources, rel_weights = [], [], []
    universe = {}
    for v in gens:
        dexp = rules.normalize(rules.divergence(v, "a"), cs=cs, model=model)
        if dexp.is_zero():
            continue
        vec = _vectorize(dexp, cs)
        rel_vecs.append(vec)
        rel_sources.append(("div", v))
        rel_weights.append(monomial_weight(v.terms[0]) + 1)
        for k, val in vec.items():
            universe.setdefault(k, val)
    if cs.symmetric_space and model is None:
        for rel in bianchi_relations([v[1] for v in universe.values()], cs):
            vec = _vectorize(rel, cs)
            rel_vecs.append(vec)
            rel_sources.append(("bianchi", rel))
            rel_weights.append(weight)
            for k, val in vec.items():
                universe.setdefault(k, val)
    if len(universe) > basis_cap:
        raise BasisOverflow(
            f"monomial basis {len(universe)} exceeds cap {basis_cap}")
    refs = _reference_keys(cs, model)
    solver = _Solver(_make_column_rank(universe, refs))
    for ri, vec in enumerate(rel_vecs):
        solver.add_row({k: v for k, (v, _) in vec.items()}, ri)
    return _Sector(solver, rel_sources, rel_weights, universe, refs)


@dataclass
class ReductionResult:
    normal_form: ex.TensorExpr
    residual_vec: dict
    universe: list
    n_relations: int
    decomposition: list = field(default_factory=list)

    def is_zero(self):
        return self.normal_form.is_zero()


def reduce_mod_divergence(e: ex.TensorExpr, cs=None, model=None,
                          max_factor_jet=None, basis_cap=DEFAULT_BASIS_CAP,
                          extra_relations=(), want_decomposition=False):
    """Normal form of a rank-0 integrand in the quotient by total
    divergences.  Output 0 exactly when e is a total divergence within the
    generated sector.  ``extra_relations`` adds pointwise relations (for
    example Kahler closedness instances) to the span."""
    cs = cs or rules.ConstraintSet.none()
    if e.rank != 0:
        raise ex.ExprError("divergence reduction needs a scalar integrand")
    nf0 = rules.normalize(e, cs=cs, model=model)
    if nf0.is_zero():
        return ReductionResult(nf0, {}, [], 0)
    hdegs = {h_degree(t) for t in nf0.terms}
    weights = {monomial_weight(t) for t in nf0.terms}
    if len(hdegs) != 1 or len(weights) != 1:
        raise ex.ExprError(f"mixed sector: h-degrees {hdegs}, weights {weights}")
    weight = weights.pop()
    if max_factor_jet is None:
        max_factor_jet = max(max((f.q for f in t.factors), default=0)
                             for t in nf0.terms)
    scalar = _scalar_for(cs, model)
    ckey = ((cs.trace_free, cs.div_free, cs.j_invariant, cs.symmetric_space),
            None if model is None else sp.sstr(sp.sympify(model.c)),
            weight, max_factor_jet)
    sector = _sector_cache.get(ckey)
    if sector is None:
        sector = _build_sector(cs, model, weight, max_factor_jet, basis_cap)
        _sector_cache[ckey] = sector

    evec = _vectorize(nf0, cs)
    universe = dict(sector.universe)
    for k, val in evec.items():
        universe.setdefault(k, val)
    if len(universe) > basis_cap:
        raise BasisOverflow(
            f"monomial basis {len(universe)} exceeds cap {basis_cap}")

    # secondary relations: caller-supplied, plus Bianchi instances of any
    # expression monomials outside the cached universe
    secondary = []
    for rel in extra_relations:
        rn = rules.normalize(rel, cs=cs, model=model)
        if not rn.is_zero():
            secondary.append(("given", rn))
    if cs.symmetric_space and model is None:
        fresh = [evec[k][1] for k in evec if k not in sector.universe]
        for rel in bianchi_relations(fresh, cs):
            secondary.append(("bianchi", rel))

    rank = _make_column_rank(universe, sector.refs)
    solver = sector.solver
    sec_solver = None
    if secondary:
        sec_solver = _Solver(rank)
        for si, (tag, rel) in enumerate(secondary):
            vec = _vectorize(rel, cs)
            for k, val in vec.items():
                universe.setdefault(k, val)
            red, _ = solver.reduce({k: v for k, (v, _) in vec.items()})
            if red:
                sec_solver.add_row(red, ("sec", si))

    residual, mults = solver.reduce({k: v for k, (v, _) in evec.items()})
    sec_mults = {}
    if sec_solver is not None and residual:
        residual, sec_mults = sec_solver.reduce(residual)

    terms = []
    for k in sorted(residual, key=rank):
        coeff = _restore_power(residual[k], universe[k][1], weight, scalar)
        if coeff != 0:
            terms.append(ex.Monomial(coeff, universe[k][1]))
    nf = ex.TensorExpr((), terms, validate=False)

    decomposition = []
    if want_decomposition:
        for ri, mult in mults.items():
            if mult == 0:
                continue
            tag, src = sector.rel_sources[ri]
            mult = sp.cancel(
                mult * scalar ** ((weight - sector.rel_weights[ri]) // 2))
            decomposition.append((mult, tag, src))
        for (_, si), mult in sec_mults.items():
            if mult != 0:
                tag, rel = secondary[si]
                decomposition.append((sp.cancel(mult), tag, rel))
    nrel = solver.n_rows + (sec_solver.n_rows if sec_solver else 0)
    return ReductionResult(nf, residual, sorted(universe, key=rank), nrel,
                           decomposition)


def reduce_against_relations(e: ex.TensorExpr, relations, cs=None, model=None):
    """Residual of e against the span of pointwise relation expressions."""
    cs = cs or rules.ConstraintSet.none()
    nf0 = rules.normalize(e, cs=cs, model=model)
    if nf0.is_zero():
        return nf0
    solver = _Solver(lambda k: k)
    universe = {}
    for rel in relations:
        rn = rules.normalize(rel, cs=cs, model=model)
        if rn.is_zero():
            continue
        vec = _vectorize(rn, cs, frees=nf0.frees)
        for k, val in vec.items():
            universe.setdefault(k, val)
        solver.add_row({k: v for k, (v, _) in vec.items()}, id(rel))
    evec = _vectorize(nf0, cs, frees=nf0.frees)
    for k, val in evec.items():
        universe.setdefault(k, val)
    weightset = {monomial_weight(t) for t in nf0.terms}
    weight = weightset.pop() if len(weightset) == 1 else None
    scalar = _scalar_for(cs, model)
    residual, _ = solver.reduce({k: v for k, (v, _) in evec.items()})
    terms = []
    for k in sorted(residual):
        coeff = residual[k]
        if weight is not None:
            coeff = _restore_power(coeff, universe[k][1], weight, scalar)
        if coeff != 0:
            terms.append(ex.Monomial(coeff, universe[k][1]))
    return ex.TensorExpr(nf0.frees, terms, validate=False)


def expr_equal(e1: ex.TensorExpr, e2: ex.TensorExpr, cs=None, model=None,
               mod_div=False, **kw):
    """Equality verdict with witness: the witness is the canonical residual,
    zero exactly when the verdict is True."""
    if set(e1.frees) != set(e2.frees):
        raise ex.ExprError("rank mismatch between compared expressions")
    diff = e1 - e2
    if mod_div:
        if e1.rank != 0:
            raise ex.ExprError("mod-divergence comparison needs rank 0")
        res = reduce_mod_divergence(diff, cs=cs, model=model, **kw)
        return res.is_zero(), res.normal_form
    nf = rules.normalize(diff, cs=cs or rules.ConstraintSet.none(), model=model)
    return nf.is_zero(), nf
