"""Normalization pipeline for tensor expressions.

Rewrites applied here, in worklist order per monomial:

1. iterated (ordered) covariant derivatives are converted to fully
   symmetrized jets; each adjacent swap emits curvature correction terms via
   the Ricci identity, with a plus sign pinned by
   D^2_{a,b}T(..x..) - D^2_{b,a}T(..x..) = sum_s R(a,b,x_s,u) T(..u..),
   the form the component table makes consistent with lambda = 2(m+1)c > 0
   for c > 0;
2. metric factors are absorbed (expr.reduce_monomial);
3. on a space-form model every curvature factor is replaced by the closed
   form R(x,y,z,w) = c[g(x,z)g(y,w) - g(x,w)g(y,z) + g(x,Jz)g(y,Jw)
   - g(x,Jw)g(y,Jz) + 2 g(x,Jy)g(z,Jw)];
4. on a generic symmetric-space background a self-contracted curvature
   factor reduces through Ric = lam * g;
5. active gauge rules kill prolonged traces of h and reduce prolonged
   divergences of h (the slot pair is first cleaned of J decorations, which
   for a decorated value slot needs the J-invariance rule);
6. surviving monomials are canonically labeled and collected.

The background is always locally symmetric and Kahler: DR = 0, Dg = DJ = 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import sympy as sp

from . import expr as ex
from .expr import Factor, Monomial, TensorExpr


@dataclass(frozen=True)
class ConstraintSet:
    """Gauge and symmetry rewrite rules active during normalization.

    The Ricci commutation rule, DR = 0, DJ = 0 and the prolonged forms of
    every activated rule (e.g. the second-derivative J-invariance of h) are
    always implied.  ``closed_form`` marks the first-order Kahler condition
    d[h(J.,.)] = 0; it is not a rewrite, identities needing it reduce
    against its instances (see divergence.reduce_against_relations).
    """

    trace_free: bool = False
    div_free: bool = False
    j_invariant: bool = False
    closed_form: bool = False
    symmetric_space: bool = False
    name: str = "none"

    @staticmethod
    def none():
        return ConstraintSet()

    @staticmethod
    def tt_symmetric():
        """tr h = 0, delta_g h = 0 on a generic irreducible symmetric space."""
        return ConstraintSet(trace_free=True, div_free=True,
                             symmetric_space=True, name="tt_symmetric")

    @staticmethod
    def trace_only_kaehler():
        return ConstraintSet(trace_free=True, name="trace_only_kaehler")

    @staticmethod
    def kaehler_tt():
        """tr h = 0, delta_g h = 0, h(Jx,Jy) = h(x,y), on a space form."""
        return ConstraintSet(trace_free=True, div_free=True, j_invariant=True,
                             name="kaehler_tt")

    @staticmethod
    def kaehler_variation():
        """kaehler_tt plus closedness of the associated (1,1) form."""
        return ConstraintSet(trace_free=True, div_free=True, j_invariant=True,
                             closed_form=True, name="kaehler_variation")


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def deriv(e: TensorExpr, letter: str) -> TensorExpr:
    """Covariant derivative D_letter, by Leibniz; R, g, J are parallel.

    A symmetrized jet is first expanded into the average of its orderings,
    so the result is an honest iterated-derivative expression.
    """
    terms = []
    for t in e.terms:
        for i, f in enumerate(t.factors):
            if not ex._JETTABLE[f.kind]:
                continue
            if f.q >= 2 and not f.ordered:
                norm = sp.Rational(1, sp.factorial(f.q))
                for perm in itertools.permutations(range(f.q)):
                    lifted = Factor(
                        f.kind, (letter,) + tuple(f.dslots[j] for j in perm),
                        f.vslots, (0,) + tuple(f.jd[j] for j in perm), f.jv,
                        ordered=True)
                    terms.append(Monomial(t.coeff * norm,
                                          t.factors[:i] + (lifted,) + t.factors[i + 1:]))
            else:
                lifted = Factor(f.kind, (letter,) + f.dslots, f.vslots,
                                (0,) + f.jd, f.jv, ordered=f.q >= 1)
                terms.append(Monomial(t.coeff,
                                      t.factors[:i] + (lifted,) + t.factors[i + 1:]))
    if letter in e.frees:
        raise ex.ExprError(f"derivative index {letter!r} already free in operand")
    return TensorExpr(e.frees + (letter,), terms, validate=False)


def divergence(e: TensorExpr, letter: str) -> TensorExpr:
    """D_a V^a for a rank-1 expression with free slot ``letter``."""
    if letter not in e.frees:
        raise ex.ExprError(f"{letter!r} is not a free slot")
    d = deriv(e.substitute_indices({letter: letter}), "#tmp#")
    # contract the new derivative slot with the former free slot
    return d.substitute_indices({"#tmp#": letter})


# ---------------------------------------------------------------------------
# ordered -> symmetric jets
# ---------------------------------------------------------------------------

def _fresh_base(factors):
    used = [i for f in factors for i in f.slots() if isinstance(i, int)]
    return max(used, default=-1) + 1


def _ricci_correction(f: Factor, pos: int, fresh: int):
    """Fragments of O_{..a,b..} - O_{..b,a..} for the adjacent derivative
    swap at (pos, pos+1) of an ordered factor.

    Each fragment is (coeff, [R factor, jet factor]); the jet factor keeps
    the outer prefix (derivatives pass through the parallel R).
    """
    a, b = f.dslots[pos], f.dslots[pos + 1]
    ba, bb = f.jd[pos], f.jd[pos + 1]
    rest_d = f.dslots[:pos] + f.dslots[pos + 2:]
    rest_jd = f.jd[:pos] + f.jd[pos + 2:]
    out = []
    slots = list(rest_d) + list(f.vslots)
    bits = list(rest_jd) + list(f.jv)
    nd = len(rest_d)
    # the commutator acts on the derivative slots inside the swap point and
    # on all value slots; the outer prefix passes through
    targets = list(range(pos, nd)) + [nd + k for k in range(len(f.vslots))]
    for s in targets:
        u = fresh
        rf = Factor("R", (), (a, b, slots[s], u), (), (ba, bb, bits[s], 0))
        jslots = list(slots)
        jbits = list(bits)
        jslots[s] = u
        jbits[s] = 0
        jf = Factor(f.kind, tuple(jslots[:nd]), tuple(jslots[nd:]),
                    tuple(jbits[:nd]), tuple(jbits[nd:]), ordered=nd >= 2)
        out.append((sp.Integer(1), [rf, jf]))
    return out


def _swap_chain(start, target):
    """Adjacent transposition positions turning tuple start into target."""
    cur = list(start)
    steps = []
    for i in range(len(target)):
        j = cur.index(target[i])
        while j > i:
            cur[j - 1], cur[j] = cur[j], cur[j - 1]
            steps.append(j - 1)
            j -= 1
    return steps


_TOSYM_MEMO = {}


def _tosym_fragments(f: Factor, fresh: int):
    """Correction fragments Delta with O_f = S_f + Delta, for ordered f.

    Memoized on the factor pattern; the internal contraction index is a
    sentinel relabeled to the caller's fresh id."""
    key = f.key()
    hit = _TOSYM_MEMO.get(key)
    if hit is None:
        hit = _tosym_fragments_raw(f, -1)
        _TOSYM_MEMO[key] = hit
    out = []
    for coeff, fs in hit:
        out.append((coeff, [g.replace(
            dslots=tuple(fresh if i == -1 else i for i in g.dslots),
            vslots=tuple(fresh if i == -1 else i for i in g.vslots))
            for g in fs]))
    return out


def _tosym_fragments_raw(f: Factor, fresh: int):
    q = f.q
    norm = sp.Rational(1, sp.factorial(q))
    frags = []
    ids = tuple(range(q))
    for perm in itertools.permutations(ids):
        if perm == ids:
            continue
        # O_id - O_perm via a fixed adjacent-swap chain
        cur = f
        curperm = ids
        for pos in _swap_chain(curperm, perm):
            for coeff, fs in _ricci_correction(cur, pos, fresh):
                frags.append((norm * coeff, fs))
            newd = list(cur.dslots)
            newj = list(cur.jd)
            newd[pos], newd[pos + 1] = newd[pos + 1], newd[pos]
            newj[pos], newj[pos + 1] = newj[pos + 1], newj[pos]
            cur = cur.replace(dslots=tuple(newd), jd=tuple(newj))
    return frags


def _expand_ordered(mono: Monomial):
    """Replace the first ordered factor by its symmetrized jet + corrections."""
    for i, f in enumerate(mono.factors):
        if f.ordered:
            fresh = _fresh_base(mono.factors)
            out = [Monomial(mono.coeff,
                            mono.factors[:i] + (f.replace(ordered=False),) +
                            mono.factors[i + 1:])]
            for coeff, fs in _tosym_fragments(f, fresh):
                out.append(Monomial(mono.coeff * coeff,
                                    mono.factors[:i] + tuple(fs) + mono.factors[i + 1:]))
            return out
    return None


# ---------------------------------------------------------------------------
# curvature: closed-form substitution and Einstein contraction
# ---------------------------------------------------------------------------

# (sign, ((slot,slot,extraJ), (slot,slot,extraJ))) per closed-form term;
# extraJ decorates the second argument of the g link
_CLOSED_FORM = [
    (1, ((0, 2, 0), (1, 3, 0))),
    (-1, ((0, 3, 0), (1, 2, 0))),
    (1, ((0, 2, 1), (1, 3, 1))),
    (-1, ((0, 3, 1), (1, 2, 1))),
    (2, ((0, 1, 1), (2, 3, 1))),
]


def _substitute_R(mono: Monomial, cval):
    for i, f in enumerate(mono.factors):
        if f.kind == "R":
            out = []
            for sign, links in _CLOSED_FORM:
                gs = []
                for (s1, s2, extra) in links:
                    gs.append(Factor.fast("g", (), (f.vslots[s1], f.vslots[s2]),
                                          (), (f.jv[s1], f.jv[s2] + extra)))
                out.append(Monomial(mono.coeff * sign * cval,
                                    mono.factors[:i] + tuple(gs) + mono.factors[i + 1:]))
            return out
    return None


# self-contraction patterns of R up to its slot symmetries:
# position pair -> (sign for lam*g, remaining slot positions), None kills
_RIC_PATTERNS = {
    (0, 1): None, (2, 3): None,
    (0, 2): (1, (1, 3)), (1, 3): (1, (0, 2)),
    (0, 3): (-1, (1, 2)), (1, 2): (-1, (0, 3)),
}


def _einstein_reduce(mono: Monomial):
    for i, f in enumerate(mono.factors):
        if f.kind != "R":
            continue
        for (s, t), rule in _RIC_PATTERNS.items():
            if f.vslots[s] != f.vslots[t]:
                continue
            # contracted pair of R's own slots
            bs, bt = f.jv[s], f.jv[t]
            kappa = (bs + bt) % 2
            sign = 1
            if bt:
                sign = -sign
            if bs + bt == 2:
                sign = -sign
            if rule is None:
                if kappa == 0:
                    return []          # antisymmetric pair, clean trace: zero
                # R(Ji,i,.,.) stays; J-invariance of R would resolve it, but
                # symbolic-R mode never produces decorated slots
                continue
            if kappa == 1:
                continue
            sgn2, (r1, r2) = rule
            gf = Factor("g", (), (f.vslots[r1], f.vslots[r2]),
                        (), (f.jv[r1], f.jv[r2]))
            return [Monomial(mono.coeff * sign * sgn2 * ex.lam,
                             mono.factors[:i] + (gf,) + mono.factors[i + 1:])]
    return None


# ---------------------------------------------------------------------------
# gauge rules
# ---------------------------------------------------------------------------

def _trace_kill(mono: Monomial):
    for f in mono.factors:
        if f.kind == "h" and f.vslots[0] == f.vslots[1] and \
                (f.jv[0] + f.jv[1]) % 2 == 0:
            return True
    return False


def _find_div_edge(f: Factor):
    for di, didx in enumerate(f.dslots):
        for vi, vidx in enumerate(f.vslots):
            if didx == vidx:
                return di, vi
    return None


def _div_reduce(mono: Monomial, cs: ConstraintSet):
    """Reduce one prolonged-divergence contraction of an h jet.

    Returns None when no reducible pattern exists, else the replacement
    monomial list (possibly empty).
    """
    for i, f in enumerate(mono.factors):
        if f.kind != "h" or f.q == 0:
            continue
        edge = _find_div_edge(f)
        if edge is None:
            continue
        di, vi = edge
        sign = 1
        jd = list(f.jd)
        jv = list(f.jv)
        # clean the contracted pair of decorations
        if jd[di] == 1 and jv[vi] == 1:
            jd[di] = jv[vi] = 0          # sum_i T(Ji, Ji) = sum_i T(i, i)
        if jv[vi] == 1:
            if not cs.j_invariant:
                continue
            sign *= (-1) ** (jv[0] + jv[1])
            jv = [(b + 1) % 2 for b in jv]
        if jd[di] == 1:
            # sum_i T(Ji; i) = -sum_i T(i; Ji), then J-invariance again
            if not cs.j_invariant:
                continue
            sign *= -1
            jd[di] = 0
            jv[vi] = 1
            sign *= (-1) ** (jv[0] + jv[1])
            jv = [(b + 1) % 2 for b in jv]
        f2 = f.replace(jd=tuple(jd), jv=tuple(jv))
        if f2.q == 1:
            return []                     # delta_g h = 0 itself
        # S = O(arrangement with the contracted slot innermost) - corrections;
        # the O term is a prolonged divergence and vanishes
        arr = [k for k in range(f2.q) if k != di] + [di]
        fo = f2.replace(dslots=tuple(f2.dslots[k] for k in arr),
                        jd=tuple(f2.jd[k] for k in arr), ordered=True)
        fresh = _fresh_base(mono.factors)
        out = []
        for coeff, fs in _tosym_fragments(fo, fresh):
            out.append(Monomial(-sign * mono.coeff * coeff,
                                mono.factors[:i] + tuple(fs) + mono.factors[i + 1:]))
        return out
    return None


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

_PROCESS_MEMO = {}


def clear_caches():
    _PROCESS_MEMO.clear()
    _TOSYM_MEMO.clear()
    ex.clear_caches()


def _process(factors, frees_key, cs, cval):
    """Fully rewrite a unit-coefficient monomial; returns a tuple of
    (coefficient, canonical factor tuple) pairs.

    Memoized on the relabeled factor pattern: the rewrite cascade revisits
    the same structures across expansions constantly.
    """
    mono = ex.relabel(ex.Monomial(sp.Integer(1), factors),
                      ex._fresh_dummy_map(ex.Monomial(sp.Integer(1), factors)))
    key = (mono.key(), frees_key,
           cs.trace_free, cs.div_free, cs.j_invariant, cs.symmetric_space,
           None if cval is None else sp.sstr(cval))
    hit = _PROCESS_MEMO.get(key)
    if hit is not None:
        return hit

    def recurse(fragments):
        acc = {}
        for fcoeff, ffactors in fragments:
            if fcoeff == 0:
                continue
            for c2, fs2 in _process(tuple(ffactors), frees_key, cs, cval):
                k2 = tuple(f.key() for f in fs2)
                cur = acc.get(k2)
                if cur is None:
                    acc[k2] = [fcoeff * c2, fs2]
                else:
                    cur[0] = cur[0] + fcoeff * c2
        out = []
        for coeff, fs in acc.values():
            coeff = sp.expand(coeff)
            if coeff != 0:
                out.append((coeff, fs))
        return tuple(out)

    mono0 = mono
    result = None
    got = _expand_ordered(mono0)
    if got is not None:
        result = recurse([(t.coeff, t.factors) for t in got])
    if result is None:
        red = ex.reduce_monomial(mono0)
        if red is None:
            result = ()
        elif red.key() != mono0.key() or red.coeff != 1:
            result = recurse([(red.coeff, red.factors)])
    if result is None:
        mono0 = red
        if cval is not None:
            got = _substitute_R(mono0, cval)
            if got is not None:
                result = recurse([(t.coeff, t.factors) for t in got])
        elif cs.symmetric_space:
            got = _einstein_reduce(mono0)
            if got is not None:
                result = recurse([(t.coeff, t.factors) for t in got])
    if result is None and cs.trace_free and _trace_kill(mono0):
        result = ()
    if result is None and cs.div_free:
        got = _div_reduce(mono0, cs)
        if got is not None:
            result = recurse([(t.coeff, t.factors) for t in got])
    if result is None:
        canon = ex.canon_monomial(mono0, frees_key, allow_flip=cs.j_invariant)
        result = () if canon is None else ((sp.Integer(canon[1]), canon[2]),)
    _PROCESS_MEMO[key] = result
    return result


def normalize(e: TensorExpr, cs: ConstraintSet | None = None, model=None) -> TensorExpr:
    """Full normal form of an expression under the active rule set.

    Idempotent; two expressions equal modulo slot symmetries, dummy
    relabeling, the Ricci identity, the background identities and the active
    constraints map to identical term lists.
    """
    cs = cs or ConstraintSet.none()
    cval = None
    if model is not None:
        cval = sp.sympify(model.c)
    acc = {}
    reps = {}
    for t in e.terms:
        if t.coeff == 0:
            continue
        for coeff, fs in _process(t.factors, e.frees, cs, cval):
            k = tuple(f.key() for f in fs)
            acc[k] = acc.get(k, 0) + t.coeff * coeff
            reps[k] = fs
    terms = []
    for k in sorted(acc, key=repr):
        coeff = sp.expand(acc[k])
        if coeff != 0:
            terms.append(ex.Monomial(coeff, reps[k]))
    out = TensorExpr(e.frees, terms, validate=False)
    if cval is not None:
        # the Einstein constant of the space form
        lam_val = 2 * (ex.m + 1) * cval
        out = out.map_coeff(lambda k: sp.expand(k.subs(ex.lam, lam_val)))
    return out


def canonicalize(e: TensorExpr) -> TensorExpr:
    """Constraint-free normal form (slot symmetries, dummies, Ricci identity,
    metric absorption)."""
    return normalize(e)


def commute_derivatives(e: TensorExpr) -> TensorExpr:
    """Bring all iterated derivatives to the symmetrized-jet normal order,
    emitting curvature correction terms."""
    return normalize(e)


def apply_gauge(e: TensorExpr, cs: ConstraintSet) -> TensorExpr:
    return normalize(e, cs=cs)


def substitute_curvature(e: TensorExpr, model) -> TensorExpr:
    """Replace every curvature factor by the space-form closed form."""
    return normalize(e, model=model)
