"""Exact indexed tensor monomials over an adapted Kahler frame.

An expression is a finite sum of monomials.  Each monomial is a product of
factors drawn from a small symbol set: jets of a symmetric 2-tensor ``h`` (or
an auxiliary one-form ``w``), a symbolic background curvature ``R``, and the
parallel tensors ``g`` and ``J``.  Slots hold single indices; an index
appearing twice in a monomial is contracted over the real adapted frame
{e_1, Je_1, ..., e_m, Je_m}, an index appearing once is a free slot of the
expression.  Application of J to a slot argument is stored as a decoration
bit on the slot, not as an explicit factor, so that normal forms stay unique.

Coefficients are exact sympy expressions in the formal scalars ``m`` (complex
dimension), ``c`` (holomorphic sectional curvature scale / 4) and ``lam``
(Einstein constant of a generic symmetric-space background).

Jet slot layout: derivative slots come first, value slots last.  A factor
with ``ordered=True`` has its derivative slots in iterated-derivative order
(outermost first); ``ordered=False`` means the derivative slots are fully
symmetrized.  Canonical forms only ever contain symmetrized jets; the
conversion (which emits curvature correction terms) lives in ``rules``.
"""

from __future__ import annotations

import itertools

import sympy as sp

m, c, lam = sp.symbols("m c lam")

MAX_JET = 4
MAX_FACTORS = 8


class ExprError(ValueError):
    pass


class JetOrderError(ExprError):
    pass


# value-slot count for each symbol kind
_VALUE_SLOTS = {"h": 2, "w": 1, "R": 4, "g": 2, "J": 2}
_JETTABLE = {"h": True, "w": True, "R": False, "g": False, "J": False}

# R slot symmetries: permutations of (0,1,2,3) with signs
_R_SYMS = [
    ((0, 1, 2, 3), 1), ((1, 0, 2, 3), -1), ((0, 1, 3, 2), -1), ((1, 0, 3, 2), 1),
    ((2, 3, 0, 1), 1), ((3, 2, 0, 1), -1), ((2, 3, 1, 0), -1), ((3, 2, 1, 0), 1),
]


class Factor:
    """One tensor factor of a monomial."""

    __slots__ = ("kind", "dslots", "vslots", "jd", "jv", "ordered")

    def __init__(self, kind, dslots=(), vslots=(), jd=None, jv=None, ordered=False):
        if kind not in _VALUE_SLOTS:
            raise ExprError(f"unknown symbol kind {kind!r}")
        if len(vslots) != _VALUE_SLOTS[kind]:
            raise ExprError(
                f"{kind} takes {_VALUE_SLOTS[kind]} value slots, got {len(vslots)}")
        if dslots and not _JETTABLE[kind]:
            raise ExprError(f"{kind} is parallel, it has no jets")
        if len(dslots) > MAX_JET:
            raise JetOrderError(f"jet order {len(dslots)} exceeds maximum {MAX_JET}")
        self.kind = kind
        self.dslots = tuple(dslots)
        self.vslots = tuple(vslots)
        self.jd = tuple(jd) if jd is not None else (0,) * len(self.dslots)
        self.jv = tuple(jv) if jv is not None else (0,) * len(self.vslots)
        self.ordered = bool(ordered) and len(self.dslots) > 1
        if len(self.jd) != len(self.dslots) or len(self.jv) != len(self.vslots):
            raise ExprError("decoration length mismatch")

    @property
    def q(self):
        return len(self.dslots)

    def slots(self):
        return self.dslots + self.vslots

    def jbits(self):
        return self.jd + self.jv

    def replace(self, **kw):
        data = dict(kind=self.kind, dslots=self.dslots, vslots=self.vslots,
                    jd=self.jd, jv=self.jv, ordered=self.ordered)
        data.update(kw)
        return Factor(**data)

    @staticmethod
    def fast(kind, dslots, vslots, jd, jv, ordered=False):
        """Unvalidated constructor for internal rewriting loops."""
        f = object.__new__(Factor)
        f.kind = kind
        f.dslots = dslots
        f.vslots = vslots
        f.jd = jd
        f.jv = jv
        f.ordered = ordered and len(dslots) > 1
        return f

    def key(self):
        return (self.kind, self.dslots, self.vslots, self.jd, self.jv, self.ordered)

    def __repr__(self):
        return render_factor(self)


class Monomial:
    __slots__ = ("coeff", "factors")

    def __init__(self, coeff, factors):
        self.coeff = sp.sympify(coeff)
        self.factors = tuple(factors)
        if len(self.factors) > MAX_FACTORS:
            raise ExprError(f"monomial exceeds {MAX_FACTORS} factors")

    def indices(self):
        out = {}
        for f in self.factors:
            for idx in f.slots():
                out[idx] = out.get(idx, 0) + 1
        return out

    def key(self):
        return tuple(f.key() for f in self.factors)

    def __repr__(self):
        if not self.factors:
            return f"({self.coeff})"
        return f"({self.coeff})*" + "*".join(map(repr, self.factors))


def _fresh_dummy_map(mono):
    """Relabel integer dummies in first-appearance order; improves cache hits."""
    mapping = {}
    for f in mono.factors:
        for idx in f.slots():
            if isinstance(idx, int) and idx not in mapping:
                mapping[idx] = len(mapping)
    return mapping


def relabel(mono, mapping):
    fs = []
    for f in mono.factors:
        fs.append(f.replace(
            dslots=tuple(mapping.get(i, i) for i in f.dslots),
            vslots=tuple(mapping.get(i, i) for i in f.vslots)))
    return Monomial(mono.coeff, fs)


def check_monomial(mono, frees):
    counts = mono.indices()
    for idx, n in counts.items():
        if isinstance(idx, str) and idx in frees:
            if n != 1:
                raise ExprError(f"free index {idx!r} appears {n} times in one term")
        elif n != 2:
            raise ExprError(f"index {idx!r} appears {n} times (contraction needs 2)")
    if mono.factors:
        for letter in frees:
            if counts.get(letter, 0) != 1:
                raise ExprError(f"term is missing free index {letter!r}")


class TensorExpr:
    """A sum of tensor monomials with an ordered tuple of free indices.

    Free indices are single letters; an index repeated inside one term is a
    contraction.  The term list is not canonical until ``rules.normalize``
    has been applied.
    """

    def __init__(self, frees, terms, validate=True):
        self.frees = tuple(frees)
        self.terms = [t for t in terms if t.coeff != 0]
        if validate:
            for t in self.terms:
                check_monomial(t, set(self.frees))

    @property
    def rank(self):
        return len(self.frees)

    def is_zero(self):
        return not self.terms

    # -- algebra ----------------------------------------------------------

    def __add__(self, other):
        other = as_expr(other, self.frees)
        if set(other.frees) != set(self.frees):
            raise ExprError(
                f"rank mismatch across summands: {self.frees} vs {other.frees}")
        return TensorExpr(self.frees, self.terms + other.terms, validate=False)

    def __sub__(self, other):
        return self + (as_expr(other, self.frees) * sp.Integer(-1))

    def __neg__(self):
        return self * sp.Integer(-1)

    def __mul__(self, other):
        if isinstance(other, TensorExpr):
            return _product(self, other)
        k = sp.sympify(other)
        return TensorExpr(self.frees,
                          [Monomial(t.coeff * k, t.factors) for t in self.terms],
                          validate=False)

    __rmul__ = __mul__

    def substitute_indices(self, mapping):
        """Rename free indices; mapping two frees to one letter contracts them."""
        used = [i for t in self.terms for f in t.factors
                for i in f.slots() if isinstance(i, int)]
        nxt = max(used, default=-1) + 1
        merged = {}
        for letter in self.frees:
            merged.setdefault(mapping.get(letter, letter), []).append(letter)
        new_frees = []
        plan = {}
        dummy_id = nxt
        for letter in self.frees:
            tgt = mapping.get(letter, letter)
            srcs = merged[tgt]
            if len(srcs) == 1:
                plan[letter] = tgt
                if tgt not in new_frees:
                    new_frees.append(tgt)
            elif len(srcs) == 2:
                if srcs[0] == letter:
                    plan[srcs[0]] = plan[srcs[1]] = dummy_id
                    dummy_id += 1
            else:
                raise ExprError(f"cannot contract {len(srcs)} slots into {tgt!r}")
        terms = []
        for t in self.terms:
            fs = [f.replace(
                dslots=tuple(plan.get(i, i) if isinstance(i, str) else i
                             for i in f.dslots),
                vslots=tuple(plan.get(i, i) if isinstance(i, str) else i
                             for i in f.vslots)) for f in t.factors]
            terms.append(Monomial(t.coeff, fs))
        return TensorExpr(tuple(new_frees), terms)

    def map_coeff(self, fn):
        return TensorExpr(self.frees,
                          [Monomial(fn(t.coeff), t.factors) for t in self.terms],
                          validate=False)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(repr(t) for t in self.terms)

    def pretty(self):
        return render(self)


def as_expr(x, frees=()):
    if isinstance(x, TensorExpr):
        return x
    k = sp.sympify(x)
    if k == 0:
        return TensorExpr(frees, [])
    if frees:
        raise ExprError("scalar used where a ranked expression is required")
    return TensorExpr((), [Monomial(k, ())])


def zero(frees=()):
    return TensorExpr(frees, [])


def _product(a, b):
    """Tensor product; indices shared between the operands contract."""
    shared = set(a.frees) & set(b.frees)
    frees = tuple(x for x in a.frees if x not in shared) + \
        tuple(x for x in b.frees if x not in shared)
    terms = []
    for ta in a.terms:
        for tb in b.terms:
            used = [i for t in (ta, tb) for f in t.factors
                    for i in f.slots() if isinstance(i, int)]
            nxt = max(used, default=-1) + 1
            shift = {}

            def mp(i):
                nonlocal nxt
                if isinstance(i, int):
                    if i not in shift:
                        shift[i] = nxt
                        nxt += 1
                    return shift[i]
                return i

            fs = list(ta.factors)
            for f in tb.factors:
                fs.append(f.replace(dslots=tuple(mp(i) for i in f.dslots),
                                    vslots=tuple(mp(i) for i in f.vslots)))
            mono = Monomial(ta.coeff * tb.coeff, fs)
            if shared:
                remap = {}
                nxt2 = max([i for f in mono.factors for i in f.slots()
                            if isinstance(i, int)], default=-1) + 1
                for s in sorted(shared):
                    remap[s] = nxt2
                    nxt2 += 1
                mono = relabel(mono, remap)
            terms.append(mono)
    return TensorExpr(frees, terms)


def pair(a, b):
    """Full contraction of two expressions with identical free slots."""
    if set(a.frees) != set(b.frees):
        raise ExprError("pairing requires identical free slots")
    return _product(a, b)


# ---------------------------------------------------------------------------
# local reduction: absorb g and J factors, fold J^2 on slots
# ---------------------------------------------------------------------------

def _fold_bit(b):
    """Reduce a decoration exponent mod 2; J^2 = -1 contributes a sign."""
    return (-1 if (b // 2) % 2 else 1), b % 2


def _fold_factor(factor):
    if all(b <= 1 for b in factor.jd) and all(b <= 1 for b in factor.jv):
        return 1, factor
    sign = 1
    jd, jv = [], []
    for b in factor.jd:
        s, r = _fold_bit(b)
        sign *= s
        jd.append(r)
    for b in factor.jv:
        s, r = _fold_bit(b)
        sign *= s
        jv.append(r)
    return sign, Factor.fast(factor.kind, factor.dslots, factor.vslots,
                              tuple(jd), tuple(jv), factor.ordered)


def reduce_monomial(mono):
    """Absorb metric factors into contracted slots.

    Returns a Monomial in which no g or J factor holds a contracted slot, or
    None when the monomial vanishes identically (a trace of J).
    """
    coeff = mono.coeff
    sign = 1
    factors = []
    for f in mono.factors:
        s, f2 = _fold_factor(f)
        sign *= s
        factors.append(f2)

    changed = True
    while changed:
        changed = False
        occ = {}
        for fi, f in enumerate(factors):
            for si, idx in enumerate(f.slots()):
                occ.setdefault(idx, []).append((fi, si))
        for fi, f in enumerate(factors):
            if f.kind not in ("g", "J"):
                continue
            b0, b1 = f.jv
            conv = 1
            if f.kind == "J":  # J(x,y) = g(Jx,y)
                s, b0 = _fold_bit(b0 + 1)
                conv = s
            i0, i1 = f.vslots
            if i0 == i1:
                # full self-contraction: trace of g or of J
                if (b0 + b1) % 2 == 1:
                    return None
                sign *= conv
                coeff = coeff * 2 * m
                del factors[fi]
                changed = True
                break
            for side in (0, 1):
                islot = (i0, i1)[side]
                slots_here = occ.get(islot, [])
                if len(slots_here) != 2:
                    continue  # free slot
                partner = [(ofi, osi) for ofi, osi in slots_here if ofi != fi]
                if len(partner) != 1:
                    continue
                ofi, osi = partner[0]
                kq = (b0, b1)[side]            # bit on the contracted argument
                newidx = (i1, i0)[side]        # surviving argument
                kp = (b1, b0)[side]            # bit on the surviving argument
                tgt = factors[ofi]
                slots = list(tgt.slots())
                bits = list(tgt.jbits())
                ks = bits[osi]
                total = ks + kq + kp
                sg, newbit = _fold_bit(total)
                sign *= conv * (-1) ** kq * sg
                slots[osi] = newidx
                bits[osi] = newbit
                nd = len(tgt.dslots)
                factors[ofi] = Factor.fast(
                    tgt.kind, tuple(slots[:nd]), tuple(slots[nd:]),
                    tuple(bits[:nd]), tuple(bits[nd:]), tgt.ordered)
                del factors[fi]
                changed = True
                break
            if changed:
                break

    # surviving metric factors have two free slots; present them as plain
    # g (even J-count) or J (odd J-count, decoration stripped)
    out = []
    for f in factors:
        if f.kind in ("g", "J"):
            b0, b1 = f.jv
            kappa = b0 + b1 + (1 if f.kind == "J" else 0)
            # moving all J onto the first argument: g(x,Jy) = -g(Jx,y)
            sign *= (-1) ** b1
            s, kappa = _fold_bit(kappa)
            sign *= s
            kind = "J" if kappa else "g"
            out.append(Factor(kind, (), f.vslots, (), (0, 0)))
        else:
            out.append(f)
    return Monomial(coeff * sign, out)


# ---------------------------------------------------------------------------
# canonical labeling
# ---------------------------------------------------------------------------

_KIND_CODE = {"g": 0, "J": 1, "R": 2, "h": 3, "w": 4}


def _factor_sig(f, selfedges):
    jpar = (sum(f.jv) % 2) if f.kind == "h" else f.jv
    return (_KIND_CODE[f.kind], f.q, 1 if f.ordered else 0,
            jpar, tuple(sorted(f.jd)), selfedges)


def _variants(f, allow_flip):
    """Symmetry elements of one factor: (deriv perm, value perm, value bits, sign)."""
    dperms = list(itertools.permutations(range(f.q))) if f.q > 1 \
        else [tuple(range(f.q))]
    out = []
    if f.kind == "h":
        flips = (0, 1) if allow_flip else (0,)
        for dp in dperms:
            for vp in ((0, 1), (1, 0)):
                for fl in flips:
                    jv = [f.jv[vp[0]], f.jv[vp[1]]]
                    sign = 1
                    if fl:
                        sign = (-1) ** (jv[0] + jv[1])
                        jv = [(jv[0] + 1) % 2, (jv[1] + 1) % 2]
                    out.append((dp, vp, tuple(jv), sign))
    elif f.kind == "w":
        for dp in dperms:
            out.append((dp, (0,), f.jv, 1))
    elif f.kind == "R":
        for perm, sg in _R_SYMS:
            out.append(((), perm, tuple(f.jv[i] for i in perm), sg))
    elif f.kind == "g":
        out.append(((), (0, 1), f.jv, 1))
        out.append(((), (1, 0), (f.jv[1], f.jv[0]), 1))
    elif f.kind == "J":
        out.append(((), (0, 1), f.jv, 1))
        out.append(((), (1, 0), (f.jv[1], f.jv[0]), -1))
    return out


_canon_cache = {}


def clear_caches():
    _canon_cache.clear()


def canon_monomial(mono, frees, allow_flip=False):
    """Canonical labeling of one reduced monomial.

    Minimizes a slot encoding over factor permutations within equal
    signature groups, the slot-symmetry group of every factor, optional
    J-invariance flips of h value slots, and dummy relabeling.  Contracted
    decorations are normalized onto the first-visited end of every edge.
    Returns (key, sign, canonical factors), or None when the monomial is
    equal to minus itself.
    """
    pre = relabel(mono, _fresh_dummy_map(mono))
    ck = (pre.key(), tuple(frees), allow_flip)
    if ck in _canon_cache:
        return _canon_cache[ck]

    factors = pre.factors
    counts = {}
    for f in factors:
        for idx in f.slots():
            counts[idx] = counts.get(idx, 0) + 1
    selfcounts = []
    for f in factors:
        seen = {}
        for idx in f.slots():
            seen[idx] = seen.get(idx, 0) + 1
        selfcounts.append(sum(1 for v in seen.values() if v == 2))

    order0 = sorted(range(len(factors)),
                    key=lambda i: (_factor_sig(factors[i], selfcounts[i]), i))
    groups = []
    for i in order0:
        sig = _factor_sig(factors[i], selfcounts[i])
        if groups and groups[-1][0] == sig:
            groups[-1][1].append(i)
        else:
            groups.append((sig, [i]))

    free_pos = {x: k for k, x in enumerate(frees)}
    var_lists = [_variants(f, allow_flip and f.kind == "h") for f in factors]

    best_key = None
    best_signs = set()
    best_rep = None
    group_perms = [list(itertools.permutations(g[1])) for g in groups]

    for perm_choice in itertools.product(*group_perms):
        order = [i for grp in perm_choice for i in grp]
        headers = tuple(
            (_KIND_CODE[factors[i].kind], factors[i].q,
             1 if factors[i].ordered else 0) for i in order)
        for variant_choice in itertools.product(*[var_lists[i] for i in order]):
            sign = 1
            labels = {}
            pending = {}
            flat = []
            for fi, var in zip(order, variant_choice):
                f = factors[fi]
                dp, vp, jv, vsign = var
                sign *= vsign
                vis = [(f.dslots[i], f.jd[i]) for i in dp]
                vis += [(f.vslots[vp[k]], jv[k]) for k in range(len(vp))]
                for idx, bit in vis:
                    if counts[idx] == 1:
                        flat.append([0, free_pos[idx], bit])
                    elif idx not in labels:
                        labels[idx] = len(labels)
                        pending[idx] = len(flat)
                        flat.append([1, labels[idx], bit])
                    else:
                        pos = pending.pop(idx)
                        bit1 = flat[pos][2]
                        if bit:
                            sign = -sign
                        if bit1 + bit == 2:
                            sign = -sign
                        flat[pos][2] = (bit1 + bit) % 2
                        flat.append([1, labels[idx], 0])
            key = (headers, tuple(tuple(e) for e in flat))
            if best_key is None or key < best_key:
                best_key = key
                best_signs = {sign}
                best_rep = (order, variant_choice, key)
            elif key == best_key:
                best_signs.add(sign)

    if len(best_signs) == 2:
        _canon_cache[ck] = None
        return None

    sign = best_signs.pop()
    order, variant_choice, key = best_rep
    headers, flat = key
    rep_factors = []
    pos = 0
    for fi in order:
        f = factors[fi]
        nslots = f.q + len(f.vslots)
        entries = flat[pos:pos + nslots]
        pos += nslots
        ids = [(frees[e[1]] if e[0] == 0 else e[1]) for e in entries]
        bits = [e[2] for e in entries]
        rep_factors.append(Factor(f.kind, tuple(ids[:f.q]), tuple(ids[f.q:]),
                                  tuple(bits[:f.q]), tuple(bits[f.q:]),
                                  ordered=f.ordered))
    result = (key, sign, tuple(rep_factors))
    _canon_cache[ck] = result
    return result


def combine(frees, monos, allow_flip=False):
    """Reduce, canonically label and collect a list of monomials."""
    acc = {}
    reps = {}
    for mono in monos:
        if mono.coeff == 0:
            continue
        red = reduce_monomial(mono)
        if red is None:
            continue
        cf = sp.expand(red.coeff)
        if cf == 0:
            continue
        if not red.factors:
            acc[()] = acc.get((), 0) + cf
            reps[()] = ()
            continue
        got = canon_monomial(red, frees, allow_flip=allow_flip)
        if got is None:
            continue
        key, sign, rep = got
        acc[key] = acc.get(key, 0) + sign * cf
        reps[key] = rep
    out = []
    for key in sorted(acc, key=lambda k: (0 if k == () else 1, k)):
        cf = sp.expand(acc[key])
        if cf == 0:
            continue
        out.append(Monomial(cf, reps[key]))
    return TensorExpr(frees, out, validate=False)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _idx_name(idx, bit):
    s = idx if isinstance(idx, str) else f"i{idx}"
    return ("J" + s) if bit else s


def render_factor(f):
    vs = ",".join(_idx_name(i, b) for i, b in zip(f.vslots, f.jv))
    if f.q == 0:
        return f"{f.kind}({vs})"
    ds = ",".join(_idx_name(i, b) for i, b in zip(f.dslots, f.jd))
    op = "D" if f.ordered else "S"
    return f"{op}{f.q}_{{{ds}}}{f.kind}({vs})"


def render(expr):
    if not expr.terms:
        return "0"
    parts = []
    for t in expr.terms:
        cs = sp.sstr(t.coeff)
        if t.factors:
            parts.append(f"({cs})*" + "*".join(render_factor(f) for f in t.factors))
        else:
            parts.append(f"({cs})")
    return " + ".join(parts)
