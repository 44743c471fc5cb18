"""The background geometry: a Kahler manifold of constant holomorphic
sectional curvature, in an adapted orthonormal frame {e_1, Je_1, ..., e_m, Je_m}.

Two independent descriptions of the curvature are kept side by side:

* ``curvature_component`` extends the component table

      R(e_i,e_j,e_i,e_j) = R(e_i,Je_j,e_i,Je_j) = R(Je_i,Je_j,Je_i,Je_j) = c   (i != j)
      R(e_i,Je_i,e_j,Je_j) = 2c                                                (i != j)
      R(e_i,Je_i,e_i,Je_i) = 4c
      everything not reachable from these = 0

  to all index orders by the algebraic curvature symmetries, J invariance
  of the front pair, and the first Bianchi identity;

* ``curvature_closed_form`` is the rank-4 tensor expression
  c[g(x,z)g(y,w) - g(x,w)g(y,z) + g(x,Jz)g(y,Jw) - g(x,Jw)g(y,Jz)
  + 2 g(x,Jy)g(z,Jw)], the substitution rule the symbolic kernel uses.

The test suite checks exhaustively that the two agree.  Derived constants:
Einstein constant lambda = 2(m+1)c and |R|^2 = 32 m (m+1) c^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from . import expr as ex
from .parser import parse_expr


@dataclass(frozen=True)
class BasisIndex:
    """Name of an adapted-frame vector: e_k (rotated=False) or Je_k."""

    k: int
    rotated: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("basis index k starts at 1")

    @property
    def position(self) -> int:
        """Flat position in the frame order e_1, Je_1, e_2, Je_2, ..."""
        return 2 * (self.k - 1) + (1 if self.rotated else 0)

    def J(self):
        """J e_k = Je_k, J(Je_k) = -e_k; returns (sign, BasisIndex)."""
        if self.rotated:
            return -1, BasisIndex(self.k, False)
        return 1, BasisIndex(self.k, True)

    @staticmethod
    def from_position(pos: int) -> "BasisIndex":
        return BasisIndex(pos // 2 + 1, bool(pos % 2))

    def __repr__(self):
        return f"Je_{self.k}" if self.rotated else f"e_{self.k}"


@dataclass(frozen=True)
class SpaceFormModel:
    """Constant holomorphic sectional curvature background.

    ``m`` is the complex dimension (None keeps the dimension symbolic, which
    is enough for the symbolic kernel); ``c`` is the curvature scale, exact
    rational or the formal symbol.  The real dimension is n = 2m.
    """

    m: int | None = None
    c: object = ex.c

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ValueError("complex dimension m must be >= 1")
        object.__setattr__(self, "c", sp.sympify(self.c))

    @property
    def n(self) -> int:
        if self.m is None:
            raise ValueError("symbolic model has no numeric dimension")
        return 2 * self.m

    def frame(self):
        return [BasisIndex.from_position(p) for p in range(self.n)]

    # -- exact arrays -------------------------------------------------------

    def j_matrix(self) -> np.ndarray:
        """Jmat[a, b] = component a of J(frame b)."""
        n = self.n
        J = np.zeros((n, n))
        for i in range(0, n, 2):
            J[i + 1, i] = 1.0
            J[i, i + 1] = -1.0
        return J

    def curvature_array(self, use_table: bool = True) -> np.ndarray:
        """All components R[a,b,x,y] as floats (c evaluated numerically)."""
        n = self.n
        cval = float(self.c)
        R = np.zeros((n, n, n, n))
        for a in range(n):
            for b in range(n):
                for x in range(n):
                    for y in range(n):
                        idx = tuple(BasisIndex.from_position(p) for p in (a, b, x, y))
                        if use_table:
                            R[a, b, x, y] = float(curvature_component(self, *idx))
                        else:
                            R[a, b, x, y] = float(_closed_form_value(*idx)) * cval
        return R


# ---------------------------------------------------------------------------
# the component table, completed by symmetries
# ---------------------------------------------------------------------------

def _table_lookup(q):
    """Raw table entry for a 4-tuple of (k, rotated) pairs, in units of c.

    Returns None when the tuple is not one of the listed patterns.
    """
    (k1, r1), (k2, r2), (k3, r3), (k4, r4) = q
    # R(e_i, e_j, e_i, e_j) family, i != j
    if k1 == k3 and k2 == k4 and k1 != k2 and r1 == r3 and r2 == r4:
        if (r1, r2) in ((False, False), (False, True), (True, False), (True, True)):
            return 1
    # R(e_i, Je_i, e_j, Je_j), i != j
    if k1 == k2 and k3 == k4 and k1 != k3 and (r1, r2) == (False, True) \
            and (r3, r4) == (False, True):
        return 2
    # R(e_i, Je_i, e_i, Je_i)
    if k1 == k2 == k3 == k4 and (r1, r2, r3, r4) == (False, True, False, True):
        return 4
    return None


@lru_cache(maxsize=None)
def _component(q):
    """Table value in units of c, extended by the curvature symmetries,
    J invariance of the front pair, and one layer of first Bianchi."""
    val = _orbit_lookup(q)
    if val is not None:
        return val
    # first Bianchi: R(a,b,x,y) = -R(b,x,a,y) - R(x,a,b,y)
    a, b, x, y = q
    v1 = _orbit_lookup((b, x, a, y))
    v2 = _orbit_lookup((x, a, b, y))
    if v1 is not None and v2 is not None:
        return -v1 - v2
    return 0


def _orbit_lookup(q):
    """Search the symmetry orbit of q for a raw table pattern."""
    seen = set()
    stack = [(q, 1)]
    while stack:
        cur, sign = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        raw = _table_lookup(cur)
        if raw is not None:
            return sign * raw
        a, b, x, y = cur
        stack.append(((b, a, x, y), -sign))
        stack.append(((a, b, y, x), -sign))
        stack.append(((x, y, a, b), sign))
        # J invariance of the front pair: R(Ja, Jb, x, y) = R(a, b, x, y)
        (sa, ja), (sb, jb) = _j_pair(a), _j_pair(b)
        stack.append(((ja, jb, x, y), sign * sa * sb))
    return None


def _j_pair(t):
    k, r = t
    return (-1, (k, False)) if r else (1, (k, True))


def curvature_component(model: SpaceFormModel, a: BasisIndex, b: BasisIndex,
                        x: BasisIndex, y: BasisIndex):
    """Exact component R(a, b, x, y) from the table, as a sympy scalar."""
    if model.m is not None:
        for idx in (a, b, x, y):
            if idx.k > model.m:
                raise ValueError(f"basis index {idx} outside complex dimension {model.m}")
    q = tuple((i.k, i.rotated) for i in (a, b, x, y))
    return sp.Integer(_component(q)) * model.c


def _closed_form_value(a, b, x, y):
    """Evaluate the closed form on frame vectors, in units of c."""
    def gdot(u, su, v, sv):
        return su * sv if u == v else 0

    def J(t):
        s, u = t.J()
        return s, u

    terms = 0
    sa, ja = 1, a
    # g(a,x)g(b,y) - g(a,y)g(b,x)
    terms += gdot(a, 1, x, 1) * gdot(b, 1, y, 1) - gdot(a, 1, y, 1) * gdot(b, 1, x, 1)
    sx, jx = J(x)
    sy, jy = J(y)
    sb, jb = J(b)
    terms += gdot(a, 1, jx, sx) * gdot(b, 1, jy, sy)
    terms -= gdot(a, 1, jy, sy) * gdot(b, 1, jx, sx)
    terms += 2 * gdot(a, 1, jb, sb) * gdot(x, 1, jy, sy)
    return terms


def curvature_closed_form(model: SpaceFormModel) -> ex.TensorExpr:
    """The substitution rule as a rank-4 expression in g and J.

    J(a,b) in the mini-language is g(Je_a, e_b), so g(x, Jz) = J(z, x).
    """
    e = parse_expr(
        "c*( g(x,z)*g(y,w) - g(x,w)*g(y,z)"
        " + J(z,x)*J(w,y) - J(w,x)*J(z,y) + 2*J(y,x)*J(w,z) )")
    return e.map_coeff(lambda k: k.subs(ex.c, sp.sympify(model.c)))


def einstein_constant(model: SpaceFormModel):
    """lambda = 2(m+1)c, the Ricci proportionality of the background."""
    mm = sp.Integer(model.m) if model.m is not None else ex.m
    return sp.expand(2 * (mm + 1) * sp.sympify(model.c))


def curvature_norm_sq(model: SpaceFormModel):
    """|R|^2 = 32 m (m+1) c^2."""
    mm = sp.Integer(model.m) if model.m is not None else ex.m
    return sp.expand(32 * mm * (mm + 1) * sp.sympify(model.c) ** 2)


def ricci_contraction(model: SpaceFormModel) -> ex.TensorExpr:
    """Symbolic Ricci contraction of the closed form; equals lambda * g."""
    from . import rules
    return rules.substitute_curvature(parse_expr("R(i,p,i,q)"), model)


def norm_sq_contraction(model: SpaceFormModel):
    """Symbolic full self-contraction of the closed form; equals |R|^2."""
    from . import rules
    e = rules.substitute_curvature(parse_expr("R(i,j,k,l)*R(i,j,k,l)"), model)
    if e.rank != 0:
        raise ex.ExprError("norm contraction must be scalar")
    if not e.terms:
        return sp.Integer(0)
    if len(e.terms) != 1 or e.terms[0].factors:
        raise ex.ExprError("norm contraction did not reduce to a scalar")
    return e.terms[0].coeff


def rcheck_tensor(model: SpaceFormModel) -> ex.TensorExpr:
    """The triple self-contraction R(p,i,j,k)R(q,i,j,k); canonicalizes to
    (|R|^2 / n) g on the space form."""
    from . import rules
    return rules.substitute_curvature(parse_expr("R(p,i,j,k)*R(q,i,j,k)"), model)
