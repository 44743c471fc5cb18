"""Random constraint-satisfying jets and the floating-point expression oracle.

A RandomJet is a point evaluation of (h, Dh, D^2h) as free arrays projected
onto the active constraint set: symmetry, trace-freeness, divergence
freeness (including its first prolongation, which on a curved background is
affine in h through the Ricci identity), and J invariance for Kahler sets.
Only the symmetrized second jet is stored; iterated derivatives are
reconstructed with explicit curvature corrections where needed.

``eval_expr`` evaluates a TensorExpr on a batch of jets by einsum.  It is
the independent side of every dual-oracle test: agreement between a raw
expression and its symbolic normal form validates the whole rewrite
pipeline numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import expr as ex
from .rules import ConstraintSet
from .spaceform import SpaceFormModel

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class OracleError(ValueError):
    pass


@dataclass
class ModelData:
    """Numeric background data for one (m, c)."""

    model: SpaceFormModel
    R: np.ndarray = field(init=False)
    Jmat: np.ndarray = field(init=False)
    g: np.ndarray = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self):
        if self.model.m is None:
            raise OracleError("numeric oracle needs a concrete dimension")
        self.R = self.model.curvature_array()
        self.Jmat = self.model.j_matrix()
        self.g = np.eye(self.model.n)
        self.lam = 2.0 * (self.model.m + 1) * float(self.model.c)

    def rring(self, h):
        """R-ring action (R(i,.,j,.) h_ij) along the last two axes of h."""
        return np.einsum("iajb,...ij->...ab", self.R, h)


def _sym_axes(T, ax1, ax2):
    return 0.5 * (T + np.swapaxes(T, ax1, ax2))


def _jinv_values(T, Jm):
    """Project the last two axes onto h(Jx,Jy) = h(x,y)."""
    JTJ = np.einsum("ap,bq,...ab->...pq", Jm, Jm, T)
    return 0.5 * (T + JTJ)


def _vtrace_free(T, n):
    tr = np.trace(T, axis1=-2, axis2=-1)
    return T - tr[..., None, None] * np.eye(n) / n


@dataclass
class RandomJet:
    """Seeded jets of h at a point of the background, batched over seeds."""

    data: ModelData
    cs: ConstraintSet
    seeds: int = 1
    seed: int = 0
    h: np.ndarray = field(init=False)
    S1: np.ndarray = field(init=False)
    S2: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.data.model.n
        rng = np.random.default_rng(self.seed)
        self.h = self._project_h(rng.standard_normal((self.seeds, n, n)))
        self.S1 = self._project_s1(rng.standard_normal((self.seeds, n, n, n)))
        self.S2 = self._project_s2(rng.standard_normal((self.seeds, n, n, n, n)))

    # -- projections --------------------------------------------------------

    def _base(self, T):
        n = self.data.model.n
        T = _sym_axes(T, -2, -1)
        if self.cs.j_invariant:
            T = _jinv_values(T, self.data.Jmat)
        if self.cs.trace_free:
            T = _vtrace_free(T, n)
        return T

    def _project_h(self, T):
        return self._base(T)

    def _affine_constrain(self, T, pi0, raw_rows, b):
        """Exact affine step: T stays in the range of pi0 and satisfies
        <T, row_k> = b_k.  Solved through the Gram matrix of the projected
        rows; valid because <T, row> = <T, pi0(row)> on the range."""
        shape = T.shape[1:]
        K = raw_rows.shape[0]
        flat = np.stack([pi0(raw_rows[k]) for k in range(K)]).reshape(K, -1)
        G = flat @ flat.T
        T = pi0(T)
        resid = T.reshape(self.seeds, -1) @ flat.T - b
        z = np.linalg.lstsq(G, resid.T, rcond=None)[0].T
        T = (T.reshape(self.seeds, -1) - z @ flat).reshape((self.seeds,) + shape)
        check = np.max(np.abs(T.reshape(self.seeds, -1) @ flat.T - b))
        if check > 1e-10:
            raise OracleError(f"jet projection failed, residual {check:.3e}")
        return T

    def _project_s1(self, T):
        n = self.data.model.n
        T = self._base(T)
        if not self.cs.div_free:
            return T
        # delta_g h = 0: sum_d T[d,d,y] = 0
        rows = np.zeros((n, n, n, n))
        for y in range(n):
            rows[y, :, :, y] = np.eye(n)
        return self._affine_constrain(T, self._base, rows,
                                      np.zeros((self.seeds, n)))

    def _project_s2(self, T):
        n = self.data.model.n

        def pi0(X):
            return self._base(_sym_axes(X, -4, -3))

        T = pi0(T)
        if not self.cs.div_free:
            return T
        # prolonged divergence: sum_u S2[a,u,u,x] = (lam h - Rring h)(a,x) / 2
        b = 0.5 * (self.data.lam * self.h - self.data.rring(self.h))
        rows = np.zeros((n * n, n, n, n, n))
        k = 0
        for a in range(n):
            for x in range(n):
                rows[k, a, :, :, x] = np.eye(n)
                k += 1
        return self._affine_constrain(T, pi0, rows,
                                      b.reshape(self.seeds, n * n))

    # -- constraint residuals (for the projection-idempotence invariants) ---

    def constraint_residuals(self):
        d = self.data
        n = d.model.n
        out = {}
        out["h_sym"] = np.max(np.abs(self.h - np.swapaxes(self.h, -1, -2)))
        if self.cs.trace_free:
            out["h_trace"] = np.max(np.abs(np.einsum("...aa->...", self.h)))
            out["s1_trace"] = np.max(np.abs(np.einsum("...daa->...d", self.S1)))
            out["s2_trace"] = np.max(np.abs(np.einsum("...deaa->...de", self.S2)))
        if self.cs.div_free:
            out["s1_div"] = np.max(np.abs(np.einsum("...ddy->...y", self.S1)))
            b = 0.5 * (d.lam * self.h - d.rring(self.h))
            out["s2_div"] = np.max(np.abs(
                np.einsum("...auux->...ax", self.S2) - b))
        if self.cs.j_invariant:
            for name, T in (("h", self.h), ("s1", self.S1), ("s2", self.S2)):
                JTJ = np.einsum("ap,bq,...ab->...pq", d.Jmat, d.Jmat, T)
                out[f"{name}_jinv"] = np.max(np.abs(T - JTJ))
        return out

    def ordered2(self):
        """Iterated second derivative O2[a,b,x,y] = D^2_{a,b} h(x,y)."""
        d = self.data
        corr = np.einsum("abxu,...uy->...abxy", d.R, self.h) + \
            np.einsum("abyu,...xu->...abxy", d.R, self.h)
        return self.S2 + 0.5 * corr


# ---------------------------------------------------------------------------
# expression evaluation
# ---------------------------------------------------------------------------

def _operand(f: ex.Factor, jets: RandomJet, d: ModelData):
    if f.kind == "h":
        if f.ordered:
            if f.q != 2:
                raise OracleError("ordered evaluation only implemented to order 2")
            arr = jets.ordered2()
        else:
            arr = (jets.h, jets.S1, jets.S2)[f.q] if f.q <= 2 else None
            if arr is None:
                raise OracleError("jets carry derivatives up to order 2")
        batched = True
    elif f.kind == "R":
        arr, batched = d.R, False
    elif f.kind == "g":
        arr, batched = d.g, False
    elif f.kind == "J":
        # J(a,b) = g(J e_a, e_b) = Jmat[b, a]
        arr, batched = d.Jmat.T, False
    else:
        raise OracleError(f"no numeric model for symbol kind {f.kind!r}")
    off = 1 if batched else 0
    for pos, bit in enumerate(f.jbits()):
        if bit:
            ax = off + pos
            arr = np.moveaxis(np.tensordot(arr, d.Jmat, axes=([ax], [0])), -1, ax)
    return arr, batched


def eval_expr(e: ex.TensorExpr, jets: RandomJet, subs=None):
    """Evaluate on the jet batch; returns an array indexed by (seed, frees...)."""
    d = jets.data
    n = d.model.n
    vals = {ex.m: d.model.m, ex.c: sp.sympify(d.model.c), ex.lam: sp.Rational(
        2 * (d.model.m + 1)) * sp.sympify(d.model.c)}
    if subs:
        vals.update(subs)
    out_shape = (jets.seeds,) + (n,) * e.rank
    total = np.zeros(out_shape)
    for t in e.terms:
        coeff = float(sp.sympify(t.coeff).subs(vals))
        if not t.factors:
            total += coeff
            continue
        letters = {}
        subscripts = []
        operands = []
        any_batched = False
        for f in t.factors:
            arr, batched = _operand(f, jets, d)
            any_batched = any_batched or batched
            sub = "z" if batched else ""
            for idx in f.slots():
                if idx not in letters:
                    letters[idx] = _LETTERS[len(letters)]
                sub += letters[idx]
            subscripts.append(sub)
            operands.append(arr)
        frees = "".join(letters[x] for x in e.frees)
        if any_batched:
            out = np.einsum(",".join(subscripts) + "->z" + frees, *operands)
        else:
            out = np.einsum(",".join(subscripts) + "->" + frees, *operands)
        total += coeff * out
    return total


def oracle_agree(raw: ex.TensorExpr, normalized: ex.TensorExpr, jets: RandomJet,
                 rtol: float = 1e-8):
    """Relative agreement of a raw expression and its normal form on jets."""
    a = eval_expr(raw, jets)
    b = eval_expr(normalized, jets)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-30)
    err = np.max(np.abs(a - b)) / scale
    return err, err <= rtol
