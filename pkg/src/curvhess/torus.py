"""Fourier spectral harness on flat Kahler tori.

Floating-point ground truth for the operator definitions and the
degenerate (c = 0) identities.  Fields live on the torus R^n / Z^n with the
flat metric and the constant complex structure of the adapted frame; a
tensor field is stored as the complex coefficient table of

    T(x) = sum_xi  T_xi  exp(2 pi i <xi, x>),     |xi|_inf <= N,

with the reality condition T_{-xi} = conj(T_xi).  Covariant derivatives are
coordinate derivatives, so every operator acts mode by mode through
polynomial symbols in 2 pi xi; the truncation N only controls sample
richness, never accuracy.

Tensor slot order: derivative slots first, value slots last, matching the
symbolic kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FlatTorusModel:
    """Flat torus of complex dimension m with modes |xi|_inf <= N."""

    m: int
    N: int = 4

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ValueError("need m >= 1 and N >= 1")

    @property
    def n(self):
        return 2 * self.m

    @property
    def grid(self):
        return 2 * self.N + 1

    def freqs(self):
        return np.arange(-self.N, self.N + 1)

    def j_matrix(self):
        n = self.n
        J = np.zeros((n, n))
        for i in range(0, n, 2):
            J[i + 1, i] = 1.0
            J[i, i + 1] = -1.0
        return J


class FourierTensorField:
    """Truncated Fourier representation of a real tensor field."""

    def __init__(self, model: FlatTorusModel, rank: int, coeffs=None):
        self.model = model
        self.rank = rank
        shape = (model.grid,) * model.n + (model.n,) * rank
        if coeffs is None:
            coeffs = np.zeros(shape, dtype=complex)
        if coeffs.shape != shape:
            raise ValueError(f"coefficient table must have shape {shape}")
        self.coeffs = np.asarray(coeffs, dtype=complex)

    @classmethod
    def random(cls, model, rank, seed=0, scale=1.0):
        rng = np.random.default_rng(seed)
        shape = (model.grid,) * model.n + (model.n,) * rank
        raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return cls(model, rank, raw * scale).realified()

    def realified(self):
        """Impose the reality condition T_{-xi} = conj(T_xi)."""
        rev = self.coeffs
        for ax in range(self.model.n):
            rev = np.flip(rev, axis=ax)
        return FourierTensorField(self.model, self.rank,
                                  0.5 * (self.coeffs + np.conj(rev)))

    def copy(self):
        return FourierTensorField(self.model, self.rank, self.coeffs.copy())

    # -- algebra ------------------------------------------------------------

    def _compat(self, other):
        if self.model != other.model or self.rank != other.rank:
            raise ValueError("incompatible fields")

    def __add__(self, other):
        self._compat(other)
        return FourierTensorField(self.model, self.rank,
                                  self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._compat(other)
        return FourierTensorField(self.model, self.rank,
                                  self.coeffs - other.coeffs)

    def __mul__(self, k):
        return FourierTensorField(self.model, self.rank, self.coeffs * k)

    __rmul__ = __mul__

    def inner(self, other):
        """L^2 inner product; unit-volume torus, orthonormal modes."""
        self._compat(other)
        return float(np.real(np.sum(self.coeffs * np.conj(other.coeffs))))

    def norm_sq(self):
        return self.inner(self)

    def norm(self):
        return float(np.sqrt(max(self.norm_sq(), 0.0)))

    # -- serialization ------------------------------------------------------

    def to_json(self):
        """Binary-free snapshot: {xi: coefficient list}, zero modes skipped."""
        N = self.model.N
        entries = []
        for mode in np.ndindex(*(self.model.grid,) * self.model.n):
            block = self.coeffs[mode]
            if np.max(np.abs(block)) == 0.0:
                continue
            entries.append({
                "xi": [int(k) - N for k in mode],
                "re": np.asarray(block.real).ravel().tolist(),
                "im": np.asarray(block.imag).ravel().tolist(),
            })
        return json.dumps({"m": self.model.m, "N": N, "rank": self.rank,
                           "entries": entries}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        model = FlatTorusModel(m=data["m"], N=data["N"])
        f = cls(model, data["rank"])
        shape = (model.n,) * data["rank"]
        for e in data["entries"]:
            mode = tuple(k + model.N for k in e["xi"])
            f.coeffs[mode] = (np.array(e["re"]) +
                              1j * np.array(e["im"])).reshape(shape)
        return f

    def grid_norm_sq(self, points_per_dim=None):
        """Quadrature of |T|^2 on a uniform grid; Parseval cross-check."""
        nm = self.model.n
        P = points_per_dim or (2 * self.model.grid)
        xs = np.arange(P) / P
        phase = np.exp(TWO_PI * 1j * np.outer(self.model.freqs(), xs))
        vals = self.coeffs
        for _ in range(nm):
            # consume the leading mode axis, append the point axis at the end
            vals = np.tensordot(vals, phase, axes=([0], [0]))
        sq = np.abs(vals) ** 2
        pt_axes = tuple(range(vals.ndim - nm, vals.ndim))
        slot_axes = tuple(range(vals.ndim - nm))
        return float(np.sum(np.mean(sq, axis=pt_axes)))


# ---------------------------------------------------------------------------
# operators (frequency-diagonal)
# ---------------------------------------------------------------------------

def _xi_operand(model):
    """2 pi xi indexed by (mode axes..., component)."""
    nm = model.n
    out = np.zeros((model.grid,) * nm + (nm,))
    f = TWO_PI * model.freqs()
    for a in range(nm):
        sh = [1] * nm
        sh[a] = model.grid
        out[..., a] = f.reshape(sh)
    return out


def D(fld: FourierTensorField) -> FourierTensorField:
    """Covariant derivative; the new slot leads the tensor axes."""
    model = fld.model
    nm = model.n
    xi = _xi_operand(model).reshape((model.grid,) * nm + (nm,) + (1,) * fld.rank)
    new = 1j * xi * np.expand_dims(fld.coeffs, nm)
    return FourierTensorField(model, fld.rank + 1, new)


def laplace(fld: FourierTensorField) -> FourierTensorField:
    """Rough Laplacian D*D: multiplication by |2 pi xi|^2."""
    model = fld.model
    sym = np.sum(_xi_operand(model) ** 2, axis=-1)
    return FourierTensorField(model, fld.rank,
                              fld.coeffs * sym.reshape(sym.shape + (1,) * fld.rank))


def _contract(fld, ax1, ax2):
    nm = fld.model.n
    out = np.trace(fld.coeffs, axis1=nm + ax1, axis2=nm + ax2)
    return FourierTensorField(fld.model, fld.rank - 2, out)


def delta_g(h: FourierTensorField) -> FourierTensorField:
    """delta_g h (x) = - sum_i D_i h(i, x)."""
    if h.rank != 2:
        raise ValueError("delta_g acts on 2-tensors")
    return -1 * _contract(D(h), 0, 1)


def delta_g_star(w: FourierTensorField) -> FourierTensorField:
    """(delta_g* w)(x,y) = (D_x w(y) + D_y w(x)) / 2."""
    if w.rank != 1:
        raise ValueError("delta_g* acts on one-forms")
    dw = D(w).coeffs
    nm = w.model.n
    return FourierTensorField(w.model, 2,
                              0.5 * (dw + np.swapaxes(dw, nm, nm + 1)))


def trace(fld: FourierTensorField) -> FourierTensorField:
    if fld.rank < 2:
        raise ValueError("trace needs rank >= 2")
    return _contract(fld, fld.rank - 2, fld.rank - 1)


def dD(h: FourierTensorField) -> FourierTensorField:
    """dD h (x,y,z) = D_y h(x,z) - D_z h(x,y)."""
    if h.rank != 2:
        raise ValueError("dD acts on 2-tensors")
    dh = D(h).coeffs  # axes (d, x, z)
    nm = h.model.n
    # (x,y,z) <- dh[y, x, z]  and  dh[z, x, y]
    first = np.moveaxis(dh, nm, nm + 1)
    second = np.moveaxis(dh, nm, nm + 2)
    return FourierTensorField(h.model, 3, first - second)


def deltaD(A: FourierTensorField) -> FourierTensorField:
    """deltaD(A)(x,y) = sum_i [ D_i A(x,y,i) + D_i A(y,x,i) ]."""
    if A.rank != 3:
        raise ValueError("deltaD acts on 3-tensors")
    dA = D(A).coeffs  # (i, x, y, z)
    nm = A.model.n
    t = np.trace(dA, axis1=nm, axis2=nm + 3)
    return FourierTensorField(A.model, 2, t + np.swapaxes(t, nm, nm + 1))


def j_conjugate(fld: FourierTensorField) -> FourierTensorField:
    """T(J., ..., J.) on all value slots."""
    Jm = fld.model.j_matrix()
    out = fld.coeffs
    nm = fld.model.n
    for ax in range(fld.rank):
        out = np.moveaxis(np.tensordot(out, Jm, axes=([nm + ax], [0])), -1, nm + ax)
    return FourierTensorField(fld.model, fld.rank, out)


def apply_operator(name: str, fld: FourierTensorField) -> FourierTensorField:
    ops = {"D": D, "DstarD": laplace, "delta_g": delta_g,
           "delta_g_star": delta_g_star, "tr": trace, "dD": dD,
           "deltaD": deltaD, "J": j_conjugate}
    if name not in ops:
        raise ValueError(f"unknown operator {name!r}; have {sorted(ops)}")
    return ops[name](fld)


# one-form exterior calculus ---------------------------------------------------

def d_function(f: FourierTensorField) -> FourierTensorField:
    return D(f)


def d_oneform(w: FourierTensorField) -> FourierTensorField:
    dw = D(w).coeffs
    nm = w.model.n
    return FourierTensorField(w.model, 2, dw - np.swapaxes(dw, nm, nm + 1))


def codiff(fld: FourierTensorField) -> FourierTensorField:
    """delta on forms: (delta A)(y...) = - sum_i D_i A(i, y...)."""
    return -1 * _contract(D(fld), 0, 1)


def hodge_laplacian_oneform(w: FourierTensorField) -> FourierTensorField:
    return d_function(codiff(w)) + codiff(d_oneform(w))


def constant_part(fld: FourierTensorField) -> FourierTensorField:
    out = FourierTensorField(fld.model, fld.rank)
    zero = (fld.model.N,) * fld.model.n
    out.coeffs[zero] = fld.coeffs[zero]
    return out


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def one_form_identities(w: FourierTensorField) -> dict:
    """Residual norms of the one-form identities at lambda = 0.

    The identity 2 delta_g delta_g* w + delta d w = 2 D*D w is gauge-free;
    the Bochner identity reduces to Delta w = D*D w; the conditional
    2 delta_g delta_g* w = d delta w holds exactly for parallel w and its
    generic residual is reported; the holomorphic criterion Delta w / 2 =
    lambda w = 0 picks out exactly the parallel one-forms.
    """
    scale = max(w.norm(), 1e-30)
    two_ds = 2 * delta_g(delta_g_star(w))
    r26 = (two_ds + codiff(d_oneform(w)) - 2 * laplace(w)).norm() / scale
    r27 = (hodge_laplacian_oneform(w) - laplace(w)).norm() / scale
    r25 = (two_ds - d_function(codiff(w))).norm() / scale
    holomorphic = hodge_laplacian_oneform(w).norm() / scale <= 1e-10
    parallel = (w - constant_part(w)).norm() / scale <= 1e-10
    return {"eq26": r26, "eq27": r27, "eq25_residual": r25,
            "holomorphic": holomorphic, "parallel": parallel}


def kaehler_variation_from_potential(phi: FourierTensorField) -> FourierTensorField:
    """h = (D^2 phi + D^2 phi(J., J.)) / 2 from a real mean-zero potential;
    J-invariant by construction and a Kahler variation."""
    if phi.rank != 0:
        raise ValueError("potential must be a scalar field")
    phi = phi.copy()
    phi.coeffs[(phi.model.N,) * phi.model.n] = 0.0
    hess = D(D(phi))
    return 0.5 * (hess + j_conjugate(hess))


def eq_2_4_residual(h: FourierTensorField) -> float:
    """|d tr h + 2 delta_g h| / |h|, zero for Kahler variations."""
    scale = max(h.norm(), 1e-30)
    return (d_function(trace(h)) + 2 * delta_g(h)).norm() / scale


def k1_residual(h: FourierTensorField) -> float:
    scale = max(h.norm(), 1e-30)
    return (j_conjugate(h) - h).norm() / scale


def _transpose2(h):
    nm = h.model.n
    return FourierTensorField(h.model, 2, np.swapaxes(h.coeffs, nm, nm + 1))


def tt_j_project(h: FourierTensorField, include_j: bool = True) -> FourierTensorField:
    """Orthogonal projection, mode by mode, onto symmetric trace-free
    divergence-free 2-tensors, J-invariant when ``include_j``.

    The J-invariant version is identically zero for m <= 2: J-invariance
    makes each mode coefficient commute with J, so transversality wipes out
    the xi J-line and the remaining Hermitian trace-free block has
    dimension (m-1)^2 - 1.
    """
    model = h.model
    nm = model.n
    Jm = model.j_matrix()
    xi = _xi_operand(model).reshape(-1, nm)
    flat = h.coeffs.reshape((-1, nm, nm)).copy()

    def cls(X):
        X = 0.5 * (X + X.swapaxes(-1, -2))
        if include_j:
            return 0.5 * (X + Jm.T @ X @ Jm)
        return X

    for k in range(flat.shape[0]):
        H = cls(flat[k])
        v = xi[k]
        rows = [np.eye(nm, dtype=complex)]          # trace
        if np.any(v != 0):
            for x in range(nm):                      # divergence against v
                Rr = np.zeros((nm, nm), dtype=complex)
                Rr[:, x] = v
                rows.append(Rr)
        basis = np.stack([cls(r).ravel() for r in rows])
        G = basis @ np.conj(basis.T)
        resid = basis @ np.conj(H.ravel())
        z = np.linalg.lstsq(G, resid, rcond=None)[0]
        flat[k] = H - np.conj(z @ basis).reshape(nm, nm)
    out = FourierTensorField(model, 2, flat.reshape(h.coeffs.shape))
    return out.realified()


def tt_residuals(h: FourierTensorField, include_j: bool = True) -> dict:
    scale = max(h.norm(), 1e-30)
    out = {"sym": (h - _transpose2(h)).norm() / scale,
           "trace": trace(h).norm() / scale,
           "div": delta_g(h).norm() / scale}
    if include_j:
        out["jinv"] = (h - j_conjugate(h)).norm() / scale
    return out


def hessian_flat_check(h: FourierTensorField) -> tuple[float, float]:
    """Dual assembly of the flat (c = 0) Hessian at p = 2.

    Operator route: 2 <rbar, deltaD dD h> with rbar built from the
    second-jet curvature tensor Q (every explicit curvature term vanishes
    on the torus); closed form: 2 |D*Dh|^2.
    """
    model = h.model
    nm = model.n
    d2 = D(D(h)).coeffs  # axes (alpha, beta, gamma, delta) after the modes

    def arrange(src):
        """Array with value axes ordered (q,i,j,k), reading q,i,j,k from the
        given source axes of d2 (0=alpha..3=delta)."""
        return np.moveaxis(d2, [nm + s for s in src],
                           [nm, nm + 1, nm + 2, nm + 3])

    # Q(q,i,j,k) = d2[i,j,q,k] + d2[q,k,i,j] - d2[q,j,i,k] - d2[i,k,q,j]
    Q = arrange((2, 0, 1, 3)) + arrange((0, 2, 3, 1)) \
        - arrange((0, 2, 1, 3)) - arrange((2, 0, 3, 1))
    rbar = FourierTensorField(model, 2,
                              0.5 * np.trace(Q, axis1=nm + 1, axis2=nm + 3))
    lhs = 2.0 * rbar.inner(deltaD(dD(h)))
    rhs = 2.0 * laplace(h).norm_sq()
    return lhs, rhs


def adjointness_checks(model: FlatTorusModel, seed=0) -> dict:
    """Measured adjointness on random fields; the (dD, deltaD) sign is
    recorded as sigma."""
    h = FourierTensorField.random(model, 2, seed=seed)
    h = 0.5 * (h + _transpose2(h))
    w = FourierTensorField.random(model, 1, seed=seed + 1)
    A = FourierTensorField.random(model, 3, seed=seed + 2)
    nm = model.n
    A = FourierTensorField(model, 3,
                           0.5 * (A.coeffs - np.swapaxes(A.coeffs, nm + 1, nm + 2)))
    out = {}
    lhs = delta_g(h).inner(w)
    rhs = h.inner(delta_g_star(w))
    out["delta_pair"] = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)
    lhs2 = dD(h).inner(A)
    rhs2 = h.inner(deltaD(A))
    sigma = 1 if abs(lhs2 - rhs2) <= abs(lhs2 + rhs2) else -1
    out["dD_pair_sign"] = sigma
    out["dD_pair"] = abs(lhs2 - sigma * rhs2) / max(abs(lhs2), abs(rhs2), 1e-30)
    return out
