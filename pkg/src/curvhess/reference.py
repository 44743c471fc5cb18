"""Previously reported constants for the space-form Hessian chain.

These are the published values the engine's derivations are compared
against.  They are comparison targets only: the report marks each one
match/mismatch against the machine-derived value, with both independent
oracles required to agree before a mismatch is called.

Known internal tensions among the reported values themselves (flagged in
the comparison report):

* the reported r_Q display carries the coefficient 2c(m+4) while the prose
  line drops the factor c entirely;
* the reported final |h|^2 coefficient 4c^2 m(4m+5) is not what the
  reported intermediate values sum to (they give 4c^2(5m+4)); the two
  agree only at m = 1, where both equal 36 c^2;
* expanding the reported completed square |D*Dh + (m-3)c h|^2 +
  (15m^2+14m+6)c^2|h|^2 against the reported quadratic form leaves the
  residual (15m^2+26m-9)c^2 instead.
"""

import sympy as sp

from .expr import c, m

REPORTED = {
    "einstein_constant": 2 * (m + 1) * c,
    "curvature_norm_sq": 32 * m * (m + 1) * c ** 2,
    "rring_scale": 2 * c,
    # (S,h) = c|Dh|^2 + 6c^2|h|^2
    "s_pairing_Dh": c,
    "s_pairing_h": 6 * c ** 2,
    # r_Q = D*Dh + 2c(m+4) h  (display); the prose line reads 2(m+4) h
    "r_q_h": 2 * c * (m + 4),
    "r_q_h_prose": 2 * (m + 4),
    # <Rcheck'(h), h> = 2c|Dh|^2 - 12 m c^2 |h|^2
    "rcheck_prime_Dh": 2 * c,
    "rcheck_prime_h": -12 * m * c ** 2,
    # Hessian bracket |D*Dh|^2 + 2c(m-3)|Dh|^2 + 4c^2 m(4m+5)|h|^2
    "hessian_a": sp.Integer(1),
    "hessian_b": 2 * c * (m - 3),
    "hessian_d": 4 * c ** 2 * m * (4 * m + 5),
    # what the reported intermediates actually sum to
    "hessian_d_resummed": 4 * c ** 2 * (5 * m + 4),
    # completed-square residual (15 m^2 + 14 m + 6) c^2
    "square_residual": (15 * m ** 2 + 14 * m + 6) * c ** 2,
    "square_residual_expanded": (15 * m ** 2 + 26 * m - 9) * c ** 2,
}
