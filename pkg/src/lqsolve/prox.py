"""Scalar and vector lq thresholding operators.

For c > 0 and 0 < q < 1 the scalar operator maps z to a minimizer of

    f(v) = (z - v)^2 / 2 + c * |v|^q.

The minimizer is 0 for |z| below a jump threshold tau, and otherwise the
unique root of  v + c*q*v^(q-1) = |z|  on [eta, |z|] (with the sign of z),
where

    eta = (2*c*(1-q)) ** (1/(2-q)),
    tau = (2-q) / (2-2*q) * eta.

At |z| == tau both branches minimize; the tie goes to the nonzero branch
exactly when the previous value of that coordinate was nonzero.  Outputs
are therefore always either 0 or at least eta in magnitude.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, InvalidInstance

DEFAULT_PROX_TOL = 1e-12


@dataclass(frozen=True)
class ProxParams:
    """Threshold parameters: c is the product lambda*mu, q the exponent."""

    c: float
    q: float
    tau: float = 0.0  # derived, set in __post_init__
    eta: float = 0.0  # derived, set in __post_init__

    def __post_init__(self):
        if not (self.c > 0):
            raise InvalidInstance(f"c must be positive, got {self.c}")
        if not (0.0 < self.q < 1.0):
            raise InvalidInstance(f"q must lie in (0, 1), got {self.q}")
        eta = (2.0 * self.c * (1.0 - self.q)) ** (1.0 / (2.0 - self.q))
        tau = (2.0 - self.q) / (2.0 - 2.0 * self.q) * eta
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "tau", tau)


def thresholds(params):
    """Return (tau, eta): the jump threshold and the minimum nonzero output."""
    return params.tau, params.eta


def _g(v, c, q):
    return v + c * q * v ** (q - 1.0)


def solve_inverse(z_abs, params, tol=DEFAULT_PROX_TOL):
    """Root of g(v) = v + c*q*v^(q-1) = z_abs on [eta, z_abs].

    g is strictly increasing and convex there (g'(eta) = 1 - q/2 > 0), so a
    Newton iteration started at the right end descends monotonically onto
    the root; a bisection safeguard keeps it inside the bracket regardless.
    Requires z_abs >= tau, i.e. g(eta) <= z_abs.
    """
    c, q, eta = params.c, params.q, params.eta
    if z_abs < params.tau:
        raise InvalidInstance(
            f"solve_inverse needs z_abs >= tau ({params.tau:g}), got {z_abs:g}")
    lo, hi = eta, z_abs
    v = z_abs
    for _ in range(200):
        g = _g(v, c, q) - z_abs
        if abs(g) <= tol:
            return v
        if g > 0.0:
            hi = v
        else:
            lo = v
        gp = 1.0 + c * q * (q - 1.0) * v ** (q - 2.0)
        step_ok = gp > 0.0
        if step_ok:
            v_new = v - g / gp
            step_ok = lo <= v_new <= hi
        if not step_ok:
            v_new = 0.5 * (lo + hi)
        if abs(v_new - v) <= tol:
            return v_new
        v = v_new
    raise ConvergenceFailure(f"prox root-finder stalled at z_abs={z_abs:g}")


def prox_scalar(z, x_prev, params, tol=DEFAULT_PROX_TOL):
    """Single-valued thresholding of z, with x_prev breaking the tie at tau."""
    z_abs = abs(z)
    if z_abs < params.tau:
        return 0.0
    if z_abs > params.tau:
        return math.copysign(solve_inverse(z_abs, params, tol), z)
    if x_prev != 0.0:
        return math.copysign(params.eta, z)
    return 0.0


def prox_vector(z, x_prev, params, tol=DEFAULT_PROX_TOL):
    """Componentwise prox_scalar, vectorized over the active coordinates."""
    z = np.asarray(z, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    if z.shape != x_prev.shape:
        raise DimensionMismatch(
            f"z and x_prev must match, got {z.shape} vs {x_prev.shape}")
    c, q, tau, eta = params.c, params.q, params.tau, params.eta
    z_abs = np.abs(z)
    out = np.zeros_like(z)

    tie = z_abs == tau
    if np.any(tie):
        out[tie] = np.sign(z[tie]) * eta * (x_prev[tie] != 0.0)

    active = z_abs > tau
    if np.any(active):
        za = z_abs[active]
        v = za.copy()
        lo = np.full_like(za, eta)
        hi = za.copy()
        for _ in range(200):
            g = v + c * q * v ** (q - 1.0) - za
            done = np.abs(g) <= tol
            if done.all():
                break
            np.copyto(hi, v, where=(g > 0.0) & ~done)
            np.copyto(lo, v, where=(g <= 0.0) & ~done)
            gp = 1.0 + c * q * (q - 1.0) * v ** (q - 2.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                v_new = v - g / gp
            bad = (gp <= 0.0) | (v_new < lo) | (v_new > hi) | ~np.isfinite(v_new)
            v_new = np.where(bad, 0.5 * (lo + hi), v_new)
            v = np.where(done, v, v_new)
        else:
            raise ConvergenceFailure("vector prox root-finder stalled")
        out[active] = np.sign(z[active]) * v
    return out
