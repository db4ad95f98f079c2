"""Cyclic (Gauss-Seidel) and full-vector (Jacobi) iterative thresholding.

The cyclic solver updates one coordinate per inner step against a cached
residual r = A x - y (rank-1 updates, refreshed once per sweep); the
Jacobi baseline recomputes the full gradient every sweep.  One *sweep*
means N coordinate updates for the cyclic solver and one full-vector
update for the Jacobi one; traces are recorded at sweep granularity.
"""

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import ProblemInstance, objective_from_residual
from .errors import DimensionMismatch, InvalidInstance
from .prox import DEFAULT_PROX_TOL, ProxParams, prox_scalar, prox_vector

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False

DIVERGENCE_FACTOR = 1e6


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class IterateChange:
    """Stop once the largest per-update step in a full sweep is <= tol."""

    tol: float = 1e-10


@dataclass(frozen=True)
class RmseVsReference:
    """Stop once ||x - reference|| / ||reference|| <= tol (needs ground truth)."""

    tol: float
    reference: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "reference",
                           core.as_vector(self.reference, "reference"))


@dataclass(frozen=True)
class SweepCapOnly:
    """Run until max_sweeps; never stop early."""


@dataclass
class SolverConfig:
    mu: float
    max_sweeps: int = 10_000
    stop_rule: object = field(default_factory=IterateChange)
    record_every: int = 1          # in sweeps; initial state and final sweep always recorded
    prox_tol: float = DEFAULT_PROX_TOL
    trace_reference: np.ndarray | None = None  # RMSE column even without an RMSE stop
    record_iterates: bool = False
    timing: bool = False

    def __post_init__(self):
        if not (self.mu > 0):
            raise InvalidInstance(f"mu must be positive, got {self.mu}")
        if self.max_sweeps < 0 or self.record_every < 1:
            raise InvalidInstance("max_sweeps must be >= 0 and record_every >= 1")

    def reference(self):
        if isinstance(self.stop_rule, RmseVsReference):
            return self.stop_rule.reference
        return self.trace_reference


@dataclass
class SolverState:
    """Iterate x, update counter n, cached residual A x - y, objective value."""

    x: np.ndarray
    n: int
    residual: np.ndarray
    objective: float

    @classmethod
    def initial(cls, p, x0):
        x = core.as_vector(x0, "x0").copy()
        if x.shape[0] != p.n:
            raise DimensionMismatch(f"x0 has length {x.shape[0]}, expected {p.n}")
        r = p.A @ x - p.y
        return cls(x=x, n=0, residual=r, objective=objective_from_residual(p, x, r))


class IterationTrace:
    """Per-sweep records plus run flags and sign history.

    Columns: sweep, n (update counter), objective, step_norm (euclidean
    norm of the change since the previous record), support_size, rmse
    (nan when no reference), elapsed_s (0 when timing is off).
    """

    COLUMNS = ("sweep", "n", "objective", "step_norm",
               "support_size", "rmse", "elapsed_s")

    def __init__(self):
        self.rows = []          # list of 7-tuples, see COLUMNS
        self.signs = []         # int8 arrays, aligned with rows
        self.iterates = []      # optional float arrays, aligned with rows
        self.flags = {}

    def record(self, sweep, n, obj, step_norm, x, rmse, elapsed, keep_iterate):
        self.rows.append((sweep, n, obj, step_norm,
                          int(np.count_nonzero(x)), rmse, elapsed))
        self.signs.append(np.sign(x).astype(np.int8))
        if keep_iterate:
            self.iterates.append(x.copy())

    def column(self, name):
        idx = self.COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def sign_history(self):
        return np.vstack(self.signs)

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for sweep, n, obj, step, supp, rmse, elapsed in self.rows:
                writer.writerow([sweep, n, _fmt(obj), _fmt(step),
                                 supp, _fmt(rmse), _fmt(elapsed)])

    @classmethod
    def from_csv(cls, path):
        trace = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != cls.COLUMNS:
                raise InvalidInstance(f"unexpected trace header: {header}")
            for row in reader:
                trace.rows.append((int(row[0]), int(row[1]), float(row[2]),
                                   float(row[3]), int(row[4]), float(row[5]),
                                   float(row[6])))
        return trace


def _fmt(x):
    # shortest round-trip decimal form; survives the text boundary exactly
    return repr(float(x))


# ---------------------------------------------------------------------------
# coordinate updates

def select_index(n, N):
    """Cyclic 1-based coordinate index for update counter n (0-based)."""
    if N < 1 or n < 0:
        raise InvalidInstance("select_index needs N >= 1 and n >= 0")
    r = (n + 1) % N
    return N if r == 0 else r


def coordinate_forward_step(state, p, mu, i):
    """Unregularized descent for coordinate i (0-based): x_i - mu * A_i^T r."""
    return float(state.x[i] - mu * np.dot(p.A[:, i], state.residual))


def gaita_update(state, p, config):
    """One cyclic coordinate update; returns the successor state.

    Reference implementation used by the diagnostics and the tests; the
    run loop below executes the same arithmetic through a compiled sweep
    kernel.
    """
    n_dim = p.n
    i = select_index(state.n, n_dim) - 1
    params = ProxParams(c=p.lam * config.mu, q=p.q)
    z_i = coordinate_forward_step(state, p, config.mu, i)
    x_new = state.x.copy()
    x_new[i] = prox_scalar(z_i, state.x[i], params, config.prox_tol)
    delta = x_new[i] - state.x[i]
    r_new = state.residual.copy()
    if delta != 0.0:
        r_new += delta * p.A[:, i]
    return SolverState(x=x_new, n=state.n + 1, residual=r_new,
                       objective=objective_from_residual(p, x_new, r_new))


def _sweep_python(A, x, r, mu, c, q, tau, eta, tol):
    n_dim = A.shape[1]
    params = ProxParams(c=c, q=q)
    max_step = 0.0
    for i in range(n_dim):
        z = x[i] - mu * np.dot(A[:, i], r)
        xi = prox_scalar(z, x[i], params, tol)
        d = xi - x[i]
        if d != 0.0:
            r += d * A[:, i]
            x[i] = xi
            if abs(d) > max_step:
                max_step = abs(d)
    return max_step


if _HAVE_NUMBA:

    @njit(cache=True)
    def _sweep_numba(A, x, r, mu, c, q, tau, eta, tol):  # pragma: no cover
        n_dim = A.shape[1]
        max_step = 0.0
        for i in range(n_dim):
            z = x[i] - mu * np.dot(A[:, i], r)
            z_abs = abs(z)
            if z_abs < tau:
                xi = 0.0
            elif z_abs == tau:
                xi = math.copysign(eta, z) if x[i] != 0.0 else 0.0
            else:
                lo = eta
                hi = z_abs
                v = z_abs
                for _ in range(200):
                    g = v + c * q * v ** (q - 1.0) - z_abs
                    if abs(g) <= tol:
                        break
                    if g > 0.0:
                        hi = v
                    else:
                        lo = v
                    gp = 1.0 + c * q * (q - 1.0) * v ** (q - 2.0)
                    ok = gp > 0.0
                    if ok:
                        v_new = v - g / gp
                        ok = lo <= v_new <= hi
                    if not ok:
                        v_new = 0.5 * (lo + hi)
                    if abs(v_new - v) <= tol:
                        v = v_new
                        break
                    v = v_new
                xi = math.copysign(v, z)
            d = xi - x[i]
            if d != 0.0:
                r += d * A[:, i]
                x[i] = xi
                if abs(d) > max_step:
                    max_step = abs(d)
        return max_step

    _sweep = _sweep_numba
else:
    _sweep = _sweep_python


# ---------------------------------------------------------------------------
# run loops

def _rmse_vs(x, ref):
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))


def gaita_run(p, x0, config):
    """Run the cyclic solver from x0; returns (final state, trace).

    Hitting max_sweeps without the stop rule firing is not an error: the
    trace carries flags ``converged`` / ``did_not_converge``.  A
    ``mu_warning`` flag marks mu >= 1/L_max (convergence theory void).
    """
    state = SolverState.initial(p, x0)
    lmax = core.l_max(p.A)
    params = ProxParams(c=p.lam * config.mu, q=p.q)
    ref = config.reference()
    trace = IterationTrace()
    trace.flags = {
        "algorithm": "gaita",
        "mu_warning": bool(config.mu >= 1.0 / lmax),
        "converged": False,
        "diverged": False,
        "did_not_converge": False,
        "sweeps": 0,
    }

    t0 = time.perf_counter()
    elapsed = lambda: time.perf_counter() - t0 if config.timing else 0.0
    rmse = _rmse_vs(state.x, ref) if ref is not None else math.nan
    trace.record(0, 0, state.objective, math.nan, state.x, rmse, 0.0,
                 config.record_iterates)

    x, r = state.x, state.residual
    n_dim = p.n
    x_prev_rec = x.copy()
    for sweep in range(1, config.max_sweeps + 1):
        max_step = _sweep(p.A, x, r, config.mu, params.c, params.q,
                          params.tau, params.eta, config.prox_tol)
        r[:] = p.A @ x - p.y  # per-sweep refresh bounds rank-1 drift
        obj = objective_from_residual(p, x, r)
        rmse = _rmse_vs(x, ref) if ref is not None else math.nan

        stop = False
        if isinstance(config.stop_rule, IterateChange):
            stop = max_step <= config.stop_rule.tol
        elif isinstance(config.stop_rule, RmseVsReference):
            stop = rmse <= config.stop_rule.tol

        if stop or sweep % config.record_every == 0 or sweep == config.max_sweeps:
            trace.record(sweep, sweep * n_dim, obj,
                         float(np.linalg.norm(x - x_prev_rec)), x, rmse,
                         elapsed(), config.record_iterates)
            x_prev_rec = x.copy()
        if stop:
            trace.flags["converged"] = True
            trace.flags["sweeps"] = sweep
            break
    else:
        trace.flags["did_not_converge"] = not isinstance(
            config.stop_rule, SweepCapOnly)
        trace.flags["sweeps"] = config.max_sweeps

    state.n = trace.flags["sweeps"] * n_dim
    state.objective = objective_from_residual(p, x, r)
    return state, trace


def jaita_update(state, p, config):
    """One full-vector thresholded gradient step; returns the successor state."""
    params = ProxParams(c=p.lam * config.mu, q=p.q)
    z = state.x - config.mu * (p.A.T @ state.residual)
    x_new = prox_vector(z, state.x, params, config.prox_tol)
    r_new = p.A @ x_new - p.y
    return SolverState(x=x_new, n=state.n + 1, residual=r_new,
                       objective=objective_from_residual(p, x_new, r_new))


def jaita_run(p, x0, config):
    """Run the Jacobi baseline; aborts with a ``diverged`` flag once the
    objective exceeds 1e6 times its initial value."""
    state = SolverState.initial(p, x0)
    ref = config.reference()
    trace = IterationTrace()
    trace.flags = {
        "algorithm": "jaita",
        "mu_warning": bool(config.mu >= 1.0 / core.spectral_norm_sq(p.A)),
        "converged": False,
        "diverged": False,
        "did_not_converge": False,
        "sweeps": 0,
    }
    obj0 = state.objective
    guard = DIVERGENCE_FACTOR * obj0 if obj0 > 0 else DIVERGENCE_FACTOR

    t0 = time.perf_counter()
    elapsed = lambda: time.perf_counter() - t0 if config.timing else 0.0
    rmse = _rmse_vs(state.x, ref) if ref is not None else math.nan
    trace.record(0, 0, state.objective, math.nan, state.x, rmse, 0.0,
                 config.record_iterates)

    for sweep in range(1, config.max_sweeps + 1):
        new = jaita_update(state, p, config)
        step_norm = float(np.linalg.norm(new.x - state.x))
        state = new
        rmse = _rmse_vs(state.x, ref) if ref is not None else math.nan

        diverged = state.objective > guard
        stop = False
        if isinstance(config.stop_rule, IterateChange):
            stop = step_norm <= config.stop_rule.tol
        elif isinstance(config.stop_rule, RmseVsReference):
            stop = rmse <= config.stop_rule.tol

        if (stop or diverged or sweep % config.record_every == 0
                or sweep == config.max_sweeps):
            trace.record(sweep, sweep, state.objective, step_norm, state.x,
                         rmse, elapsed(), config.record_iterates)
        trace.flags["sweeps"] = sweep
        if diverged:
            trace.flags["diverged"] = True
            break
        if stop:
            trace.flags["converged"] = True
            break
    else:
        trace.flags["did_not_converge"] = not isinstance(
            config.stop_rule, SweepCapOnly)
    return state, trace
