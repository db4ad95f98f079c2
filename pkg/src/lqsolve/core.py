"""Dense linear algebra primitives and the regression problem data model.

The problem solved throughout the package is

    minimize  T(x) = 0.5 * ||A x - y||_2^2 + lam * sum_i |x_i|^q,   0 < q < 1.

Everything here works on plain float64 numpy arrays; ``as_vector`` /
``as_matrix`` validate shape and finiteness at the boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMatrix, ConvergenceFailure, DimensionMismatch, InvalidInstance


def as_vector(v, name="vector"):
    """Coerce to a finite 1-d float64 array."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInstance(f"{name} contains non-finite entries")
    return v


def as_matrix(a, name="matrix"):
    """Coerce to a finite 2-d float64 array."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {a.shape}")
    if a.size == 0:
        raise InvalidInstance(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise InvalidInstance(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class ProblemInstance:
    """One regularized least-squares datum: matrix A (m x N), observation y,
    penalty weight lam > 0 and exponent q in (0, 1)."""

    A: np.ndarray
    y: np.ndarray
    lam: float
    q: float

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        y = as_vector(self.y, "y")
        # Fortran order makes column slices views; the coordinate loop leans on that.
        object.__setattr__(self, "A", np.asfortranarray(A))
        object.__setattr__(self, "y", y)
        if y.shape[0] != A.shape[0]:
            raise DimensionMismatch(
                f"y has length {y.shape[0]}, expected {A.shape[0]}")
        if not (self.lam > 0):
            raise InvalidInstance(f"lam must be positive, got {self.lam}")
        if not (0.0 < self.q < 1.0):
            raise InvalidInstance(f"q must lie in (0, 1), got {self.q}")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def matvec(A, x):
    """Matrix-vector product A @ x with dimension checking."""
    A = as_matrix(A, "A")
    x = as_vector(x, "x")
    if x.shape[0] != A.shape[1]:
        raise DimensionMismatch(
            f"x has length {x.shape[0]}, expected {A.shape[1]}")
    return A @ x


def column_norms_sq(A):
    """Squared Euclidean norm of every column of A."""
    A = as_matrix(A, "A")
    return np.einsum("ij,ij->j", A, A)


def l_max(A):
    """Largest squared column norm, the step-size bound for the cyclic solver."""
    return float(np.max(column_norms_sq(A)))


def spectral_norm_sq(A, tol=1e-10, max_iter=50_000):
    """Squared spectral norm ||A||_2^2 via power iteration on A^T A.

    The start vector is the normalized all-ones vector so results are
    reproducible without seed plumbing.  ``tol`` is relative on the
    Rayleigh quotient between consecutive iterations.
    """
    A = as_matrix(A, "A")
    g = A.T @ A
    n = g.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = g @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (g @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    raise ConvergenceFailure(
        f"power iteration did not reach rel. tol {tol} in {max_iter} iterations")


def min_eig_symmetric(M, tol=1e-10):
    """Smallest eigenvalue of a symmetric matrix.

    Delegates to LAPACK (eigvalsh), which resolves eigenvalues well below
    the default 1e-10 absolute tolerance; ``tol`` only gates the symmetry
    check on the input.
    """
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got shape {M.shape}")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > max(tol, 1e-10):
        raise AsymmetricMatrix(f"M deviates from symmetry by {asym:g}")
    return float(np.linalg.eigvalsh(M)[0])


def objective(p, x):
    """Objective value 0.5*||Ax - y||^2 + lam * sum |x_i|^q (with |0|^q = 0)."""
    x = as_vector(x, "x")
    if x.shape[0] != p.n:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {p.n}")
    r = p.A @ x - p.y
    return 0.5 * float(r @ r) + p.lam * float(np.sum(np.abs(x) ** p.q))


def objective_from_residual(p, x, r):
    """Objective using a precomputed residual r = A x - y."""
    return 0.5 * float(r @ r) + p.lam * float(np.sum(np.abs(x) ** p.q))
