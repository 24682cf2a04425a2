"""Dense complex-matrix kernel with explicit tolerances.

All decompositions used elsewhere in the package funnel through this module
so that thresholding and eigenvector phase conventions are fixed in exactly
one place.  Tolerances are relative to the spectral scale of the input; the
matrices handled here are O(1) at desk scale, so the default of 1e-10 leaves
five to six orders of magnitude of headroom above double-precision noise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, NonHermitian, NotPSD

DEFAULT_TOL = 1e-10


def as_complex(m) -> np.ndarray:
    """Return a complex128 array view/copy of ``m``."""
    return np.asarray(m, dtype=np.complex128)


def frob(m) -> float:
    """Frobenius norm, used as the residual norm throughout the package."""
    return float(np.linalg.norm(m))


def check_finite(m, what="matrix"):
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{what} contains NaN or Inf entries")


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    ``values`` are sorted descending; ``vectors`` holds the matching
    eigenvector columns, each phase-normalized so that its coordinate of
    largest modulus (first such index on ties) is real and positive.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def scale(self) -> float:
        """Spectral norm of the decomposed matrix."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _canonical_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col)))
        pivot = col[idx]
        mag = abs(pivot)
        if mag > 0.0:
            out[:, k] = col * (np.conj(pivot) / mag)
    return out


def hermitian_eig(m, tol: float = DEFAULT_TOL) -> HermitianEig:
    """Eigendecomposition with descending eigenvalues and canonical phases.

    Raises NonHermitian if ``‖m − m*‖ > tol·‖m‖`` and NonFinite on NaN/Inf.
    Inside a degenerate cluster only cluster-invariant quantities (spectral
    projections, traces) are contract-bearing; individual columns are not.
    """
    m = as_complex(m)
    check_finite(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonHermitian(f"expected a square matrix, got shape {m.shape}")
    scale = frob(m)
    if frob(m - m.conj().T) > tol * scale:
        raise NonHermitian("matrix is not Hermitian within tolerance")
    values, vectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.arange(values.size)[::-1]  # eigh is ascending; flip
    values = np.ascontiguousarray(values[order])
    vectors = np.ascontiguousarray(vectors[:, order])
    return HermitianEig(values=values, vectors=_canonical_phases(vectors))


@dataclass(frozen=True)
class PsdFunctions:
    """Square root, pseudo-inverse square root and support projection of a
    positive semidefinite matrix, all sharing one spectral threshold."""

    sqrt: np.ndarray
    pinv_sqrt: np.ndarray
    support: np.ndarray
    rank: int


def psd_functions(m, tol: float = DEFAULT_TOL, scale: float | None = None) -> PsdFunctions:
    """Spectral functions of a PSD matrix.

    Eigenvalues in [−tol·scale, tol·scale] are clamped to zero; anything
    below the band raises NotPSD.  ``scale`` defaults to the spectral norm
    of ``m`` itself; pass an external scale when ``m`` is one block of a
    larger positive element so that near-zero blocks do not keep junk
    directions alive.
    """
    eig = hermitian_eig(m, tol)
    if scale is None:
        scale = eig.scale
    threshold = tol * scale
    if eig.values.size and eig.values[-1] < -threshold:
        raise NotPSD(f"eigenvalue {eig.values[-1]:.3e} below -{threshold:.3e}")
    kept = eig.values > threshold
    lam = np.where(kept, eig.values, 0.0)
    v = eig.vectors
    sqrt = (v * np.sqrt(lam)) @ v.conj().T
    inv = np.zeros_like(lam)
    inv[kept] = 1.0 / np.sqrt(lam[kept])
    pinv_sqrt = (v * inv) @ v.conj().T
    support = (v * kept.astype(float)) @ v.conj().T
    return PsdFunctions(sqrt=sqrt, pinv_sqrt=pinv_sqrt, support=support,
                        rank=int(np.count_nonzero(kept)))


def null_space(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of ``m``.

    The rank cut is at singular values > tol·σ_max, so the zero matrix
    returns the full space and an injective matrix returns an empty basis.
    """
    m = as_complex(m)
    check_finite(m)
    if m.size == 0:
        return np.eye(m.shape[1], dtype=np.complex128)
    _, s, vh = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax))
    return vh[rank:].conj().T


def solve_least_squares(a, b, tol: float = DEFAULT_TOL):
    """Minimal-norm least-squares solution of ``a @ x = b``.

    Returns ``(x, residual)`` with the residual reported exactly as
    achieved, ``‖a@x − b‖`` in the Frobenius norm.
    """
    a = as_complex(a)
    b = as_complex(b)
    check_finite(a, "lhs")
    check_finite(b, "rhs")
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=tol)
    return x, frob(a @ x - b)


def matrix_rank(m, tol: float = DEFAULT_TOL) -> int:
    """Numerical rank via singular values > tol·σ_max."""
    m = as_complex(m)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    smax = s[0] if s.size else 0.0
    return int(np.count_nonzero(s > tol * smax))


def orthonormal_columns(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``m``."""
    m = as_complex(m)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax))
    return u[:, :rank]
