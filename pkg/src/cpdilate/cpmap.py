"""Completely positive maps between multi-matrix algebras.

A map is stored as a coordinate action matrix.  Complete positivity is
certified blockwise through Choi matrices over the source matrix units;
for maps between full algebras a deterministic Kraus/Stinespring form is
derived from the Choi eigendecomposition.
"""

from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg_mod
from .algebra import (AlgebraElement, MatrixBlockAlgebra, coordinate_basis,
                      coordinates, element_from_coordinates, identity,
                      represent, state_value)
from .errors import (AlgebraMismatch, NotCP, NotFullAlgebra,
                     NotHermitianPreserving)
from .numerics import (DEFAULT_TOL, as_complex, frob, hermitian_eig)


@dataclass(frozen=True)
class CPMap:
    """Linear map between standard-form algebras with cached CP certificates.

    ``action`` sends source coordinates to target coordinates.  ``is_cp``
    and ``is_unital`` are verification flags, not promises: building a map
    that fails them is allowed, and the flags say so.
    """

    source: MatrixBlockAlgebra
    target: MatrixBlockAlgebra
    action: np.ndarray
    choi_blocks: tuple = field(repr=False)
    is_cp: bool = True
    is_unital: bool = True
    choi_min_eigenvalue: float = 0.0

    def __call__(self, a):
        return apply(self, a)


def _choi_block(source_block_dim: int, applied_ambient: np.ndarray) -> np.ndarray:
    """Choi matrix Σ_{uv} E_uv ⊗ S(E_uv) for one source block.

    ``applied_ambient`` has shape (d², n, n): ambient images of the block's
    matrix units in row-major (u, v) order.
    """
    d = source_block_dim
    n = applied_ambient.shape[-1]
    c = applied_ambient.reshape(d, d, n, n).transpose(0, 2, 1, 3).reshape(d * n, d * n)
    return c


def make_cpmap(source: MatrixBlockAlgebra, target: MatrixBlockAlgebra,
               action, tol: float = DEFAULT_TOL) -> CPMap:
    """Build a CPMap and certify *-preservation, complete positivity and
    unitality.

    Raises NotHermitianPreserving when S(a*) ≠ S(a)* on the coordinate
    basis; CP and unitality failures are recorded as flags.
    """
    action = as_complex(action)
    expected = (target.coord_dim, source.coord_dim)
    if action.shape != expected:
        raise ValueError(f"action shape {action.shape}, expected {expected}")

    basis = coordinate_basis(source)
    images = [element_from_coordinates(target, action[:, i])
              for i in range(len(basis))]

    # *-preservation: the image of E_vu must be the adjoint of the image of E_uv.
    scale = max(1.0, frob(action))
    star_residual = 0.0
    pos = 0
    for d, _ in source.blocks:
        for u in range(d):
            for v in range(d):
                i_uv = pos + u * d + v
                i_vu = pos + v * d + u
                diff = images[i_vu] - images[i_uv].adjoint()
                star_residual = max(star_residual, diff.norm())
        pos += d * d
    if star_residual > tol * scale:
        raise NotHermitianPreserving(
            f"map is not *-preserving (residual {star_residual:.3e})")

    # Per-source-block Choi matrices; CP iff all are PSD.
    choi_blocks = []
    min_eig = np.inf
    pos = 0
    for d, _ in source.blocks:
        applied = np.stack([represent(images[pos + k]) for k in range(d * d)])
        c = _choi_block(d, applied)
        eig = hermitian_eig(c, tol)
        lam_min = float(eig.values[-1])
        min_eig = min(min_eig, lam_min if eig.values.size else 0.0)
        choi_blocks.append(c)
        pos += d * d
    choi_scale = max(frob(c) for c in choi_blocks)
    is_cp = bool(min_eig >= -tol * max(choi_scale, 1.0))

    unit_diff = action @ coordinates(identity(source)) - coordinates(identity(target))
    is_unital = bool(np.linalg.norm(unit_diff) <= tol * max(1.0, np.sqrt(target.coord_dim)))

    return CPMap(source=source, target=target, action=action,
                 choi_blocks=tuple(choi_blocks), is_cp=is_cp,
                 is_unital=is_unital, choi_min_eigenvalue=float(min_eig))


def apply(s: CPMap, a: AlgebraElement) -> AlgebraElement:
    if a.algebra != s.source:
        raise AlgebraMismatch("element does not belong to the source algebra")
    return element_from_coordinates(s.target, s.action @ coordinates(a))


def apply_ambient(s: CPMap, m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Apply to an ambient matrix of the source (decompose, map, represent)."""
    a = alg_mod.decompose(s.source, m, tol)
    return represent(apply(s, a))


def compose(s2: CPMap, s1: CPMap, tol: float = DEFAULT_TOL) -> CPMap:
    if s1.target != s2.source:
        raise AlgebraMismatch("inner target does not match outer source")
    return make_cpmap(s1.source, s2.target, s2.action @ s1.action, tol)


def identity_map(a: MatrixBlockAlgebra, tol: float = DEFAULT_TOL) -> CPMap:
    return make_cpmap(a, a, np.eye(a.coord_dim, dtype=np.complex128), tol)


def covariance_residual(s: CPMap, f, g) -> float:
    """max_a |φ_f(a) − φ_g(S(a))| over the source coordinate basis."""
    f = alg_mod.check_unit_vector(f)
    g = alg_mod.check_unit_vector(g)
    worst = 0.0
    for a in coordinate_basis(s.source):
        lhs = state_value(f, represent(a))
        rhs = state_value(g, represent(apply(s, a)))
        worst = max(worst, abs(lhs - rhs))
    return worst


def check_covariance(s: CPMap, f, g, tol: float = DEFAULT_TOL) -> bool:
    """True iff the vector states transport through S: φ_f = φ_g ∘ S."""
    return covariance_residual(s, f, g) <= tol


@dataclass(frozen=True)
class KrausForm:
    """Kraus operators and the assembled Stinespring isometry of a map
    between full algebras.

    Each entry of ``operators`` maps G → F; the isometry stacks them into
    G → F⊗L with the L leg slowest, so ``Z(x) = ξ*(x ⊗ I_L)ξ``.
    """

    l_dim: int
    operators: tuple
    isometry: np.ndarray
    reconstruction_residual: float
    completeness_residual: float


def kraus_decomposition(z: CPMap, tol: float = DEFAULT_TOL) -> KrausForm:
    """Deterministic Kraus form of a CP map between full matrix algebras.

    The Choi matrix is eigendecomposed with descending eigenvalues and
    canonical phases; L is its numerical rank.  Eigenvalue clusters make
    individual operators basis-dependent, but the span and the isometry's
    range are not.
    """
    if not (z.source.is_full() and z.target.is_full()):
        raise NotFullAlgebra("Kraus form requires full single-block algebras")
    if not z.is_cp:
        raise NotCP("map is not completely positive")
    dim_f = z.source.blocks[0][0]
    dim_g = z.target.blocks[0][0]
    choi = z.choi_blocks[0]
    eig = hermitian_eig(choi, tol)
    threshold = tol * eig.scale
    kept = eig.values > threshold
    l_dim = int(np.count_nonzero(kept))
    ops = []
    for k in range(l_dim):
        vec = np.sqrt(eig.values[k]) * eig.vectors[:, k]
        ops.append(np.conj(vec.reshape(dim_f, dim_g)))
    isometry = (np.vstack(ops) if ops
                else np.zeros((0, dim_g), dtype=np.complex128))

    basis = coordinate_basis(z.source)
    recon = 0.0
    for i, a in enumerate(basis):
        direct = represent(apply(z, a))
        m = a.block_matrices[0]
        summed = sum(op.conj().T @ m @ op for op in ops) if ops else np.zeros_like(direct)
        recon = max(recon, frob(direct - summed))
    complete = frob(sum(op.conj().T @ op for op in ops) - np.eye(dim_g)) if ops else float(dim_g)
    return KrausForm(l_dim=l_dim, operators=tuple(ops), isometry=isometry,
                     reconstruction_residual=recon,
                     completeness_residual=complete)


def full_algebra_map_from_ambient(source: MatrixBlockAlgebra,
                                  target: MatrixBlockAlgebra,
                                  fn, tol: float = DEFAULT_TOL) -> CPMap:
    """CPMap from a callable acting on ambient matrices of a full source."""
    if not source.is_full():
        raise NotFullAlgebra("ambient construction requires a full source")
    basis = coordinate_basis(source)
    cols = []
    for a in basis:
        img = fn(represent(a))
        cols.append(coordinates(alg_mod.decompose(target, img, max(tol, 1e-9))))
    return make_cpmap(source, target, np.stack(cols, axis=1), tol)
