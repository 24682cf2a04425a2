"""Finite-dimensional von Neumann algebras in standard form.

An algebra is a direct sum of full matrix blocks with multiplicities,
``⊕_i M_{d_i} ⊗ I_{m_i}``, acting on an ambient Hilbert space of dimension
``Σ d_i·m_i``.  The ambient basis ordering is fixed once and for all:
block-major, then block-row index, then multiplicity index.  The commutant
lives on the same ambient space with the tensor legs of each block swapped,
so commutants are closed-form and the double commutant is bit-identical to
the original.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionCap, NotInAlgebra
from .numerics import DEFAULT_TOL, as_complex, frob

MEMBERSHIP_TOL = 1e-9
AMBIENT_CAP = 64


@dataclass(frozen=True)
class MatrixBlockAlgebra:
    """Standard-form algebra ``⊕_i M_{d_i} ⊗ I_{m_i}`` on a fixed ambient basis.

    ``blocks`` lists (block_dim, multiplicity) pairs.  ``flipped`` marks a
    commutant: element matrices then act on the second tensor leg of each
    ambient block, ``I_{m_i} ⊗ c_i``, while the ambient basis ordering is
    unchanged.
    """

    blocks: tuple
    flipped: bool = False

    @property
    def ambient_dim(self) -> int:
        return sum(d * m for d, m in self.blocks)

    @property
    def coord_dim(self) -> int:
        return sum(d * d for d, _ in self.blocks)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def ambient_offsets(self):
        """Start offset of each block in the ambient basis."""
        offs, pos = [], 0
        for d, m in self.blocks:
            offs.append(pos)
            pos += d * m
        return offs

    def coord_offsets(self):
        """Start offset of each block in the flat coordinate vector."""
        offs, pos = [], 0
        for d, _ in self.blocks:
            offs.append(pos)
            pos += d * d
        return offs

    def is_full(self) -> bool:
        """True for a single block of multiplicity one, i.e. all of B(H)."""
        return len(self.blocks) == 1 and self.blocks[0][1] == 1


def make_algebra(blocks, ambient_cap: int = AMBIENT_CAP) -> MatrixBlockAlgebra:
    """Build a standard-form algebra from (dim, mult) pairs."""
    blocks = tuple((int(d), int(m)) for d, m in blocks)
    if not blocks:
        raise ValueError("algebra needs at least one block")
    for d, m in blocks:
        if d < 1 or m < 1:
            raise ValueError(f"block dims and multiplicities must be >= 1, got {(d, m)}")
    alg = MatrixBlockAlgebra(blocks=blocks)
    if alg.ambient_dim > ambient_cap:
        raise DimensionCap(f"ambient dimension {alg.ambient_dim} exceeds cap {ambient_cap}")
    return alg


def commutant(alg: MatrixBlockAlgebra) -> MatrixBlockAlgebra:
    """Commutant on the same ambient space: block list [(m_i, d_i)], legs swapped."""
    return MatrixBlockAlgebra(blocks=tuple((m, d) for d, m in alg.blocks),
                              flipped=not alg.flipped)


@dataclass(frozen=True)
class AlgebraElement:
    """Element of a MatrixBlockAlgebra, one d_i×d_i matrix per block."""

    algebra: MatrixBlockAlgebra
    block_matrices: tuple

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra,
                              tuple(b.conj().T for b in self.block_matrices))

    def __add__(self, other):
        _require_same_algebra(self, other)
        return AlgebraElement(self.algebra, tuple(
            a + b for a, b in zip(self.block_matrices, other.block_matrices)))

    def __sub__(self, other):
        _require_same_algebra(self, other)
        return AlgebraElement(self.algebra, tuple(
            a - b for a, b in zip(self.block_matrices, other.block_matrices)))

    def __mul__(self, scalar):
        return AlgebraElement(self.algebra,
                              tuple(scalar * b for b in self.block_matrices))

    __rmul__ = __mul__

    def __matmul__(self, other):
        _require_same_algebra(self, other)
        return AlgebraElement(self.algebra, tuple(
            a @ b for a, b in zip(self.block_matrices, other.block_matrices)))

    def norm(self) -> float:
        return float(np.sqrt(sum(frob(b) ** 2 for b in self.block_matrices)))


def _require_same_algebra(x: AlgebraElement, y: AlgebraElement):
    if x.algebra != y.algebra:
        raise ValueError("elements belong to different algebras")


def element(alg: MatrixBlockAlgebra, block_matrices) -> AlgebraElement:
    mats = []
    for (d, _), b in zip(alg.blocks, block_matrices, strict=True):
        b = as_complex(b).reshape(d, d)
        mats.append(b)
    return AlgebraElement(alg, tuple(mats))


def identity(alg: MatrixBlockAlgebra) -> AlgebraElement:
    return AlgebraElement(alg, tuple(np.eye(d, dtype=np.complex128)
                                     for d, _ in alg.blocks))


def zero(alg: MatrixBlockAlgebra) -> AlgebraElement:
    return AlgebraElement(alg, tuple(np.zeros((d, d), dtype=np.complex128)
                                     for d, _ in alg.blocks))


def represent(x: AlgebraElement) -> np.ndarray:
    """Ambient matrix ``⊕_i (a_i ⊗ I_{m_i})`` (legs swapped when flipped)."""
    alg = x.algebra
    n = alg.ambient_dim
    out = np.zeros((n, n), dtype=np.complex128)
    pos = 0
    for (d, m), b in zip(alg.blocks, x.block_matrices):
        size = d * m
        if alg.flipped:
            out[pos:pos + size, pos:pos + size] = np.kron(np.eye(m), b)
        else:
            out[pos:pos + size, pos:pos + size] = np.kron(b, np.eye(m))
        pos += size
    return out


def coordinates(x: AlgebraElement) -> np.ndarray:
    """Flat coordinates: block-major, row-major within each block."""
    return np.concatenate([b.reshape(-1) for b in x.block_matrices])


def element_from_coordinates(alg: MatrixBlockAlgebra, coords) -> AlgebraElement:
    coords = as_complex(coords).reshape(-1)
    if coords.size != alg.coord_dim:
        raise ValueError(f"expected {alg.coord_dim} coordinates, got {coords.size}")
    mats, pos = [], 0
    for d, _ in alg.blocks:
        mats.append(coords[pos:pos + d * d].reshape(d, d))
        pos += d * d
    return AlgebraElement(alg, tuple(mats))


def coordinate_basis(alg: MatrixBlockAlgebra):
    """Matrix-unit basis, ordered like the flat coordinates."""
    basis = []
    for bi, (d, _) in enumerate(alg.blocks):
        for u in range(d):
            for v in range(d):
                mats = [np.zeros((dd, dd), dtype=np.complex128) for dd, _ in alg.blocks]
                mats[bi][u, v] = 1.0
                basis.append(AlgebraElement(alg, tuple(mats)))
    return basis


def project_to_algebra(alg: MatrixBlockAlgebra, m):
    """Orthogonal (Hilbert–Schmidt) projection of an ambient matrix onto the
    algebra.  Returns ``(element, residual)``; the projection is the partial
    trace over the multiplicity legs of each diagonal block.
    """
    m = as_complex(m)
    n = alg.ambient_dim
    if m.shape != (n, n):
        raise ValueError(f"expected ambient shape {(n, n)}, got {m.shape}")
    mats, pos = [], 0
    for d, mult in alg.blocks:
        size = d * mult
        blk = m[pos:pos + size, pos:pos + size]
        if alg.flipped:
            t = blk.reshape(mult, d, mult, d)
            mats.append(np.einsum("asat->st", t) / mult)
        else:
            t = blk.reshape(d, mult, d, mult)
            mats.append(np.einsum("rsus->ru", t) / mult)
        pos += size
    el = AlgebraElement(alg, tuple(mats))
    return el, frob(m - represent(el))


def decompose(alg: MatrixBlockAlgebra, m, tol: float = MEMBERSHIP_TOL) -> AlgebraElement:
    """Coordinates of an ambient matrix; NotInAlgebra when the projection
    residual exceeds ``tol·max(1, ‖m‖)``."""
    el, residual = project_to_algebra(alg, m)
    if residual > tol * max(1.0, frob(m)):
        raise NotInAlgebra(
            f"matrix is not in the algebra (residual {residual:.3e})", residual)
    return el


def is_cyclic(alg: MatrixBlockAlgebra, v, tol: float = DEFAULT_TOL) -> bool:
    """True iff span{x·v : x in the coordinate basis} is the ambient space."""
    v = as_complex(v).reshape(-1)
    cols = np.stack([represent(x) @ v for x in coordinate_basis(alg)], axis=1)
    s = np.linalg.svd(cols, compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax))
    return rank == alg.ambient_dim


def state_value(v, m) -> complex:
    """Vector state ⟨v, m v⟩."""
    v = as_complex(v).reshape(-1)
    return complex(np.vdot(v, as_complex(m) @ v))


def check_unit_vector(v, tol: float = 1e-8) -> np.ndarray:
    v = as_complex(v).reshape(-1)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"expected a unit vector, got norm {nrm}")
    return v


@dataclass(frozen=True)
class ConditionalExpectation:
    """The slice map B⊗B(K) → B induced by a vector state on K.

    On elementary tensors b⊗c it returns b·ψ(c); on an ambient matrix over
    the product space (K leg slowest) it contracts the K legs against the
    state vector and decomposes the rest into B.
    """

    target: MatrixBlockAlgebra
    k_dim: int
    psi_vector: np.ndarray

    def ambient(self, m) -> np.ndarray:
        """Contraction to an ambient matrix on the B side (no membership check)."""
        g = self.target.ambient_dim
        k = self.k_dim
        m = as_complex(m).reshape(k, g, k, g)
        return np.einsum("k,kglh,l->gh", np.conj(self.psi_vector), m, self.psi_vector)

    def __call__(self, m, tol: float = MEMBERSHIP_TOL) -> AlgebraElement:
        return decompose(self.target, self.ambient(m), tol)


def conditional_expectation(target: MatrixBlockAlgebra, k_dim: int,
                            psi_vector) -> ConditionalExpectation:
    psi = check_unit_vector(psi_vector)
    if psi.size != k_dim:
        raise ValueError(f"state vector has dim {psi.size}, expected {k_dim}")
    return ConditionalExpectation(target=target, k_dim=k_dim, psi_vector=psi)


def tensor_with_factor(b_ambient, k_dim: int, factor) -> np.ndarray:
    """Ambient matrix of b⊗c on the product space with the K leg slowest."""
    return np.kron(as_complex(factor).reshape(k_dim, k_dim), as_complex(b_ambient))
