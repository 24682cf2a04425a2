"""Weak tensor dilations of unital CP maps.

Given a unital CP map S: A → B, a complete quasi-orthonormal system of the
GNS module gives a unitary U from the Stinespring space H onto the range of
p_I inside G⊗K, and j(a) = U ρ(a) U* is a homomorphism A → B⊗B(K) with
(id⊗⟨k₀,·k₀⟩)∘j = S.  Ambient matrices on the product space carry the K
leg slowest, so j(a) is literally the K×K block matrix of the coefficients
⟨e_j, a e_i⟩ ∈ B.

For non-unital S the cyclic vector is polar-decomposed first and the
identity S(a) = |ξ|·(id⊗ψ)(j(a))·|ξ| is verified instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import (AlgebraElement, coordinate_basis, coordinates,
                      identity, project_to_algebra, represent)
from .cpmap import CPMap, apply
from .errors import NotCP, NotUnital
from .numerics import DEFAULT_TOL, as_complex, frob
from .vnmodule import (GNSData, ModuleEmbedding, QONS, embed_qons, gns,
                       polar_decompose_module, qons)

VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class DilationCertificate:
    """Residual norms of all verified dilation identities."""

    homomorphism: float
    star: float
    membership: float
    expectation: float
    unit_projection: float

    @property
    def max_residual(self) -> float:
        return max(self.homomorphism, self.star, self.membership,
                   self.expectation, self.unit_projection)

    def passed(self, tol: float = VERIFY_TOL) -> bool:
        return self.max_residual <= tol

    def as_dict(self):
        return {
            "homomorphism": self.homomorphism,
            "star": self.star,
            "membership": self.membership,
            "expectation": self.expectation,
            "unit_projection": self.unit_projection,
            "max_residual": self.max_residual,
        }


@dataclass(frozen=True)
class WeakTensorDilation:
    """A homomorphism j: A → B⊗B(K) with a distinguished vector state on K.

    ``j_ops`` stacks the ambient matrices j(x) over the source coordinate
    basis (K leg slowest).  ``psi_vector`` is the state vector in K; the
    constructive path places it at the first basis slot (the ξ slot of the
    QONS), recovery from an extension may place it anywhere.  For non-unital
    maps ``absxi`` holds |ξ| and the expectation identity is the sandwiched
    one.
    """

    cpmap: CPMap
    k_dim: int
    psi_vector: np.ndarray
    j_ops: np.ndarray
    p_i_matrix: np.ndarray
    certificate: DilationCertificate = None
    absxi: AlgebraElement = None
    gns_data: GNSData = field(default=None, repr=False)
    system: QONS = field(default=None, repr=False)
    embedding: ModuleEmbedding = field(default=None, repr=False)

    def j(self, a: AlgebraElement) -> np.ndarray:
        """Ambient matrix of j(a) on G⊗K."""
        return np.tensordot(coordinates(a), self.j_ops, axes=1)

    def expectation_ambient(self, m) -> np.ndarray:
        """(id⊗ψ) applied to an ambient matrix on G⊗K."""
        g = self.cpmap.target.ambient_dim
        t = as_complex(m).reshape(self.k_dim, g, self.k_dim, g)
        return np.einsum("k,kglh,l->gh", np.conj(self.psi_vector), t,
                         self.psi_vector)


def _product_coordinate_tensor(algebra):
    """Structure constants: coords of x_a x_b for all basis pairs."""
    basis = coordinate_basis(algebra)
    n = len(basis)
    out = np.zeros((n, n, n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            out[a, b] = coordinates(basis[a] @ basis[b])
    return out


def _adjoint_coordinate_matrix(algebra):
    """Coordinate matrix of the conjugate-linear map x → x* on the basis."""
    basis = coordinate_basis(algebra)
    n = len(basis)
    out = np.zeros((n, n), dtype=np.complex128)
    for a in range(n):
        out[:, a] = coordinates(basis[a].adjoint())
    return out


def verify_dilation(d: WeakTensorDilation, tol: float = VERIFY_TOL) -> DilationCertificate:
    """Recompute every dilation identity directly from the stored matrices.

    Checks multiplicativity and *-preservation of j over the coordinate
    basis, membership of every K-block of every j(x) in B, the expectation
    identity ((id⊗ψ)∘j = S, sandwiched by |ξ| in the non-unital case), and
    that j(1) = p_I is an orthogonal projection.
    """
    source = d.cpmap.source
    target = d.cpmap.target
    n_a = source.coord_dim
    j_ops = d.j_ops

    prods = _product_coordinate_tensor(source)
    hom = 0.0
    for a in range(n_a):
        actual = np.einsum("ij,bjk->bik", j_ops[a], j_ops, optimize=True)
        expected = np.tensordot(prods[a], j_ops, axes=([1], [0]))
        diff = (actual - expected).reshape(n_a, -1)
        hom = max(hom, float(np.max(np.linalg.norm(diff, axis=1))))

    adj = _adjoint_coordinate_matrix(source)
    star = 0.0
    for a in range(n_a):
        expected = np.tensordot(adj[:, a], j_ops, axes=1)
        star = max(star, frob(j_ops[a].conj().T - expected))

    g_dim = target.ambient_dim
    membership = 0.0
    blocks = j_ops.reshape(n_a, d.k_dim, g_dim, d.k_dim, g_dim)
    for a in range(n_a):
        for k in range(d.k_dim):
            for kp in range(d.k_dim):
                _, res = project_to_algebra(target, blocks[a, k, :, kp, :])
                membership = max(membership, res)

    basis = coordinate_basis(source)
    expectation = 0.0
    sandwich = represent(d.absxi) if d.absxi is not None else None
    for a_idx, a in enumerate(basis):
        got = d.expectation_ambient(j_ops[a_idx])
        if sandwich is not None:
            got = sandwich @ got @ sandwich
        expectation = max(expectation, frob(got - represent(apply(d.cpmap, a))))

    j_unit = d.j(identity(source))
    unit_res = max(frob(j_unit - d.p_i_matrix),
                   frob(d.p_i_matrix @ d.p_i_matrix - d.p_i_matrix),
                   frob(d.p_i_matrix - d.p_i_matrix.conj().T))

    return DilationCertificate(homomorphism=hom, star=star,
                               membership=membership, expectation=expectation,
                               unit_projection=unit_res)


def _assemble(s: CPMap, data: GNSData, system: QONS, tol: float,
              absxi: AlgebraElement = None) -> WeakTensorDilation:
    emb = embed_qons(data, system, tol)
    u = emb.u
    j_ops = np.einsum("ih,ahk,jk->aij", u, data.rho_ops, u.conj(),
                      optimize=True)
    psi = np.zeros(emb.k_dim, dtype=np.complex128)
    psi[0] = 1.0
    d = WeakTensorDilation(cpmap=s, k_dim=emb.k_dim, psi_vector=psi,
                           j_ops=j_ops, p_i_matrix=emb.p_i_matrix,
                           certificate=None, absxi=absxi, gns_data=data,
                           system=system, embedding=emb)
    cert = verify_dilation(d, tol)
    return WeakTensorDilation(cpmap=s, k_dim=emb.k_dim, psi_vector=psi,
                              j_ops=j_ops, p_i_matrix=emb.p_i_matrix,
                              certificate=cert, absxi=absxi, gns_data=data,
                              system=system, embedding=emb)


def weak_tensor_dilation(s: CPMap, seed_qons=None, tol: float = DEFAULT_TOL,
                         data: GNSData = None) -> WeakTensorDilation:
    """Construct and verify a weak tensor dilation of a unital CP map.

    Pipeline: GNS construction, complete QONS (seeded with ξ, or with the
    caller's seed), embedding into G⊗K.  The certificate is attached and
    holds the residuals of all identities.  A precomputed GNSData for the
    same map can be passed to avoid rebuilding it.
    """
    if not s.is_cp:
        raise NotCP("dilation requires a completely positive map")
    if not s.is_unital:
        raise NotUnital("use nonunital_recovery for non-unital maps")
    if data is None:
        data = gns(s, tol)
    system = qons(data, seed_qons, tol)
    return _assemble(s, data, system, tol)


def nonunital_recovery(s: CPMap, tol: float = DEFAULT_TOL):
    """Dilation-style recovery of a non-unital CP map.

    The cyclic vector is polar-decomposed as ξ = ξ₀|ξ| with
    |ξ| = √⟨ξ,ξ⟩ = √S(1); the QONS is seeded with the partial isometry ξ₀
    (so p₀ = support S(1)) and the verified identity becomes
    S(a) = |ξ|·(id⊗ψ)(j(a))·|ξ|.  Returns ``(dilation, |ξ|)``.
    """
    if not s.is_cp:
        raise NotCP("recovery requires a completely positive map")
    data = gns(s, tol)
    xi0, absxi, _ = polar_decompose_module(data, data.xi, tol)
    system = qons(data, [xi0], tol)
    d = _assemble(s, data, system, tol, absxi=absxi)
    return d, absxi
