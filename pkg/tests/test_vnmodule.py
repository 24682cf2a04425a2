import numpy as np
import pytest
from numpy.testing import assert_allclose

from cpdilate.algebra import (commutant, coordinate_basis, coordinates,
                              element, identity, make_algebra, represent)
from cpdilate.cpmap import apply, identity_map, make_cpmap
from cpdilate.errors import BadSeed, NotCP, NotInTargetAlgebra
from cpdilate.numerics import matrix_rank
from cpdilate.sampling import (random_standard_algebra, random_unital_cp_map)
from cpdilate.vnmodule import (embed_qons, gns, inner_product,
                               intertwiner_space, module_element,
                               polar_decompose_module, qons)


@pytest.fixture
def worked_gns(worked_map):
    return gns(worked_map)


def trace_map_on_m2():
    """S(a) = tr(a)/2 from M2 to the scalars."""
    m2 = make_algebra([(2, 1)])
    c1 = make_algebra([(1, 1)])
    cols = [np.array([np.trace(a.block_matrices[0]) / 2.0])
            for a in coordinate_basis(m2)]
    return make_cpmap(m2, c1, np.stack(cols, axis=1))


class TestGns:
    def test_identity_map_recovers_algebra(self):
        alg = make_algebra([(1, 1), (1, 1)])
        data = gns(identity_map(alg))
        assert data.h_dim == 2
        assert data.module_basis.shape[0] == 2

    def test_worked_map_gram_rank(self, worked_gns):
        # oracle: the Gram of {p_i ⊗ e_j} is one-half the identity on C^4
        assert worked_gns.h_dim == 4
        assert_allclose(worked_gns.gram_eigenvalues, 0.5 * np.ones(4), atol=1e-14)

    def test_trace_map_gram_rank(self):
        # oracle: the Gram is the Hilbert-Schmidt form on M2, rank 4
        data = gns(trace_map_on_m2())
        assert data.h_dim == 4
        assert_allclose(np.sort(data.gram_eigenvalues), 0.5 * np.ones(4),
                        atol=1e-14)

    def test_stinespring_identity(self, worked_gns, worked_map):
        for a in coordinate_basis(worked_map.source):
            lhs = worked_gns.xi.conj().T @ worked_gns.rho(a) @ worked_gns.xi
            assert_allclose(lhs, represent(apply(worked_map, a)), atol=1e-13)

    def test_representations_commute(self, rng):
        a_alg = random_standard_algebra(rng, 5)
        b_alg = random_standard_algebra(rng, 5)
        s = random_unital_cp_map(rng, a_alg, b_alg)
        data = gns(s)
        for ra in data.rho_ops:
            for rc in data.rho_prime_ops:
                assert np.linalg.norm(ra @ rc - rc @ ra) <= 1e-11

    def test_rho_is_homomorphism(self, rng):
        a_alg = make_algebra([(2, 1)])
        b_alg = make_algebra([(2, 1)])
        s = random_unital_cp_map(rng, a_alg, b_alg)
        data = gns(s)
        basis = coordinate_basis(a_alg)
        for x in basis:
            for y in basis:
                lhs = data.rho(x) @ data.rho(y)
                rhs = data.rho(x @ y)
                assert np.linalg.norm(lhs - rhs) <= 1e-11
            assert np.linalg.norm(data.rho(x).conj().T
                                  - data.rho(x.adjoint())) <= 1e-11

    def test_minimality_span(self, worked_gns):
        # span{rho(a) xi g} must be all of H
        cols = []
        for a in coordinate_basis(worked_gns.source):
            cols.append(worked_gns.rho(a) @ worked_gns.xi)
        stacked = np.hstack(cols)
        assert matrix_rank(stacked) == worked_gns.h_dim

    def test_rejects_non_cp(self):
        alg = make_algebra([(2, 1)])
        cols = [coordinates(element(alg, [a.block_matrices[0].T]))
                for a in coordinate_basis(alg)]
        s = make_cpmap(alg, alg, np.stack(cols, axis=1))
        with pytest.raises(NotCP):
            gns(s)


class TestInnerProduct:
    def test_gns_reproduces_map(self, worked_gns, worked_map):
        for a in coordinate_basis(worked_map.source):
            got = inner_product(worked_gns, worked_gns.xi,
                                worked_gns.rho(a) @ worked_gns.xi)
            assert (got - apply(worked_map, a)).norm() <= 1e-12

    def test_worked_formula(self, worked_gns, worked_map, rng):
        # oracle: <x,y> = p1 S(x1* y1) + p2 S(x2* y2) for x = x1⊗p1 + x2⊗p2
        a_alg = worked_map.source
        b_alg = worked_map.target
        p1 = element(b_alg, [np.array([[1.0]]), np.array([[0.0]])])
        p2 = element(b_alg, [np.array([[0.0]]), np.array([[1.0]])])
        for _ in range(5):
            c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            x1 = element(a_alg, [np.array([[c[0]]]), np.array([[c[1]]])])
            x2 = element(a_alg, [np.array([[c[2]]]), np.array([[c[3]]])])
            y1 = element(a_alg, [np.array([[c[4]]]), np.array([[c[5]]])])
            y2 = element(a_alg, [np.array([[c[6]]]), np.array([[c[7]]])])
            x = module_element(worked_gns, x1, p1) + module_element(worked_gns, x2, p2)
            y = module_element(worked_gns, y1, p1) + module_element(worked_gns, y2, p2)
            got = inner_product(worked_gns, x, y)
            expected = p1 @ apply(worked_map, x1.adjoint() @ y1) \
                + p2 @ apply(worked_map, x2.adjoint() @ y2)
            assert (got - expected).norm() <= 1e-12

    def test_positivity(self, worked_gns, rng):
        # oracle: eigenvalues of <x,x> are nonnegative
        for _ in range(5):
            coeff = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            x = np.tensordot(coeff, worked_gns.module_basis, axes=1)
            t = inner_product(worked_gns, x, x)
            for blk in t.block_matrices:
                assert np.linalg.eigvalsh(blk).min() >= -1e-12

    def test_non_module_element_rejected(self, worked_gns, rng):
        x = rng.standard_normal((worked_gns.h_dim, 2)) \
            + 1j * rng.standard_normal((worked_gns.h_dim, 2))
        with pytest.raises(NotInTargetAlgebra):
            inner_product(worked_gns, x, x)


class TestIntertwinerSpace:
    def test_amplification_case(self, rng):
        # rho' = b' ⊗ I_K on G⊗K: the intertwiners are B ⊗ K
        b_alg = make_algebra([(1, 1), (1, 1)])
        comm = commutant(b_alg)
        k_dim = 3
        left = np.stack([np.kron(represent(c), np.eye(k_dim))
                         for c in coordinate_basis(comm)])
        right = np.stack([represent(c) for c in coordinate_basis(comm)])
        space = intertwiner_space(left, right)
        assert space.shape[0] == b_alg.coord_dim * k_dim

    def test_worked_example_dimension(self, worked_gns):
        comm = commutant(worked_gns.target)
        right = np.stack([represent(c) for c in coordinate_basis(comm)])
        space = intertwiner_space(worked_gns.rho_prime_ops, right)
        assert space.shape[0] == 4
        assert space.shape[0] == worked_gns.module_basis.shape[0]

    def test_source_side_commutant_module(self, worked_gns):
        # the commutant module E' = C_A(B(F,H)) has dimension 4 as well
        a_comm = commutant(worked_gns.source)
        right = np.stack([represent(c) for c in coordinate_basis(a_comm)])
        # intertwiners for rho: rho(a) x' = x' a over a basis of A; the
        # defining relation uses A itself, so feed the A-representation
        a_right = np.stack([represent(a) for a in coordinate_basis(worked_gns.source)])
        space = intertwiner_space(worked_gns.rho_ops, a_right)
        assert space.shape[0] == 4

    def test_members_intertwine(self, worked_gns):
        comm = commutant(worked_gns.target)
        right = np.stack([represent(c) for c in coordinate_basis(comm)])
        space = intertwiner_space(worked_gns.rho_prime_ops, right)
        for x in space:
            for op, rm in zip(worked_gns.rho_prime_ops, right):
                assert np.linalg.norm(op @ x - x @ rm) <= 1e-10


class TestPolar:
    def test_unit_vector(self, worked_gns):
        x0, absx, p = polar_decompose_module(worked_gns, worked_gns.xi)
        assert (absx - identity(worked_gns.target)).norm() <= 1e-12
        assert (p - identity(worked_gns.target)).norm() <= 1e-12
        assert np.linalg.norm(x0 - worked_gns.xi) <= 1e-12

    def test_scaled_partial_element(self, worked_gns, worked_map):
        # x = e·b for a partial isometry e and positive invertible b on its
        # support recovers |x| = b and x0 = e
        b_alg = worked_map.target
        p1 = element(b_alg, [np.array([[1.0]]), np.array([[0.0]])])
        sgn = element(worked_map.source, [np.array([[1.0]]), np.array([[-1.0]])])
        e = module_element(worked_gns, sgn, p1)
        b = element(b_alg, [np.array([[1.7]]), np.array([[0.0]])])
        x = e @ represent(b)
        x0, absx, p = polar_decompose_module(worked_gns, x)
        assert (absx - b).norm() <= 1e-12
        assert (p - p1).norm() <= 1e-12
        assert np.linalg.norm(x0 - e) <= 1e-12

    def test_reconstruction_random(self, worked_gns, rng):
        for _ in range(5):
            coeff = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            x = np.tensordot(coeff, worked_gns.module_basis, axes=1)
            x0, absx, p = polar_decompose_module(worked_gns, x)
            assert np.linalg.norm(x - x0 @ represent(absx)) <= 1e-9
            got_p = inner_product(worked_gns, x0, x0)
            assert (got_p - p).norm() <= 1e-9


def worked_seed(data, worked_map):
    a_alg, b_alg = worked_map.source, worked_map.target
    one_a, one_b = identity(a_alg), identity(b_alg)
    sgn = element(a_alg, [np.array([[1.0]]), np.array([[-1.0]])])
    p1 = element(b_alg, [np.array([[1.0]]), np.array([[0.0]])])
    p2 = element(b_alg, [np.array([[0.0]]), np.array([[1.0]])])
    return [module_element(data, one_a, one_b),
            module_element(data, sgn, p1),
            module_element(data, sgn, p2)]


class TestQons:
    def test_identity_map_single_element(self):
        alg = make_algebra([(1, 1), (1, 1)])
        data = gns(identity_map(alg))
        system = qons(data)
        assert len(system) == 1
        assert (system.projections[0] - identity(alg)).norm() <= 1e-12

    def test_worked_seeded(self, worked_gns, worked_map):
        # the displayed complete quasi-orthonormal family verifies exactly
        system = qons(worked_gns, worked_seed(worked_gns, worked_map))
        assert len(system) == 3
        assert system.relation_residual <= 1e-12
        assert system.completeness_residual <= 1e-12
        expected = [np.array([1.0, 1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        for p, exp in zip(system.projections, expected):
            got = np.array([p.block_matrices[0][0, 0], p.block_matrices[1][0, 0]])
            assert_allclose(got.real, exp, atol=1e-12)
            assert_allclose(got.imag, 0.0, atol=1e-12)

    def test_worked_unseeded_complete(self, worked_gns):
        # oracle: completeness sum and rank bookkeeping on H of dim 4
        system = qons(worked_gns)
        assert system.relation_residual <= 1e-9
        assert system.completeness_residual <= 1e-9
        assert (system.projections[0] - identity(worked_gns.target)).norm() <= 1e-10
        total_rank = sum(int(round(np.real(np.trace(represent(p)))))
                         for p in system.projections)
        assert total_rank == worked_gns.h_dim

    def test_bad_seed_rejected(self, worked_gns):
        with pytest.raises(BadSeed):
            qons(worked_gns, [1.7 * worked_gns.xi])

    def test_seed_orthogonality_enforced(self, worked_gns):
        with pytest.raises(BadSeed):
            qons(worked_gns, [worked_gns.xi, worked_gns.xi])


class TestEmbedding:
    def test_identity_map(self):
        alg = make_algebra([(1, 1), (1, 1)])
        data = gns(identity_map(alg))
        emb = embed_qons(data, qons(data))
        assert emb.k_dim == 1
        assert_allclose(emb.p_i_matrix, np.eye(2), atol=1e-12)

    def test_worked_p_i(self, worked_gns, worked_map):
        emb = embed_qons(worked_gns, qons(worked_gns, worked_seed(worked_gns, worked_map)))
        assert emb.k_dim == 3
        assert_allclose(emb.p_i_matrix, np.diag([1, 1, 1, 0, 0, 1]).astype(complex),
                        atol=1e-12)

    def test_unitarity_random(self, rng):
        for _ in range(5):
            a_alg = random_standard_algebra(rng, 4)
            b_alg = random_standard_algebra(rng, 4)
            s = random_unital_cp_map(rng, a_alg, b_alg)
            data = gns(s)
            emb = embed_qons(data, qons(data))
            u = emb.u
            assert np.linalg.norm(u.conj().T @ u - np.eye(data.h_dim)) <= 1e-10
            assert np.linalg.norm(u @ u.conj().T - emb.p_i_matrix) <= 1e-10

    def test_coefficients_land_in_corners(self, worked_gns, worked_map):
        emb = embed_qons(worked_gns, qons(worked_gns, worked_seed(worked_gns, worked_map)))
        a = element(worked_map.source, [np.array([[0.3]]), np.array([[-1.1]])])
        for j in range(3):
            for i in range(3):
                c = emb.coefficient(worked_gns, j, i, a)
                pj = emb.system.projections[j]
                pi = emb.system.projections[i]
                sandwiched = pj @ c @ pi
                assert (sandwiched - c).norm() <= 1e-11
