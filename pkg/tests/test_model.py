import itertools

import numpy as np
import pytest

from fewbody import model
from fewbody.errors import ModelError
from fewbody.model import ComplexEnergy, ModelSpec
from fewbody import operators as ops


def singleton_spec(vals=(0.0, 0.0, 0.0), masses=(1.0, 1.0, 1.0), v12=None):
    grids = tuple(np.array([q]) for q in vals)
    pots = {}
    if v12 is not None:
        pots[(0, 1)] = np.asarray(v12, dtype=complex)
    return ModelSpec(masses=masses, grids=grids, pair_potentials=pots)


def small_random_spec(seed=42, sizes=(2, 2, 2), strength=0.5):
    rng = np.random.default_rng(seed)
    masses = (1.0, 1.3, 0.8)
    grids = tuple(np.linspace(0.3, 1.1, s) for s in sizes)
    pots = {}
    for alpha in model.all_pairs(3):
        m, n = alpha
        pots[alpha] = model.make_pair_potential(
            "random_hermitian", (grids[m].size, grids[n].size), strength, rng=rng
        )
    return ModelSpec(masses=masses, grids=grids, pair_potentials=pots)


class TestComplexEnergy:
    def test_fields(self):
        z = ComplexEnergy(2.0, 0.1)
        assert z.z == 2.0 + 0.1j
        assert z.z_conj == 2.0 - 0.1j

    def test_eps_must_be_positive(self):
        with pytest.raises(ModelError):
            ComplexEnergy(1.0, 0.0)
        with pytest.raises(ModelError):
            ComplexEnergy(1.0, -0.2)

    def test_e0_finite(self):
        with pytest.raises(ModelError):
            ComplexEnergy(np.inf, 0.1)


class TestModelSpec:
    def test_requires_three_particles(self):
        with pytest.raises(ModelError):
            ModelSpec(masses=(1.0, 1.0), grids=(np.array([0.0]),) * 2)

    def test_rejects_non_hermitian_potential(self):
        with pytest.raises(ModelError):
            singleton_spec(v12=np.array([[1.0j]]))

    def test_rejects_bad_pair_shape(self):
        grids = (np.array([0.1, 0.2]),) * 3
        with pytest.raises(ModelError):
            ModelSpec(
                masses=(1.0, 1.0, 1.0),
                grids=grids,
                pair_potentials={(0, 1): np.eye(3)},
            )

    def test_dim_is_grid_product(self):
        spec = small_random_spec(sizes=(2, 3, 4))
        assert spec.dim == 24
        assert spec.shape == (2, 3, 4)


class TestBuildH0:
    def test_all_zero_grids(self):
        spec = singleton_spec()
        h0 = model.build_h0(spec)
        assert h0.matrix.shape == (1, 1)
        assert h0.matrix[0, 0] == 0.0

    def test_single_moving_particle(self):
        spec = singleton_spec(vals=(1.0, 0.0, 0.0), masses=(0.5, 1.0, 1.0))
        h0 = model.build_h0(spec)
        assert h0.matrix[0, 0] == pytest.approx(1.0)

    def test_matches_bruteforce_tuple_enumeration(self):
        spec = small_random_spec(sizes=(2, 2, 2))
        h0 = np.diagonal(model.build_h0(spec).matrix).real
        # independent oracle: enumerate grid tuples in row-major order
        expected = []
        for i, j, k in itertools.product(*(range(s) for s in spec.shape)):
            q = (spec.grids[0][i], spec.grids[1][j], spec.grids[2][k])
            expected.append(sum(qq**2 / (2 * m) for qq, m in zip(q, spec.masses)))
        np.testing.assert_allclose(h0, expected, rtol=1e-15)


class TestEmbedPairPotential:
    def test_zero_potential(self):
        spec = singleton_spec(v12=np.array([[0.0]]))
        v = model.embed_pair_potential(spec, (0, 1))
        assert np.all(v.matrix == 0)

    def test_singleton_spectators_reduce_to_pair(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        v12 = 0.5 * (a + a.conj().T)
        grids = (np.array([0.2, 0.7]), np.array([0.4, 0.9]), np.array([0.0]))
        spec = ModelSpec(
            masses=(1.0, 1.0, 1.0), grids=grids, pair_potentials={(0, 1): v12}
        )
        emb = model.embed_pair_potential(spec, (0, 1))
        np.testing.assert_allclose(emb.matrix, v12, rtol=0, atol=0)

    def test_spectator_deltas_by_exhaustive_scan(self):
        spec = small_random_spec(sizes=(2, 2, 2))
        emb = model.embed_pair_potential(spec, (0, 1)).matrix
        v = spec.pair_potentials[(0, 1)]
        dims = spec.shape
        for row in itertools.product(*(range(s) for s in dims)):
            for col in itertools.product(*(range(s) for s in dims)):
                r = np.ravel_multi_index(row, dims)
                c = np.ravel_multi_index(col, dims)
                if row[2] != col[2]:
                    assert emb[r, c] == 0.0
                else:
                    pr = row[0] * dims[1] + row[1]
                    pc = col[0] * dims[1] + col[1]
                    assert emb[r, c] == v[pr, pc]

    def test_unknown_pair_rejected(self):
        spec = singleton_spec(v12=np.array([[0.3]]))
        with pytest.raises(ModelError):
            model.embed_pair_potential(spec, (0, 2))

    def test_total_v_hermitian(self):
        spec = small_random_spec()
        v = model.build_v(spec)
        assert ops.is_hermitian(v.matrix)


class TestGreenFunctions:
    def test_single_level_closed_form(self):
        spec = singleton_spec(vals=(1.0, 0.0, 0.0), masses=(0.5, 1.0, 1.0))
        z = ComplexEnergy(2.0, 0.1)
        g0, g1, g2 = model.green_functions(spec, z)
        assert g0.matrix[0, 0] == pytest.approx(1.0 / (1.0 + 0.1j), rel=1e-14)
        assert g2.matrix[0, 0] == pytest.approx(1.0 / 1.01, rel=1e-14)
        assert g1.matrix[0, 0] == pytest.approx(-0.1j / 1.01, rel=1e-14)

    def test_on_shell_level(self):
        spec = singleton_spec(vals=(1.0, 0.0, 0.0), masses=(0.5, 1.0, 1.0))
        z = ComplexEnergy(1.0, 0.05)  # e0 equals the single level h = 1
        g0, g1, g2 = model.green_functions(spec, z)
        assert g2.matrix[0, 0] == 0.0
        assert g1.matrix[0, 0] == pytest.approx(-1j / 0.05, rel=1e-14)

    def test_split_is_exact(self):
        spec = small_random_spec()
        z = ComplexEnergy(1.7, 0.08)
        g0, g1, g2 = model.green_functions(spec, z)
        assert np.linalg.norm(g0.matrix - (g1.matrix + g2.matrix), "fro") == 0.0
        assert ops.is_anti_hermitian(g1.matrix)
        assert ops.is_hermitian(g2.matrix)

    def test_matches_hermitian_split_of_g0(self):
        spec = small_random_spec()
        z = ComplexEnergy(2.2, 0.12)
        g0, g1, g2 = model.green_functions(spec, z)
        anti, herm = ops.hermitian_split(g0.matrix)
        np.testing.assert_allclose(g1.matrix, anti, rtol=0, atol=1e-15)
        np.testing.assert_allclose(g2.matrix, herm, rtol=0, atol=1e-15)

    def test_g1_norm_decreases_with_energy(self):
        spec = small_random_spec()
        norms = [
            np.linalg.norm(model.green_functions(spec, ComplexEnergy(e0, 0.1))[1].matrix)
            for e0 in (5.0, 10.0, 20.0, 40.0)
        ]
        assert all(a > b for a, b in zip(norms, norms[1:]))


class TestEmbedTwoBodySolution:
    def test_zero_potential_gives_zero(self):
        spec = singleton_spec(v12=np.array([[0.0]]))
        z = ComplexEnergy(2.0, 0.1)
        for kind in ("t_matrix", "k_matrix"):
            out = model.embed_two_body_solution(spec, (0, 1), z, kind)
            assert np.all(out.matrix == 0)

    def test_no_shift_for_zero_momentum_spectators(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 4))
        v12 = 0.4 * (a + a.T)
        grids = (np.array([0.2, 0.7]), np.array([0.4, 0.9]), np.array([0.0]))
        spec = ModelSpec(
            masses=(1.0, 1.0, 1.0), grids=grids, pair_potentials={(0, 1): v12}
        )
        z = ComplexEnergy(1.5, 0.1)
        emb = model.embed_two_body_solution(spec, (0, 1), z, "t_matrix").matrix
        # direct two-body solve at the unshifted energy
        h_pair = model.pair_kinetic_diagonal(spec, (0, 1))
        g0 = 1.0 / (z.z - h_pair)
        t = np.linalg.solve(np.eye(4) - v12 * g0, v12.astype(complex))
        np.testing.assert_allclose(emb, t, rtol=1e-12)

    @pytest.mark.parametrize("kind", ["t_matrix", "k_matrix"])
    def test_matches_full_space_pair_solve(self, kind):
        # oracle: direct inversion of the pair equation on the full space
        spec = small_random_spec(sizes=(2, 2, 2))
        z = ComplexEnergy(2.5, 0.15)
        emb = model.embed_two_body_solution(spec, (0, 1), z, kind).matrix
        v = model.embed_pair_potential(spec, (0, 1)).matrix
        g0, g1, g2 = model.green_functions(spec, z)
        g = g0.matrix if kind == "t_matrix" else g2.matrix
        direct = np.linalg.solve(np.eye(spec.dim) - v @ g, v)
        err = np.linalg.norm(emb - direct) / np.linalg.norm(direct)
        assert err <= 1e-10

    def test_k_embedding_is_hermitian(self):
        spec = small_random_spec()
        z = ComplexEnergy(3.0, 0.2)
        emb = model.embed_two_body_solution(spec, (0, 2), z, "k_matrix")
        assert ops.is_hermitian(emb.matrix, tol=1e-10)


class TestPairSpectralRadius:
    def test_matches_manual_maximum(self):
        spec = small_random_spec(sizes=(2, 3, 2))
        expected = 0.0
        for alpha in spec.pairs():
            expected = max(expected, model.pair_kinetic_diagonal(spec, alpha).max())
        assert model.pair_spectral_radius(spec) == pytest.approx(expected)


class TestPotentialFamilies:
    def test_families_are_hermitian(self):
        rng = np.random.default_rng(9)
        g = (np.linspace(0.2, 1.0, 3), np.linspace(0.1, 0.8, 2))
        for fam in ("random_hermitian", "separable_rank1", "gaussian_well"):
            v = model.make_pair_potential(fam, (3, 2), 0.7, rng=rng, grids=g)
            assert v.shape == (6, 6)
            assert ops.is_hermitian(v)

    def test_unknown_family(self):
        with pytest.raises(ModelError):
            model.make_pair_potential("coulomb", (2, 2))

    def test_reference_model_shape(self):
        spec = model.make_reference_model()
        assert spec.n_particles == 3
        assert spec.dim == 64
        assert len(spec.pairs()) == 3

    def test_reference_model_is_seed_deterministic(self):
        a = model.make_reference_model(seed=7)
        b = model.make_reference_model(seed=7)
        for alpha in a.pairs():
            np.testing.assert_array_equal(
                a.pair_potentials[alpha], b.pair_potentials[alpha]
            )
