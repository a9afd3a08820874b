"""Perturbation series, order comparisons, invariance transfer, coupling."""

import warnings

import numpy as np
import pytest

from evpos.errors import (
    ConsistencyViolation,
    CouplingPremiseWarning,
    InputError,
    PremiseViolation,
    QuadratureBudgetExceeded,
    ShiftNotOnGrid,
)
from evpos.gammashift import GammaShiftProvider, Grid1D, GridFunction
from evpos.lattice import IdealMask
from evpos.perturbation import (
    CoordinateFunctional,
    CoupledProvider,
    CoupledSystem,
    DenseCoupling,
    DysonPhillipsConfig,
    GridFunctional,
    ProductVector,
    RankOneCoupling,
    choose_terms,
    couple,
    coupling_irreducibility_check,
    coupling_premise_check,
    domination_check,
    dyson_phillips_sum,
    dyson_phillips_terms,
    invariance_transfer_check,
    perturbation_tail_bound,
)
from evpos.semigroup import MatrixSemigroup, demo_generator, expm


def random_pair(rng, n_max=8, scale=2.0):
    n = int(rng.integers(2, n_max + 1))
    A = rng.normal(size=(n, n))
    A *= scale / max(np.linalg.norm(A, 2), 1e-9)
    B = rng.normal(size=(n, n))
    B *= scale / max(np.linalg.norm(B, 2), 1e-9)
    return A, B


class TestSeries:
    def test_zero_perturbation_terminates_immediately(self):
        A = demo_generator()
        res = dyson_phillips_sum(MatrixSemigroup(A), np.zeros((3, 3)), 1.5)
        assert res.n_terms == 0
        scale = float(np.max(np.abs(res.total)))
        assert np.max(np.abs(res.total - expm(A, 1.5))) <= 1e-12 * scale

    def test_first_order_term_for_frozen_flow(self):
        # with A = 0 the recursion integrates B directly: term n is (tB)^n/n!
        B = np.array([[0.0, 1.0], [2.0, 0.0]])
        terms, _tail = dyson_phillips_terms(MatrixSemigroup(np.zeros((2, 2))), B, 0.7)
        assert np.max(np.abs(terms[1] - 0.7 * B)) <= 1e-12
        assert np.max(np.abs(terms[2] - (0.7 * B) @ (0.7 * B) / 2.0)) <= 1e-12

    def test_first_two_terms_against_block_exponential(self):
        # independent oracle: exp(t[[A,B],[0,A]]) carries the first-order
        # term in its top-right block, and the 3x3 block version carries
        # the second-order term
        rng = np.random.default_rng(31)
        for _ in range(5):
            A, B = random_pair(rng, n_max=5)
            n = A.shape[0]
            t = 1.1
            terms, _ = dyson_phillips_terms(MatrixSemigroup(A), B, t)

            block1 = np.zeros((2 * n, 2 * n))
            block1[:n, :n] = A
            block1[:n, n:] = B
            block1[n:, n:] = A
            v1 = expm(block1, t)[:n, n:]
            assert np.max(np.abs(terms[1] - v1)) <= 1e-10

            block2 = np.zeros((3 * n, 3 * n))
            for k in range(3):
                block2[k * n : (k + 1) * n, k * n : (k + 1) * n] = A
            block2[:n, n : 2 * n] = B
            block2[n : 2 * n, 2 * n :] = B
            v2 = expm(block2, t)[:n, 2 * n :]
            assert np.max(np.abs(terms[2] - v2)) <= 1e-10

    def test_sum_matches_perturbed_exponential_small_norms(self):
        rng = np.random.default_rng(1234)
        for _ in range(12):
            A, B = random_pair(rng, scale=float(rng.uniform(0.3, 2.0)))
            prov = MatrixSemigroup(A)
            for t in (0.5, 1.0, 2.0):
                res = dyson_phillips_sum(prov, B, t)
                err = float(np.linalg.norm(res.total - expm(A + B, t), 2))
                assert err <= res.tail_bound + 1e-8

    def test_sum_matches_perturbed_exponential_larger_norms(self):
        rng = np.random.default_rng(77)
        for _ in range(6):
            A, B = random_pair(rng, scale=5.0)
            prov = MatrixSemigroup(A)
            res = dyson_phillips_sum(prov, B, 2.0)
            err = float(np.linalg.norm(res.total - expm(A + B, 2.0), 2))
            assert err <= res.tail_bound + 10.0 * res.quadrature_estimate + 1e-8

    def test_terms_positive_under_positive_data(self):
        A = np.array([[-2.0, 1.0], [0.5, -3.0]])  # off-diagonal nonnegative
        B = np.array([[0.2, 0.1], [0.0, 0.4]])
        terms, _ = dyson_phillips_terms(MatrixSemigroup(A), B, 1.0)
        for term in terms:
            assert float(np.min(term)) >= -1e-12

    def test_tail_bound_decreases_and_covers_remainder(self):
        env = (1.0, 9.0)
        tails = [perturbation_tail_bound(env, 1.0, 1.0, n) for n in (2, 5, 10, 20)]
        assert all(tails[i] > tails[i + 1] for i in range(len(tails) - 1))
        # conservative: must dominate the actual remainder of a sample series
        A, B = demo_generator(), np.diag([0.0, 0.0, 1.0])
        prov = MatrixSemigroup(A)
        short_terms, short_tail = dyson_phillips_terms(
            prov, B, 1.0, DysonPhillipsConfig(max_terms=3)
        )
        remainder = float(np.linalg.norm(expm(A + B, 1.0) - sum(short_terms), 2))
        assert remainder <= short_tail

    def test_term_cap_respected(self):
        cfg = DysonPhillipsConfig(max_terms=4)
        n, tail = choose_terms(cfg, (1.0, 9.0), 1.0, 1.0)
        assert n <= 4
        assert tail > 0

    def test_node_budget_guard(self):
        with pytest.raises(QuadratureBudgetExceeded):
            dyson_phillips_sum(
                MatrixSemigroup(demo_generator()),
                np.eye(3),
                2.0,
                DysonPhillipsConfig(node_budget=10),
            )

    def test_config_validation(self):
        with pytest.raises(InputError):
            DysonPhillipsConfig(max_terms=0)
        with pytest.raises(InputError):
            DysonPhillipsConfig(gl_order=1)


class TestDomination:
    @pytest.mark.parametrize("b", [0.0, 1.0, 5.0])
    def test_showcase_diagonal_family(self, b):
        rep = domination_check(demo_generator(), np.diag([0.0, 0.0, b]))
        assert rep.premise_min >= -1e-9
        assert rep.conclusion_min >= -1e-9

    def test_perturbing_the_wrong_coordinate_breaks_the_premise(self):
        with pytest.raises(PremiseViolation) as exc:
            domination_check(demo_generator(), np.diag([1.0, 0.0, 0.0]))
        assert exc.value.witnesses

    def test_negative_perturbation_rejected(self):
        with pytest.raises(PremiseViolation):
            domination_check(demo_generator(), np.diag([0.0, 0.0, -1.0]))

    def test_metzler_base_with_positive_perturbation(self):
        A = np.array([[-2.0, 1.0], [1.0, -2.0]])
        rep = domination_check(A, np.array([[0.5, 0.0], [0.25, 0.5]]))
        assert rep.conclusion_min >= -1e-12

    def test_domination_monotone_in_strength(self):
        # growing the perturbation can only widen the gap at a fixed time
        A = np.array([[-2.0, 1.0], [1.0, -2.0]])
        t = 1.0
        gaps = []
        for b in (0.5, 1.0, 2.0):
            B = np.array([[0.0, b], [b, 0.0]])
            gaps.append(float(np.min(expm(A + B, t) - expm(A, t))))
        assert gaps[0] <= gaps[1] <= gaps[2]

    def test_lattice_carrier_domination(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        prov = GammaShiftProvider(grid)
        B = np.zeros((16, 16))
        B[3, 12] = 0.5  # one positive mass route
        rep = domination_check(prov, B, tol=1e-9)
        assert rep.conclusion_min >= -1e-9


class TestInvarianceTransfer:
    def test_block_triangular_family(self):
        At = np.array([[-1.0, 2.0, 0.0], [1.0, -2.0, 0.0], [0.0, 0.0, -3.0]])
        Bt = np.array([[0.0, 1.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        rep = invariance_transfer_check(At, Bt, IdealMask.of([0, 1], 3))
        assert rep.perturbed_onset == 0.0
        assert rep.unperturbed_onset == 0.0
        assert rep.family_onset == (0.0, 0.0)
        assert rep.max_leak_past_onset == 0.0

    def test_trivial_ideals_accepted(self):
        A = demo_generator()
        B = np.diag([0.0, 0.0, 1.0])
        for mask in (IdealMask.empty(3), IdealMask.full(3)):
            rep = invariance_transfer_check(A, B, mask)
            assert rep.max_leak_past_onset == 0.0

    def test_leaky_perturbation_violates_premise(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        B = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(PremiseViolation):
            invariance_transfer_check(A, B, IdealMask.of([0], 2))

    def test_transfer_never_fires_on_block_triangular_inputs(self):
        # whenever the perturbed family leaves the ideal invariant the
        # transfer back to the unperturbed family is a theorem; random
        # positivity-preserving block-upper-triangular generators must
        # never raise (general sign patterns would trip the mixed
        # positivity premise instead of exercising the transfer)
        rng = np.random.default_rng(53)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            k = int(rng.integers(1, n))
            A = np.abs(rng.normal(size=(n, n)))
            A[np.diag_indices(n)] = -rng.uniform(1.0, 3.0, size=n)
            B = np.abs(rng.normal(size=(n, n)))
            A[k:, :k] = 0.0
            B[k:, :k] = 0.0
            rep = invariance_transfer_check(A, B, IdealMask.of(range(k), n))
            assert rep.max_leak_past_onset <= 1e-9

    def test_lattice_carrier_rejected(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        with pytest.raises(InputError):
            invariance_transfer_check(
                GammaShiftProvider(grid), np.zeros((16, 16)), IdealMask.of([0], 16)
            )


def matrix_matrix_system(strength=0.1) -> CoupledSystem:
    A = demo_generator()
    return CoupledSystem(
        MatrixSemigroup(A),
        MatrixSemigroup(A.copy()),
        DenseCoupling(strength * np.ones((3, 3))),
        DenseCoupling(strength * np.ones((3, 3))),
    )


def lattice_system() -> CoupledSystem:
    grid = Grid1D(x_min=-2.0, h=0.25, count=16)
    return CoupledSystem(
        MatrixSemigroup(demo_generator()),
        GammaShiftProvider(grid),
        RankOneCoupling(
            output=np.array([0.0, 0.0, 1.0]),
            functional=GridFunctional(grid, -1.0, 0.0),
        ),
        RankOneCoupling(
            output=GridFunction.indicator(grid, 0.5, 1.0),
            functional=CoordinateFunctional(2, 3),
        ),
    )


class TestCouplingBlocks:
    def test_rank_one_matches_outer_product(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        func = GridFunctional(grid, -1.0, 0.0)
        block = RankOneCoupling(output=np.array([0.0, 0.0, 1.0]), functional=func)
        dense = block.to_dense()
        f = GridFunction.indicator(grid, -0.75, 0.5)
        direct = block.apply(f)
        assert np.allclose(dense @ np.asarray(f.samples), direct)

    def test_grid_functional_is_window_integral(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        func = GridFunctional(grid, -1.0, 0.0)
        f = GridFunction.indicator(grid, -2.0, 2.0)
        # the indicator has unit height, so the window integral is its width
        assert func(f) == pytest.approx(1.0)

    def test_grid_functional_exact_zero_for_disjoint_support(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        func = GridFunctional(grid, -1.0, 0.0)
        f = GridFunction.indicator(grid, 1.0, 2.0)
        assert func(f) == 0.0

    def test_coordinate_functional(self):
        func = CoordinateFunctional(2, 3)
        assert func(np.array([5.0, 6.0, 7.0])) == 7.0

    def test_factorization_mismatch_rejected(self):
        A = demo_generator()
        bad = (np.ones((3, 1)), np.ones((1, 3)))
        with pytest.raises(InputError):
            CoupledSystem(
                MatrixSemigroup(A),
                MatrixSemigroup(A),
                DenseCoupling(0.1 * np.ones((3, 3))),
                DenseCoupling(0.1 * np.ones((3, 3))),
                factorization12=bad,
            )

    def test_product_vector_arithmetic(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        v = ProductVector(np.ones(3), GridFunction.indicator(grid, 0.0, 1.0))
        w = v + v
        assert np.allclose(w.first, 2.0 * np.ones(3))
        assert np.allclose(np.asarray(w.second.samples), 2.0 * np.asarray(v.second.samples))
        d = w - v
        assert np.allclose(d.first, v.first)
        s = v * 3.0
        assert np.allclose(s.first, 3.0 * np.ones(3))


class TestCoupledMatrixCarriers:
    def test_couple_matches_block_exponential(self):
        system = matrix_matrix_system()
        block = np.zeros((6, 6))
        A = demo_generator()
        block[:3, :3] = A
        block[3:, 3:] = A
        block[:3, 3:] = 0.1
        block[3:, :3] = 0.1
        dense = couple(system, 0.7)
        ref = expm(block, 0.7)
        assert np.max(np.abs(dense - ref)) <= 1e-9 * float(np.max(np.abs(ref)))

    def test_premise_check_passes(self):
        rep = coupling_premise_check(matrix_matrix_system())
        assert rep.ok
        assert rep.min_entry >= 0.0
        assert rep.pairs_checked > 0

    def test_negative_coupling_warns_and_still_returns(self):
        system = CoupledSystem(
            MatrixSemigroup(demo_generator()),
            MatrixSemigroup(demo_generator()),
            DenseCoupling(-0.1 * np.ones((3, 3))),
            DenseCoupling(0.1 * np.ones((3, 3))),
        )
        with pytest.warns(CouplingPremiseWarning):
            dense = couple(system, 0.5)
        assert dense.shape == (6, 6)

    def test_irreducibility_asserted_for_positive_coupling(self):
        rep = coupling_irreducibility_check(matrix_matrix_system())
        assert rep.asserted
        assert rep.sub_classifications == (
            "PersistentlyIrreducible",
            "PersistentlyIrreducible",
        )
        assert rep.witness_12 is not None and rep.witness_21 is not None

    def test_irreducibility_refused_when_a_block_vanishes(self):
        system = CoupledSystem(
            MatrixSemigroup(demo_generator()),
            MatrixSemigroup(demo_generator()),
            DenseCoupling(0.1 * np.ones((3, 3))),
            DenseCoupling(np.zeros((3, 3))),
        )
        rep = coupling_irreducibility_check(system)
        assert not rep.asserted
        assert "vanishes" in rep.notes

    def test_block_sign_pattern_agrees_with_graph_oracle(self):
        # the assembled 6x6 block generator must be irreducible exactly
        # when the coupled check asserts it
        from evpos.irreducibility import classify

        system = matrix_matrix_system()
        block = np.zeros((6, 6))
        block[:3, :3] = demo_generator()
        block[3:, 3:] = demo_generator()
        block[:3, 3:] = 0.1
        block[3:, :3] = 0.1
        assert classify(A=block).classification == "PersistentlyIrreducible"
        assert coupling_irreducibility_check(system).asserted


class TestCoupledLatticeCarrier:
    def test_series_terminates_when_return_window_is_unreachable(self):
        system = lattice_system()
        provider = CoupledProvider(system)
        seed = ProductVector(
            np.array([0.0, 1.0, 0.0]), system.provider2.zero_vector()
        )
        # grid feed is born on [0.5, 1.0) and moves left; the matrix-bound
        # window is [-1.0, 0.0), three cells further left, so until the
        # flow has had three lattice steps past birth the round-trip term
        # is identically zero and the series stops after first order
        terms = provider.orbit_terms(seed, 2 * 0.25)
        assert len(terms) <= 2
        # once the feed can travel back into the window a third term appears
        longer = provider.orbit_terms(seed, 4 * 0.25)
        assert len(longer) >= 3

    def test_apply_consistent_with_dense(self):
        system = lattice_system()
        provider = CoupledProvider(system)
        seed = ProductVector(
            np.array([1.0, 0.5, 0.25]),
            GridFunction.indicator(system.provider2.grid, -1.0, 1.0),
        )
        t = 0.5
        via_terms = provider.apply(t, seed)
        dense = provider.to_dense(t)
        stacked = np.concatenate(
            [seed.first, np.asarray(seed.second.samples)]
        )
        via_dense = dense @ stacked
        out = np.concatenate([via_terms.first, np.asarray(via_terms.second.samples)])
        assert np.max(np.abs(out - via_dense)) <= 1e-9 * max(1.0, np.max(np.abs(out)))

    def test_adjoint_pairing_identity(self):
        system = lattice_system()
        provider = CoupledProvider(system)
        grid = system.provider2.grid
        f = ProductVector(
            np.array([1.0, 0.0, 0.5]), GridFunction.indicator(grid, -1.0, 0.0)
        )
        phi = ProductVector(
            np.array([0.0, 1.0, 1.0]), GridFunction.indicator(grid, -2.0, 2.0)
        )
        t = 0.5
        lhs = provider.pair(provider.apply_adjoint(t, phi), f)
        rhs = provider.pair(phi, provider.apply(t, f))
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_off_lattice_time_rejected(self):
        provider = CoupledProvider(lattice_system())
        seed = ProductVector(np.ones(3), provider.system.provider2.zero_vector())
        with pytest.raises(ShiftNotOnGrid):
            provider.apply(0.3, seed)

    def test_envelope_dominates_observed_growth(self):
        provider = CoupledProvider(lattice_system())
        M, w = provider.envelope
        for q in (1, 2, 4):
            t = q * 0.25
            dense = provider.to_dense(t)
            assert np.linalg.norm(dense, 2) <= M * np.exp(w * t) * (1 + 1e-9)

    def test_mismatched_coupling_dimensions_rejected(self):
        grid = Grid1D(x_min=-2.0, h=0.25, count=16)
        with pytest.raises(InputError):
            CoupledSystem(
                MatrixSemigroup(demo_generator()),
                GammaShiftProvider(grid),
                RankOneCoupling(
                    output=np.array([1.0, 0.0]),  # wrong output dimension
                    functional=GridFunctional(grid, -1.0, 0.0),
                ),
                RankOneCoupling(
                    output=GridFunction.indicator(grid, 0.5, 1.0),
                    functional=CoordinateFunctional(2, 3),
                ),
            )
