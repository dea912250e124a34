import math

import numpy as np
import pytest

from ruelle import (
    PreconditionError,
    admissible_words,
    apply_operator,
    build_transfer_matrix,
    constant_potential,
    potential_from_weights,
    rpf_triplet,
    spectral_radius_sup_route,
    topological_pressure,
    zero_potential,
)

from conftest import (
    PHI,
    SQRT5,
    direct_operator_apply,
    f1,
    f2,
    f3,
    fib,
    golden_nu,
    random5_primitive,
    two_component_dag,
)


class TestBuild:
    def test_full_shift_all_ones(self):
        tm = build_transfer_matrix(f1(), zero_potential(f1()), depth=1)
        assert np.allclose(tm.dense(), np.ones((2, 2)))

    def test_golden_pattern_and_radius(self):
        tm = build_transfer_matrix(f2(), zero_potential(f2()), depth=1)
        dense = tm.dense()
        assert dense[tm.word_index[(0,)], tm.word_index[(0,)]] == 0.0
        assert np.linalg.eigvals(dense).max() == pytest.approx(PHI)

    def test_permutation_eigenvalues(self):
        tm = build_transfer_matrix(f3(), zero_potential(f3()), depth=1)
        eig = sorted(np.linalg.eigvals(tm.dense()).real)
        assert eig == pytest.approx([-1.0, 1.0])

    def test_depth_too_small_rejected(self):
        phi = potential_from_weights({w: 0.0 for w in admissible_words(f2(), 3)})
        with pytest.raises(PreconditionError):
            build_transfer_matrix(f2(), phi, depth=1)

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_matrix_matches_direct_summation(self, depth, rng):
        ts, phi = random5_primitive()
        tm = build_transfer_matrix(ts, phi, depth=depth)
        f = rng.uniform(0.1, 1.0, size=tm.dim)
        by_word = dict(zip(tm.words, f))
        out = tm.apply(f)
        for w, i in tm.word_index.items():
            assert out[i] == pytest.approx(
                direct_operator_apply(ts, phi, by_word, w), rel=1e-14
            )


class TestApply:
    def test_full_shift_doubling(self):
        tm = build_transfer_matrix(f1(), zero_potential(f1()), depth=1)
        out = apply_operator(tm, np.ones(2), n=7)
        assert np.allclose(out, 2.0**7)

    def test_golden_fibonacci_counts(self):
        # Entries of the iterated operator at one count admissible
        # predecessor words.
        tm = build_transfer_matrix(f2(), zero_potential(f2()), depth=1)
        for n in range(1, 15):
            out = apply_operator(tm, np.ones(2), n=n)
            total = out.sum()
            assert total == fib(n + 3)  # number of admissible words of length n+1

    def test_permutation_involution(self):
        tm = build_transfer_matrix(f3(), zero_potential(f3()), depth=1)
        f = np.array([0.3, 1.7])
        assert np.allclose(apply_operator(tm, f, n=2), f)

    def test_shape_mismatch(self):
        tm = build_transfer_matrix(f1(), zero_potential(f1()), depth=1)
        with pytest.raises(PreconditionError):
            apply_operator(tm, np.ones(3))


class TestRpfTriplet:
    def test_full_shift(self):
        trip = rpf_triplet(build_transfer_matrix(f1(), zero_potential(f1()), depth=1))
        assert trip.lam == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(trip.g, 1.0)
        assert np.allclose(trip.nu, 0.5)

    def test_golden_closed_forms(self):
        trip = rpf_triplet(build_transfer_matrix(f2(), zero_potential(f2()), depth=1))
        assert trip.lam == pytest.approx(PHI, abs=1e-11)
        i0 = trip.tm.word_index[(0,)]
        i1 = trip.tm.word_index[(1,)]
        assert trip.g[i1] == pytest.approx(1.0)
        assert trip.g[i0] == pytest.approx(1.0 / PHI, abs=1e-11)
        assert trip.nu[i0] == pytest.approx(golden_nu(0), abs=1e-11)
        assert trip.nu[i1] == pytest.approx(golden_nu(1), abs=1e-11)

    def test_permutation_via_averaging(self):
        trip = rpf_triplet(build_transfer_matrix(f3(), zero_potential(f3()), depth=1))
        assert trip.lam == pytest.approx(1.0, abs=1e-12)
        assert trip.period_used == 2
        assert np.allclose(trip.g, 1.0)

    def test_residuals_tiny(self):
        ts, phi = random5_primitive()
        trip = rpf_triplet(build_transfer_matrix(ts, phi))
        assert trip.residual_g <= 1e-10
        assert trip.residual_nu <= 1e-10

    def test_zero_radius_rejected(self):
        sub = type(f1())(f1().alphabet, frozenset({(0, 1)}))
        phi = constant_potential(f1(), 0.0)
        with pytest.raises(PreconditionError):
            rpf_triplet(build_transfer_matrix(sub, phi, depth=1, index_structure=f1()))
        with pytest.raises(PreconditionError):
            rpf_triplet(build_transfer_matrix(sub, phi, depth=1))

    def test_nu_mass_recursion_consistent(self):
        trip = rpf_triplet(build_transfer_matrix(f2(), zero_potential(f2()), depth=1))
        # nu[w] = lam^{-(len-1)} nu[last] for the zero potential.
        for w in admissible_words(f2(), 4):
            if not f2().has_nonempty_cylinder(w):
                continue
            expected = PHI ** (1 - len(w)) * golden_nu(w[-1])
            assert trip.nu_mass(w) == pytest.approx(expected, rel=1e-10)

    def test_mu_mass_additive(self):
        trip = rpf_triplet(build_transfer_matrix(f2(), zero_potential(f2()), depth=1))
        for w in admissible_words(f2(), 3):
            if not f2().has_nonempty_cylinder(w):
                continue
            kids = [w + (c,) for c in f2().successors[w[-1]]]
            assert trip.mu_mass(w) == pytest.approx(
                sum(trip.mu_mass(k) for k in kids), rel=1e-10
            )


class TestSupRoute:
    def test_full_shift_constant(self):
        seq = spectral_radius_sup_route(f1(), zero_potential(f1()), 10)
        assert all(v == pytest.approx(2.0) for v in seq)

    def test_golden_converges(self):
        seq = spectral_radius_sup_route(f2(), zero_potential(f2()), 60)
        assert seq[-1] == pytest.approx(PHI, abs=1e-2)
        assert abs(seq[-1] - PHI) < abs(seq[5] - PHI)

    def test_acyclic_decays_to_zero(self):
        sub = type(f1())(f1().alphabet, frozenset({(0, 1)}))
        phi = constant_potential(f1(), 0.0)
        seq = spectral_radius_sup_route(sub, phi, 6, index_structure=f1())
        assert seq[-1] == 0.0


class TestPressure:
    def test_full_shift_log2_every_n(self):
        rep = topological_pressure(f1(), zero_potential(f1()), n_max=12)
        assert all(u == pytest.approx(math.log(2)) for u in rep.upper)
        assert rep.spectral == pytest.approx(math.log(2), abs=1e-12)

    def test_golden_bracket_and_rate(self):
        rep = topological_pressure(f2(), zero_potential(f2()), n_max=40)
        target = math.log(PHI)
        assert rep.bracket[0] <= target <= rep.bracket[1]
        assert rep.spectral == pytest.approx(target, abs=1e-11)
        # The upper route converges at rate O(1/n): n * (upper - target) is
        # bounded and approaches the constant log((phi^2)/sqrt5).
        gaps = [n * (u - target) for n, u in zip(rep.ns, rep.upper)]
        const = math.log(PHI**2 / SQRT5)
        assert gaps[-1] == pytest.approx(const, abs=0.05)

    def test_constant_shift(self):
        c = 0.37
        rep0 = topological_pressure(f1(), zero_potential(f1()), n_max=10)
        repc = topological_pressure(f1(), constant_potential(f1(), c), n_max=10)
        assert repc.spectral == pytest.approx(rep0.spectral + c, abs=1e-11)

    def test_spectral_inside_bracket_on_fixtures(self):
        cases = [
            (f1(), zero_potential(f1())),
            (f2(), zero_potential(f2())),
            (f2(), potential_from_weights({(0, 1): 0.4, (1, 0): -0.1, (1, 1): 0.2})),
            random5_primitive(),
        ]
        for ts, phi in cases:
            rep = topological_pressure(ts, phi, n_max=30)
            assert rep.bracket[0] <= rep.spectral <= rep.bracket[1] + 1e-12

    def test_not_summable_rejected(self):
        from ruelle import TailModel
        from ruelle.applications import renewal_potential
        from conftest import f4, f4_spec

        phi = renewal_potential(f4_spec(6), f4(6))
        phi = potential_from_weights(phi.weights, tail=TailModel.harmonic())
        with pytest.raises(PreconditionError):
            topological_pressure(f4(6), phi, n_max=6)


class TestStructureProperties:
    def test_radius_is_max_over_components(self):
        # Block fixture: dominant full 2-shift feeding a slow self-loop.
        ts, phi = two_component_dag(forward=True)
        tm = build_transfer_matrix(ts, phi, depth=1)
        lam_full = rpf_triplet(tm).lam
        from ruelle.spectral import component_pressures

        per_comp = component_pressures(ts, phi)
        assert lam_full == pytest.approx(math.exp(max(per_comp)), abs=1e-10)
        assert sorted(math.exp(q) for q in per_comp) == pytest.approx([1.5, 2.0], abs=1e-10)

    def test_three_component_max(self):
        from ruelle import from_entries
        from ruelle.spectral import component_pressures

        ts = from_entries(
            (0, 1, 2, 3),
            [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3)],
        )
        phi = potential_from_weights(
            {(0,): math.log(1.2), (1,): math.log(1.9), (2,): math.log(0.7), (3,): math.log(1.4)}
        )
        tm = build_transfer_matrix(ts, phi, depth=1)
        lam = rpf_triplet(tm).lam
        assert lam == pytest.approx(1.9, abs=1e-10)
        assert math.exp(max(component_pressures(ts, phi))) == pytest.approx(1.9, abs=1e-10)

    def test_monotone_under_holes(self):
        lam_closed = rpf_triplet(build_transfer_matrix(f1(), zero_potential(f1()), depth=1)).lam
        lam_open = rpf_triplet(build_transfer_matrix(f2(), zero_potential(f2()), depth=1)).lam
        assert lam_open < lam_closed

    def test_deeper_reduction_same_radius(self):
        for depth in (1, 2, 3):
            trip = rpf_triplet(build_transfer_matrix(f2(), zero_potential(f2()), depth=depth))
            assert trip.lam == pytest.approx(PHI, abs=1e-10)
