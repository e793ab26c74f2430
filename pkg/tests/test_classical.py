from itertools import combinations
from math import comb, sqrt

import numpy as np
import pytest

from bpl import basis, qsim
from bpl.bloch import BlochDistribution
from bpl.classical import (
    CodeDistribution,
    CodeSearchError,
    IntervalDistribution,
    MultilinearFunction,
    biased_char,
    build_code_distribution,
    chebyshev_floor,
    expand_psi,
    majority_levels,
    majority_multilinear,
    min_distance,
    psi_to_monomial,
    random_bounded_multilinear,
    truncate_classical,
    truncation_blowup_scan,
    truncation_error_classical,
)


def all_vertices(n: int) -> np.ndarray:
    return np.array(
        [[1.0 if (v >> i) & 1 == 0 else -1.0 for i in range(n)] for v in range(2 ** n)]
    )


def vertex_probabilities(points: np.ndarray, mu: float) -> np.ndarray:
    """Product probabilities of +-1 vertices under the mean-mu two-point law."""
    up = (1.0 + mu) / 2.0
    return np.prod(np.where(points > 0, up, 1.0 - up), axis=1)


def brute_force_psi_coefficients(f: MultilinearFunction, mu: float) -> dict:
    """Oracle: centered-basis coefficients as explicit vertex averages."""
    n = f.n
    pts = all_vertices(n)
    p = vertex_probabilities(pts, mu)
    vals = f(pts)
    s = sqrt(1.0 - mu * mu)
    out = {}
    for size in range(n + 1):
        for subset in combinations(range(n), size):
            char = np.prod((pts[:, list(subset)] - mu) / s, axis=1) if subset else np.ones(2 ** n)
            out[frozenset(subset)] = float(p @ (vals * char))
    return out


class TestMultilinearFunction:
    def test_evaluate_matches_term_sum(self, rng):
        f = MultilinearFunction(3, {(0,): 0.5, (0, 1, 2): -0.25, (): 0.1})
        x = rng.uniform(-1, 1, size=(10, 3))
        want = 0.1 + 0.5 * x[:, 0] - 0.25 * x[:, 0] * x[:, 1] * x[:, 2]
        assert np.allclose(f(x), want)

    def test_degree_and_l1(self):
        f = MultilinearFunction(4, {(1, 3): 0.5, (2,): -0.5})
        assert f.degree == 2
        assert f.l1_norm() == pytest.approx(1.0)

    def test_vertex_values_match_direct_loop(self, rng):
        f = random_bounded_multilinear(6, 4, 8, rng)
        got = f._vertex_values()
        want = f(all_vertices(6))
        assert np.allclose(got, want, atol=1e-12)

    def test_bounded_check(self):
        assert MultilinearFunction(3, {(0,): 1.0}).sup_norm_bounded()
        assert not MultilinearFunction(3, {(0,): 1.0, (1,): 1.0}).sup_norm_bounded()

    def test_subset_validation(self):
        with pytest.raises(ValueError):
            MultilinearFunction(2, {(0, 5): 1.0})


class TestIntervalDistribution:
    def test_moments(self):
        d = IntervalDistribution([0.9, -0.9], [0.5, 0.5])
        assert d.mean() == pytest.approx(0.0)
        assert d.variance() == pytest.approx(0.81)

    def test_eta_bound_enforced(self):
        with pytest.raises(ValueError, match="declared bound"):
            IntervalDistribution([0.95], [1.0], eta=0.2)
        d = IntervalDistribution([0.8, -0.8], [0.3, 0.7], eta=0.2)
        assert d.eta == 0.2

    def test_orthonormal_normalized_coordinate(self, rng):
        # {1, (x - mu) / sigma} is orthonormal under any discrete distribution.
        for _ in range(50):
            k = int(rng.integers(2, 6))
            atoms = rng.uniform(-0.9, 0.9, size=k)
            d = IntervalDistribution(atoms, rng.dirichlet(np.ones(k)))
            phi = (d.atoms - d.mean()) / sqrt(d.variance())
            assert d.weights @ phi == pytest.approx(0.0, abs=1e-12)
            assert d.weights @ phi ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_bernoulli_maximizes_variance(self, rng):
        # Any distribution on [-(1 - eta), 1 - eta] has variance at most
        # (1 - eta)^2 (1 - mu^2).
        for _ in range(200):
            k = int(rng.integers(1, 6))
            eta = rng.uniform(0.05, 0.6)
            atoms = rng.uniform(-(1 - eta), 1 - eta, size=k)
            d = IntervalDistribution(atoms, rng.dirichlet(np.ones(k)), eta=eta)
            mu = d.mean()
            assert d.variance() <= (1 - eta) ** 2 * (1 - mu ** 2) + 1e-12


class TestBiasedChar:
    def test_empty_subset(self):
        assert biased_char((), [0.5, 0.5], 0.3, 0.9) == 1.0

    def test_centered_at_mean(self):
        assert biased_char((0,), [0.4], 0.4, 0.5) == pytest.approx(0.0)

    def test_plain_monomial(self):
        assert biased_char((0, 1), [0.5, -0.4], 0.0, 1.0) == pytest.approx(-0.2)

    def test_zero_scale_rejected(self):
        with pytest.raises(ValueError):
            biased_char((0,), [0.5], 0.0, 0.0)


class TestExpandPsi:
    def test_zero_mean_is_monomial_expansion(self, rng):
        f = random_bounded_multilinear(5, 3, 6, rng)
        got = expand_psi(f, 0.0)
        assert got == f.coeffs

    def test_single_variable_shift(self):
        f = MultilinearFunction(2, {(0,): 1.0})
        got = expand_psi(f, 0.5)
        assert got[frozenset()] == pytest.approx(0.5)
        assert got[frozenset([0])] == pytest.approx(sqrt(0.75))

    def test_majority_three(self):
        f = majority_multilinear(3)
        got = expand_psi(f, 0.0)
        for subset in [(0,), (1,), (2,)]:
            assert got[frozenset(subset)] == pytest.approx(0.5)
        assert got[frozenset([0, 1, 2])] == pytest.approx(-0.5)
        assert sum(v * v for v in got.values()) == pytest.approx(1.0)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 7))
            mu = float(rng.uniform(-0.8, 0.8))
            f = random_bounded_multilinear(n, n, 2 * n, rng)
            got = expand_psi(f, mu)
            want = brute_force_psi_coefficients(f, mu)
            for subset, coeff in want.items():
                assert got.get(subset, 0.0) == pytest.approx(coeff, abs=1e-10)

    def test_parseval(self, rng):
        # Coefficient mass equals the second moment under the matching
        # two-point product law, computed exhaustively.
        for _ in range(100):
            n = int(rng.integers(2, 13))
            mu = float(rng.uniform(-0.9, 0.9))
            f = random_bounded_multilinear(n, min(n, 5), 8, rng)
            coeffs = expand_psi(f, mu)
            lhs = sum(v * v for v in coeffs.values())
            pts = all_vertices(n)
            rhs = vertex_probabilities(pts, mu) @ f(pts) ** 2
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_round_trip(self, rng):
        f = random_bounded_multilinear(6, 4, 10, rng)
        back = psi_to_monomial(6, expand_psi(f, 0.4), 0.4)
        for subset, coeff in f.coeffs.items():
            assert back.coeffs.get(subset, 0.0) == pytest.approx(coeff, abs=1e-10)


class TestTruncateClassical:
    def test_full_degree_is_identity(self, rng):
        f = random_bounded_multilinear(5, 5, 10, rng)
        t = truncate_classical(f, 5, 0.3)
        x = rng.uniform(-1, 1, size=(20, 5))
        assert np.allclose(t(x), f(x), atol=1e-10)

    def test_majority_three_linear_part(self):
        t = truncate_classical(majority_multilinear(3), 1, 0.0)
        assert t.coeffs == {
            frozenset([0]): 0.5,
            frozenset([1]): 0.5,
            frozenset([2]): 0.5,
        }

    def test_degree_zero_is_biased_mean(self, rng):
        f = random_bounded_multilinear(4, 3, 6, rng)
        mu = 0.35
        t = truncate_classical(f, 0, mu)
        pts = all_vertices(4)
        want = vertex_probabilities(pts, mu) @ f(pts)
        assert set(t.coeffs) <= {frozenset()}
        assert t.coeffs.get(frozenset(), 0.0) == pytest.approx(want, abs=1e-10)


class TestTruncationErrorClassical:
    def test_majority_three_hand_value(self):
        d = IntervalDistribution.uniform_pair(0.9)
        err = truncation_error_classical(majority_multilinear(3), d, 1)
        assert err == pytest.approx(0.25 * 0.81 ** 3, abs=1e-12)
        # And the certificate dominates it.
        bound = d.variance() / (1.0 - d.mean() ** 2)
        assert err <= bound

    def test_full_degree_error_is_zero(self, rng):
        f = random_bounded_multilinear(4, 4, 8, rng)
        d = IntervalDistribution([0.7, -0.1, 0.3], [0.2, 0.5, 0.3])
        assert truncation_error_classical(f, d, 4) == pytest.approx(0.0, abs=1e-15)

    def test_agrees_with_naive_loop(self, rng):
        for _ in range(5):
            n = 3
            f = random_bounded_multilinear(n, 3, 6, rng)
            atoms = rng.uniform(-0.85, 0.85, size=3)
            d = IntervalDistribution(atoms, rng.dirichlet(np.ones(3)))
            mu = d.mean()
            for degree in (0, 1, 2):
                t = truncate_classical(f, degree, mu)
                total = 0.0
                for i in range(3):
                    for j in range(3):
                        for k in range(3):
                            x = np.array([[atoms[i], atoms[j], atoms[k]]])
                            w = d.weights[i] * d.weights[j] * d.weights[k]
                            total += w * float(f(x)[0] - t(x)[0]) ** 2
                got = truncation_error_classical(f, d, degree)
                assert got == pytest.approx(total, abs=1e-11)

    def test_variance_ratio_certificate(self, rng):
        # Bounded targets decay at least as fast as (sigma^2 / (1 - mu^2))^d.
        for _ in range(50):
            n = int(rng.integers(2, 8))
            f = random_bounded_multilinear(n, n, 2 * n, rng)
            k = int(rng.integers(2, 5))
            atoms = rng.uniform(-0.9, 0.9, size=k)
            d = IntervalDistribution(atoms, rng.dirichlet(np.ones(k)))
            ratio = d.variance() / (1.0 - d.mean() ** 2)
            for degree in range(n + 1):
                err = truncation_error_classical(f, d, degree)
                assert err <= ratio ** degree + 1e-9

    def test_monte_carlo_fallback(self, rng):
        f = random_bounded_multilinear(4, 3, 6, rng)
        d = IntervalDistribution([0.6, -0.4], [0.7, 0.3])
        exact = truncation_error_classical(f, d, 1)
        est, se = truncation_error_classical(f, d, 1, mc_samples=40000, rng=rng)
        assert abs(est - exact) <= 4.0 * se + 1e-7


class TestQuantumEmbedding:
    def test_z_axis_distribution_matches_quantum_truncation(self, rng):
        # A z-axis-only state distribution with a diagonal word observable is
        # exactly the commutative setting; truncation errors must coincide.
        for _ in range(5):
            n = 2
            atoms = rng.uniform(-0.85, 0.85, size=3)
            weights = rng.dirichlet(np.ones(3))
            qd = BlochDistribution([[0.0, 0.0, a] for a in atoms], weights)
            cd = IntervalDistribution(atoms, weights)
            coeffs = {
                (): float(rng.normal()) * 0.2,
                (0,): float(rng.normal()) * 0.2,
                (1,): float(rng.normal()) * 0.2,
                (0, 1): float(rng.normal()) * 0.2,
            }
            f = MultilinearFunction(n, coeffs)
            obs = (
                coeffs[()] * np.eye(4)
                + coeffs[(0,)] * qsim.pauli_to_operator("ZI")
                + coeffs[(1,)] * qsim.pauli_to_operator("IZ")
                + coeffs[(0, 1)] * qsim.pauli_to_operator("ZZ")
            )
            for degree in (0, 1, 2):
                q_err = basis.truncation_error_exact(obs, degree, qd)
                c_err = truncation_error_classical(f, cd, degree)
                assert q_err == pytest.approx(c_err, abs=1e-9)


class TestMajorityLevels:
    def test_three_inputs(self):
        assert majority_levels(3) == [0.0, 0.5, 0.0, -0.5]

    def test_five_inputs_level_one_weight(self):
        levels = majority_levels(5)
        assert 5 * levels[1] ** 2 == pytest.approx(0.703125)
        total = sum(comb(5, k) * levels[k] ** 2 for k in range(6))
        assert total == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 7, 9, 11, 13, 15])
    def test_matches_brute_force(self, n):
        levels = majority_levels(n)
        pts = all_vertices(n)
        maj = np.sign(pts.sum(axis=1))
        for k in range(n + 1):
            subset = list(range(k))
            char = np.prod(pts[:, subset], axis=1) if k else np.ones(len(pts))
            want = float(np.mean(maj * char))
            assert levels[k] == pytest.approx(want, abs=1e-12)

    def test_level_weight_scaling_band(self):
        # Weight at odd level k times k^(3/2) stays within a constant band.
        n = 25
        levels = majority_levels(n)
        for k in range(1, n + 1, 2):
            scaled = comb(n, k) * levels[k] ** 2 * k ** 1.5
            assert 0.1 <= scaled <= 10.0

    def test_rejects_even_or_large(self):
        with pytest.raises(ValueError):
            majority_levels(4)
        with pytest.raises(ValueError):
            majority_levels(33)


class TestBlowupScan:
    def test_untruncated_majority_stays_bounded(self):
        # delta = 1 keeps every level; a bounded function cannot exceed 1.
        _, max_abs = truncation_blowup_scan(3, 1.0, 0.3, 0.7)
        assert max_abs <= 1.0 + 1e-12

    def test_growth_across_sizes(self):
        values = [truncation_blowup_scan(n, 0.2, 0.3, 0.7)[1] for n in (15, 21, 25)]
        assert values[0] < values[1] < values[2]

    def test_scan_matches_direct_polynomial(self):
        n, delta = 15, 0.2
        t_star, max_abs = truncation_blowup_scan(n, delta, 0.3, 0.7, grid=501)
        levels = majority_levels(n)
        d = int(np.floor(delta * n))
        val = sum(comb(n, k) * levels[k] * t_star ** k for k in range(d + 1))
        assert abs(val) == pytest.approx(max_abs, abs=1e-12)

    def test_chebyshev_floor_on_power_function(self):
        # max over [-1, 1] of t^d is 1, above the monic floor 2^(1-d).
        for d in range(1, 12):
            assert 1.0 >= chebyshev_floor(d)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            truncation_blowup_scan(15, 0.2, 0.7, 0.3)
        with pytest.raises(ValueError):
            truncation_blowup_scan(3, 0.1, 0.3, 0.7)


class TestCodeDistribution:
    def test_repetition_pair_is_valid(self):
        words = np.array([[1.0] * 10, [-1.0] * 10])
        code = CodeDistribution(words, 0.1, np.array([1.0, -1.0]))
        assert min_distance(code.codewords) == 10
        assert np.allclose(np.abs(code.atoms), 0.9)

    def test_random_code_shape_and_distance(self):
        code = build_code_distribution(20, 0.1, np.random.default_rng(3))
        assert code.codewords.shape == (4, 20)
        assert min_distance(code.codewords) >= 5
        assert set(np.unique(code.labels)) <= {-1.0, 1.0}

    def test_sampling(self):
        code = build_code_distribution(20, 0.1, np.random.default_rng(3))
        x, y = code.sample(np.random.default_rng(0), size=100)
        assert x.shape == (100, 20)
        # Every sample is a scaled codeword with its own label.
        for xi, yi in zip(x[:10], y[:10]):
            matches = np.all(np.isclose(code.atoms, xi), axis=1)
            assert matches.any()
            assert code.labels[np.argmax(matches)] == yi

    def test_unreachable_distance_raises(self):
        with pytest.raises(CodeSearchError):
            build_code_distribution(
                20, 0.1, np.random.default_rng(0), rate=0.3, distance_fraction=0.45, max_tries=40
            )

    def test_guard_on_large_n(self):
        with pytest.raises(ValueError):
            build_code_distribution(40, 0.1, np.random.default_rng(0))


class TestRandomBoundedMultilinear:
    def test_is_bounded(self, rng):
        for _ in range(20):
            f = random_bounded_multilinear(8, 4, 10, rng)
            assert f.sup_norm_bounded()
            assert f.degree <= 4
