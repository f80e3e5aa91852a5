import math
import unittest
import numpy as np
from flagmixvol import Constants, Provenance, MCConfig, Grassmann, MonteCarlo
from flagmixvol.MultiVector import det
from flagmixvol.Constants import binom


def f22(theta):
    """Closed form of F_{2,2} in R^4"""
    s = math.sin(theta)
    return (theta / s) * 0.5 * (s / theta - math.cos(theta)) / s ** 2 / (2 * math.pi ** 2)


class ConstantsTests(unittest.TestCase):
    def test_sphere_area(self):
        self.assertAlmostEqual(Constants.sphere_area(0), 2.0)
        self.assertAlmostEqual(Constants.sphere_area(1), 2 * math.pi)
        self.assertAlmostEqual(Constants.sphere_area(2), 4 * math.pi)
        self.assertAlmostEqual(Constants.sphere_area(3), 2 * math.pi ** 2)
        self.assertRaises(ValueError, Constants.sphere_area, -1)

    def test_ball_volume(self):
        self.assertAlmostEqual(Constants.ball_volume(0), 1.0)
        self.assertAlmostEqual(Constants.ball_volume(1), 2.0)
        self.assertAlmostEqual(Constants.ball_volume(2), math.pi)
        self.assertAlmostEqual(Constants.ball_volume(3), 4 * math.pi / 3)

    def test_beta_const(self):
        # G(d,1) is the projective space: half the sphere
        self.assertAlmostEqual(Constants.beta_const(3, 1), 2 * math.pi)
        self.assertAlmostEqual(Constants.beta_const(4, 0), 1.0)
        self.assertAlmostEqual(Constants.beta_const(4, 1), Constants.beta_const(4, 3))

    def test_gamma_consts(self):
        tilde, gamma = Constants.gamma_consts(4, 2)
        self.assertAlmostEqual(gamma, 3 / (2 * math.pi), delta=1e-12)
        self.assertAlmostEqual(tilde, 0.75, delta=1e-12)
        self.assertAlmostEqual(Constants.gamma_consts(3, 2)[1], 0.5, delta=1e-12)
        self.assertAlmostEqual(Constants.gamma_consts(3, 1)[1], 1 / math.pi, delta=1e-12)
        self.assertAlmostEqual(Constants.gamma_consts(3, 0)[1], 1 / (4 * math.pi), delta=1e-12)
        self.assertAlmostEqual(Constants.gamma_consts(2, 1)[1], 0.5, delta=1e-12)
        self.assertRaises(ValueError, Constants.gamma_consts, 3, 3)

    def test_binom(self):
        self.assertEqual(binom(4, 2), 6)
        self.assertEqual(binom(3, 5), 0)
        self.assertEqual(binom(3, -1), 0)


class AngularWeightTests(unittest.TestCase):
    def test_endpoints(self):
        self.assertAlmostEqual(Constants.F_kl(0.0, 2, 2), 1 / (2 * math.pi ** 2), delta=1e-15)
        self.assertEqual(Constants.F_kl(math.pi, 2, 2), 0.0)

    def test_invalid(self):
        self.assertRaises(ValueError, Constants.F_kl, 1.0, 0, 3)
        self.assertRaises(ValueError, Constants.F_kl, -0.1, 1, 2)
        self.assertRaises(ValueError, Constants.F_kl_eps, 1.0, 1, 2, math.pi)

    def test_f22_closed_form(self):
        self.assertAlmostEqual(Constants.F_kl(math.pi / 2, 2, 2), 1 / (4 * math.pi ** 2), delta=1e-12)
        for theta in (0.3, 1.0, 2.0, 2.9):
            self.assertAlmostEqual(Constants.F_kl(theta, 2, 2), f22(theta), delta=1e-10)

    def test_f22_limit(self):
        beta = math.pi - 1e-3
        self.assertAlmostEqual(Constants.F_kl(beta, 2, 2) * math.sin(beta) ** 3, 1 / (4 * math.pi), delta=1e-4)

    def test_array_matches_scalar(self):
        theta = np.linspace(0.0, math.pi, 41)
        for k, l in ((1, 1), (1, 2), (2, 1), (2, 2), (1, 3)):
            values = Constants.F_kl_array(theta, k, l)
            for t, v in zip(theta, values):
                expected = Constants.F_kl(float(t), k, l)
                self.assertAlmostEqual(v, expected, delta=1e-10 * max(1.0, abs(expected)))

    def test_array_cutoff(self):
        theta = np.array([0.5, 2.0, 2.5, 3.0])
        values = Constants.F_kl_array(theta, 1, 2, eps=1.0)
        self.assertEqual(values[2], 0.0)
        self.assertEqual(values[3], 0.0)
        self.assertAlmostEqual(values[1], Constants.F_kl_eps(2.0, 1, 2, 1.0), delta=1e-10)
        self.assertEqual(Constants.F_kl_eps(3.0, 1, 2, 0.5), 0.0)

    def test_bound(self):
        theta = np.linspace(0.01, math.pi - 1e-4, 200)
        for k, l in ((1, 2), (2, 2), (1, 3)):
            d = k + l
            scaled = Constants.F_kl_array(theta, k, l) * np.sin(theta) ** (d - 1)
            self.assertTrue((scaled <= Constants.F_kl_bound(k, l) * (1 + 1e-12)).all())

    def test_monotone_in_cutoff(self):
        theta = np.linspace(0.1, 3.1, 30)
        previous = Constants.F_kl_array(theta, 2, 2, eps=1.0)
        for eps in (0.5, 0.1, 0.01):
            current = Constants.F_kl_array(theta, 2, 2, eps=eps)
            self.assertTrue((current >= previous).all())
            previous = current


class MomentConstantsTests(unittest.TestCase):
    def test_exact_c(self):
        np.testing.assert_allclose(Constants.exact_c(3, 1), [1 / 5, 1 / 15], atol=1e-15)
        np.testing.assert_allclose(Constants.exact_c(3, 2), [1 / 5, 1 / 15], atol=1e-15)
        np.testing.assert_allclose(Constants.exact_c(2, 1), [3 / 8, 1 / 8], atol=1e-15)
        np.testing.assert_allclose(Constants.exact_c(4, 0), [1.0])
        self.assertIsNone(Constants.exact_c(4, 2))

    def test_c_constants_exact(self):
        values, errors, provenance = Constants.c_constants(3, 1, exact=True)
        np.testing.assert_allclose(values, [1 / 5, 1 / 15], atol=1e-15)
        self.assertEqual(list(errors), [0.0, 0.0])
        self.assertEqual(provenance, [Provenance.EXACT, Provenance.EXACT])

    def test_c_constants_sampled(self):
        values, errors, provenance = Constants.c_constants(3, 1, MCConfig(sample_count=200_000, seed=3))
        self.assertEqual(provenance, [Provenance.MC, Provenance.MC])
        self.assertAlmostEqual(values[0], 1 / 5, delta=4 * errors[0])
        self.assertAlmostEqual(values[1], 1 / 15, delta=4 * errors[1])

    def test_c_constants_trivial_grades(self):
        values, _, provenance = Constants.c_constants(3, 0, MCConfig(sample_count=10))
        self.assertEqual(list(values), [1.0])
        self.assertEqual(provenance, [Provenance.EXACT])

    def test_c_constants_imprecise(self):
        config = MCConfig(sample_count=500, target_rel_error=1e-6)
        _, _, provenance = Constants.c_constants(4, 2, config)
        self.assertIn(Provenance.MC_IMPRECISE, provenance)

    def test_first_moment(self):
        # sum_i d(i,k) c^d_{k,i} is E<A,V>^2 over G(d,k), which is 1/C(d,k)
        def weighted_sum(d, k, c):
            return sum(binom(k, i) * binom(d - k, i) * value for i, value in enumerate(c))

        self.assertAlmostEqual(weighted_sum(3, 1, Constants.exact_c(3, 1)), 1 / 3, delta=1e-15)
        self.assertAlmostEqual(weighted_sum(5, 4, Constants.exact_c(5, 4)), 1 / 5, delta=1e-15)

        config = MCConfig(sample_count=200_000, seed=5)
        values, errors, _ = Constants.c_constants(4, 2, config)
        error = weighted_sum(4, 2, errors)
        self.assertAlmostEqual(weighted_sum(4, 2, values), 1 / 6, delta=4 * error)

        def sampler(rng, n):
            frames = Grassmann.sample_grassmann(4, 2, rng, size=n)
            return det(frames[:, :2, :]) ** 2, 1.0

        direct = MonteCarlo.integrate(sampler, config.spawn(1))
        self.assertAlmostEqual(weighted_sum(4, 2, values), direct.mean, delta=4 * math.hypot(error, direct.std_error))

    def test_d_matrix(self):
        np.testing.assert_allclose(Constants.d_matrix(3, 1, Constants.exact_c(3, 1)),
                                   np.array([[3, 1], [2, 4]]) / 15, atol=1e-12)
        np.testing.assert_allclose(Constants.d_matrix(2, 1, Constants.exact_c(2, 1)),
                                   np.array([[3, 1], [1, 3]]) / 8, atol=1e-12)
        np.testing.assert_allclose(Constants.d_matrix(3, 0, [1.0]), [[1.0]])

    def test_d_matrix_invalid(self):
        self.assertRaises(ValueError, Constants.d_matrix, 3, 1, [0.2])
        self.assertRaises(RuntimeError, Constants.d_matrix, 3, 1, [0.0, 0.0])
