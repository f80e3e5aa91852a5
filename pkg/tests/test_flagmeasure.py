import math
import unittest
import numpy as np
from flagmixvol import FlagMeasure, Polytope, Ball, MCConfig, Constants

CONFIG = MCConfig(sample_count=100_000, seed=1)


class BallTests(unittest.TestCase):
    def test_intrinsic_volumes(self):
        ball = Ball(3)
        self.assertAlmostEqual(ball.intrinsic_volume(0), 1.0)
        self.assertAlmostEqual(ball.intrinsic_volume(1), 4.0)
        self.assertAlmostEqual(ball.intrinsic_volume(2), 2 * math.pi)
        self.assertAlmostEqual(ball.intrinsic_volume(3), 4 * math.pi / 3)
        self.assertAlmostEqual(Ball(3, radius=2).intrinsic_volume(2), 8 * math.pi)

    def test_invalid(self):
        self.assertRaises(ValueError, Ball, 3, 0)
        self.assertRaises(ValueError, Ball, 3, 1.0, [0, 0])
        self.assertRaises(ValueError, Ball(3).sample_flags, 3, np.random.default_rng(0), 10)

    def test_transforms(self):
        ball = Ball(4, center=[1, 0, 0, 0])
        np.testing.assert_allclose(ball.reflect().center, [-1, 0, 0, 0])
        np.testing.assert_allclose(ball.translate([0, 1, 0, 0]).center, [1, 1, 0, 0])
        self.assertEqual(ball.scale(3).radius, 3.0)
        self.assertRaises(ValueError, ball.rotate, np.ones((4, 4)))


class FlagMeasureTests(unittest.TestCase):
    def test_cube_mass(self):
        cube = Polytope.make_box(3)
        for k in (1, 2):
            estimate = FlagMeasure.omega_integrate(cube, k, None, CONFIG)
            self.assertAlmostEqual(estimate.mean, 3.0, delta=4 * estimate.std_error)

    def test_cube_vertex_mass(self):
        estimate = FlagMeasure.omega_integrate(Polytope.make_box(3), 0, None, CONFIG)
        self.assertAlmostEqual(estimate.mean, 1.0, delta=4 * estimate.std_error)

    def test_square4d_mass(self):
        estimate = FlagMeasure.omega_integrate(Polytope.make_square4d(), 2, None, CONFIG)
        self.assertAlmostEqual(estimate.mean, 1.0, delta=4 * estimate.std_error)
        circle = FlagMeasure.omega_square4d(None, CONFIG)
        self.assertAlmostEqual(circle.mean, 1.0, delta=4 * circle.std_error)

    def test_square4d_parametrisation(self):
        def g(u, U):
            return U[:, 0, 0] ** 2 + u[:, 2] ** 2

        general = FlagMeasure.omega_integrate(Polytope.make_square4d(), 2, g, CONFIG)
        circle = FlagMeasure.omega_square4d(g, CONFIG.spawn(1))
        sigma = math.hypot(general.std_error, circle.std_error)
        self.assertAlmostEqual(general.mean, circle.mean, delta=4 * sigma)

    def test_ball_mass(self):
        for d, k in ((3, 1), (3, 2), (4, 2), (4, 0)):
            ball = Ball(d)
            estimate = FlagMeasure.omega_integrate(ball, k, None, MCConfig(sample_count=1000))
            self.assertAlmostEqual(estimate.mean, ball.intrinsic_volume(k), delta=1e-10)
            self.assertAlmostEqual(estimate.mean,
                                   math.comb(d, k) * Constants.ball_volume(d) / Constants.ball_volume(d - k),
                                   delta=1e-10)

    def test_zero_measure(self):
        estimate = FlagMeasure.omega_integrate(Polytope.make_square4d(), 3, None, CONFIG)
        self.assertEqual(estimate.mean, 0.0)
        self.assertIn('zero_measure', estimate.diagnostics)

    def test_invalid_index(self):
        self.assertRaises(ValueError, FlagMeasure.omega_integrate, Polytope.make_box(3), 3, None, CONFIG)

    def test_translation_invariance(self):
        def g(u, U):
            return u[:, 0] ** 2 + U[:, 1, 0] ** 2

        cube = Polytope.make_box(3)
        a = FlagMeasure.omega_integrate(cube, 1, g, CONFIG)
        b = FlagMeasure.omega_integrate(cube.translate([3, -1, 2]), 1, g, CONFIG)
        self.assertAlmostEqual(a.mean, b.mean, delta=1e-9)

    def test_rotation_covariance(self):
        rho = np.linalg.qr(np.array([[2.0, 1, 0], [0, 1, 3], [1, 0, 1]]))[0]

        def g(u, U):
            return u[:, 0] ** 2 + u[:, 1] * U[:, 2, 0] ** 2

        def g_rotated(u, U):
            return g(u @ rho.T, np.einsum('ij,njk->nik', rho, U))

        simplex = Polytope.make_simplex(3)
        a = FlagMeasure.omega_integrate(simplex.rotate(rho), 1, g, CONFIG)
        b = FlagMeasure.omega_integrate(simplex, 1, g_rotated, CONFIG.spawn(1))
        self.assertAlmostEqual(a.mean, b.mean, delta=4 * math.hypot(a.std_error, b.std_error))

    def test_marginal(self):
        cube = Polytope.make_box(3).rotate(np.linalg.qr(np.arange(1, 10).reshape(3, 3) + np.eye(3))[0])
        for k in (1, 2):
            check = FlagMeasure.area_measure_marginal_check(cube, k, lambda u: u[:, 0] ** 2, CONFIG, sigmas=4)
            self.assertTrue(check.passed, str(check))

    def test_area_measure_total(self):
        # total mass of the area measure is the intrinsic volume
        estimate = FlagMeasure.area_measure_integrate(Polytope.make_simplex(3), 1, None, CONFIG)
        self.assertAlmostEqual(estimate.mean, Polytope.make_simplex(3).intrinsic_volume(1),
                               delta=4 * estimate.std_error)

    def test_subspace_weight(self):
        U = np.eye(3)[None, :, :1]
        A = np.array([[1.0], [1.0], [0.0]]) / math.sqrt(2)
        self.assertAlmostEqual(float(FlagMeasure.subspace_weight(U, A)[0]), 0.5, delta=1e-12)
