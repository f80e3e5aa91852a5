import math
import unittest
import numpy as np
from flagmixvol import (MixedVolume, MixedVolumeRequest, Mode, DivergenceScan, PreconditionError, PhiTable,
                        Polytope, Ball, Grassmann, MCConfig, Oracle)
from flagmixvol.MixedVolume import angle

ROTATION = Grassmann.sample_rotation(3, np.random.default_rng(321))
TABLE_31 = PhiTable.build(3, 1, exact=True)
TABLE_32 = PhiTable.build(3, 2, exact=True)
TABLE_42 = PhiTable.build(4, 2, exact=True)


class AngleTests(unittest.TestCase):
    def test_endpoints(self):
        u = np.array([[1.0, 0, 0], [1.0, 0, 0], [1.0, 0, 0]])
        v = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0]])
        theta, sin = angle(u, v)
        np.testing.assert_allclose(theta, [0, math.pi, math.pi / 2], atol=1e-15)
        np.testing.assert_allclose(sin, [0, 0, 1], atol=1e-15)


class MixedVolumeRequestTests(unittest.TestCase):
    def test_invalid(self):
        cube = Polytope.make_box(3)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, Polytope.make_box(4), 1)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, cube, 0)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, cube, 3)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, cube, 1, eps=0.0)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, cube, 1, mode=Mode.FLAG_IR1)
        self.assertRaises(PreconditionError, MixedVolumeRequest, cube, Ball(3), 1, mode=Mode.DIRECT_IR)

    def test_to_dict(self):
        cube = Polytope.make_box(3)
        data = MixedVolumeRequest(cube, cube, 2, eps=0.1, mode=Mode.FLAG_IR1).to_dict()
        self.assertEqual(data['mode'], 'flag_IR1')
        self.assertEqual(data['k'], 2)
        self.assertEqual(data['eps'], 0.1)


class PreconditionTests(unittest.TestCase):
    def test_square4d_refused(self):
        square = Polytope.make_square4d()
        with self.assertRaises(PreconditionError) as cm:
            MixedVolume.v_kl_flag(square, square, 2, TABLE_42, MCConfig(sample_count=100))
        self.assertEqual(cm.exception.face_pair, (0, 0))

    def test_conditions(self):
        cube = Polytope.make_box(3)
        self.assertEqual(MixedVolume.preconditions(cube, Ball(3), 2), 'smooth body')
        self.assertEqual(MixedVolume.preconditions(cube, cube, 1, assume_rotation=True), 'random rotation')
        self.assertEqual(MixedVolume.preconditions(cube.rotate(ROTATION), cube, 1), 'general relative position')

    def test_table_mismatch(self):
        cube = Polytope.make_box(3)
        self.assertRaises(ValueError, MixedVolume.v_kl_eps, cube, cube, 1, 0.1, TABLE_32, MCConfig(sample_count=10))
        self.assertRaises(ValueError, MixedVolume.v_kl_eps, cube, cube, 2, math.pi, TABLE_32,
                          MCConfig(sample_count=10))


class MixedVolumeTests(unittest.TestCase):
    def test_cube_ball(self):
        cube = Polytope.make_box(3).rotate(ROTATION)
        estimate = MixedVolume.v_kl_flag(cube, Ball(3), 2, TABLE_32, MCConfig(sample_count=200_000, seed=2))
        self.assertTrue(estimate.agrees(6.0, sigmas=4, rel=0.05), str(estimate.to_dict()))
        self.assertEqual(estimate.diagnostics['precondition'], 'smooth body')
        moment = estimate.diagnostics['sin_moment']
        self.assertAlmostEqual(moment['value'], 12.0, delta=4 * moment['std_error'] + 1e-9)

    def test_plain_convention(self):
        cube = Polytope.make_box(3).rotate(ROTATION)
        config = MCConfig(sample_count=100_000, seed=4)
        plain = MixedVolume.mixed_volume(cube, Ball(3), 2, TABLE_32, config)
        self.assertTrue(plain.agrees(2.0, sigmas=4, rel=0.05))

        doubled = MixedVolume.mixed_volume(cube, Ball(3, radius=2), 2, TABLE_32, config)
        self.assertAlmostEqual(doubled.mean, 2 * plain.mean, delta=1e-9 * abs(plain.mean))

        moved = MixedVolume.mixed_volume(cube.translate([5, -3, 1]), Ball(3, center=[1, 1, 1]), 2, TABLE_32, config)
        self.assertAlmostEqual(moved.mean, plain.mean, delta=1e-9 * abs(plain.mean))

    def test_direct(self):
        cube = Polytope.make_box(3)
        rotated = cube.rotate(ROTATION)
        expected = Oracle.zonotope_mixed(ROTATION.T, np.eye(3), 1)
        estimate = MixedVolume.v_kl_direct(rotated, cube, 1, MCConfig(sample_count=200_000, seed=6))
        self.assertTrue(estimate.agrees(expected, sigmas=4, rel=0.05), f'{estimate.mean} vs {expected}')
        self.assertRaises(ValueError, MixedVolume.v_kl_direct, cube, Ball(3), 1, MCConfig(sample_count=10))

    def test_cube_ball_4d(self):
        cube = Polytope.make_box(4).rotate(Grassmann.sample_rotation(4, np.random.default_rng(322)))
        estimate = MixedVolume.v_kl_flag(cube, Ball(4), 2, TABLE_42, MCConfig(sample_count=200_000, seed=3))
        self.assertTrue(estimate.agrees(6 * math.pi, sigmas=4, rel=0.05), str(estimate.to_dict()))

    def test_homogeneity(self):
        cube = Polytope.make_box(3).rotate(ROTATION)
        config = MCConfig(sample_count=100_000, seed=10)
        base = MixedVolume.v_kl_flag(cube, Ball(3), 2, TABLE_32, config)
        doubled = MixedVolume.v_kl_flag(cube.scale(2), Ball(3), 2, TABLE_32, config)
        self.assertTrue(doubled.agrees(4 * base.mean, sigmas=4, expected_error=4 * base.std_error),
                        f'{doubled} vs {base}')

    def test_eps_monotone(self):
        # common random numbers across the cut-offs
        square = Polytope.make_square4d()
        config = MCConfig(sample_count=50_000, seed=11)
        values = [MixedVolume.v_kl_eps(square, square, 2, eps, TABLE_42, config) for eps in (0.5, 0.2, 0.1, 0.05)]
        for a, b in zip(values, values[1:]):
            self.assertGreaterEqual(b.mean, a.mean - 3 * math.hypot(a.std_error, b.std_error), f'{a} then {b}')

    def test_run_mode(self):
        cube = Polytope.make_box(3).rotate(ROTATION)
        request = MixedVolumeRequest(cube, Ball(3), 2, eps=0.1, mode=Mode.FLAG_IR1,
                                     config=MCConfig(sample_count=1000))
        self.assertEqual(MixedVolume.run(request, TABLE_32).diagnostics['mode'], 'flag_IR1')

    def test_extrapolate(self):
        cube = Polytope.make_box(3).rotate(ROTATION)
        estimate = MixedVolume.extrapolate(cube, Ball(3), 2, [0.4, 0.2, 0.1], TABLE_32,
                                           MCConfig(sample_count=20_000, seed=9))
        values = estimate.diagnostics['values']
        self.assertEqual(len(values), 3)
        self.assertAlmostEqual(estimate.mean, 4 / 3 * values[2] - 1 / 3 * values[1], delta=1e-9)
        self.assertRaises(ValueError, MixedVolume.extrapolate, cube, Ball(3), 2, [0.1, 0.2], TABLE_32,
                          MCConfig(sample_count=10))


class ZonotopePairTests(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(11)
        self.gens3 = rng.standard_normal((4, 3)), rng.standard_normal((3, 3))
        self.gens4 = rng.standard_normal((5, 4)), rng.standard_normal((4, 4))

    def test_flag_3d(self):
        gK, gL = self.gens3
        K, L = Polytope.make_zonotope(gK), Polytope.make_zonotope(gL)
        for k, table in ((1, TABLE_31), (2, TABLE_32)):
            expected = Oracle.zonotope_mixed(gK, gL, k)
            estimate = MixedVolume.v_kl_flag(K, L, k, table, MCConfig(sample_count=200_000, seed=12 + k))
            self.assertEqual(estimate.diagnostics['precondition'], 'general relative position')
            self.assertTrue(estimate.agrees(expected, sigmas=4, rel=0.05), f'k={k}: {estimate} vs {expected}')

    def test_flag_4d(self):
        gK, gL = self.gens4
        K, L = Polytope.make_zonotope(gK), Polytope.make_zonotope(gL)
        expected = Oracle.zonotope_mixed(gK, gL, 2)
        estimate = MixedVolume.v_kl_flag(K, L, 2, TABLE_42, MCConfig(sample_count=200_000, seed=15))
        self.assertTrue(estimate.agrees(expected, sigmas=4, rel=0.05), f'{estimate} vs {expected}')

    def test_direct_matches_flag(self):
        gK, gL = self.gens3
        K, L = Polytope.make_zonotope(gK), Polytope.make_zonotope(gL)
        config = MCConfig(sample_count=200_000, seed=16)
        flag = MixedVolume.v_kl_flag(K, L, 1, TABLE_31, config)
        direct = MixedVolume.v_kl_direct(K, L, 1, config.spawn(1))
        self.assertTrue(direct.agrees(flag.mean, sigmas=4, rel=0.05, expected_error=flag.std_error),
                        f'{direct} vs {flag}')

    def test_homogeneity(self):
        # V_{k,l}(sK, L) = s^k V_{k,l}(K, L)
        gK, gL = self.gens3
        K, L = Polytope.make_zonotope(gK), Polytope.make_zonotope(gL)
        config = MCConfig(sample_count=100_000, seed=17)
        base = MixedVolume.v_kl_flag(K, L, 1, TABLE_31, config)
        half = MixedVolume.v_kl_flag(K.scale(0.5), L, 1, TABLE_31, config)
        self.assertTrue(half.agrees(0.5 * base.mean, sigmas=4, expected_error=0.5 * base.std_error),
                        f'{half} vs {base}')


class DivergenceTests(unittest.TestCase):
    def test_scan_increasing(self):
        scan = MixedVolume.divergence_scan([0.5, 0.1, 0.01], MCConfig(sample_count=20_000, seed=5), TABLE_42)
        self.assertTrue(scan.increasing())
        self.assertEqual(len(scan.increments()), 2)
        self.assertTrue(all(inc > 0 for inc in scan.increments()))
        self.assertEqual(len(scan.to_dict()['positive']), 3)

    def test_invalid_grid(self):
        self.assertRaises(ValueError, DivergenceScan, [0.1, 0.5], [], [])
        self.assertRaises(ValueError, DivergenceScan, [4.0, 0.5], [], [])

    def test_region(self):
        estimate = MixedVolume.region_integral(MCConfig(sample_count=200_000, seed=7))
        self.assertAlmostEqual(MixedVolume.region_target(), 0.0017804, delta=1e-7)
        self.assertAlmostEqual(estimate.mean, MixedVolume.region_target(), delta=4 * estimate.std_error)

    def test_negative_part_bound(self):
        u = np.array([0, 0, 1.0, 0])
        v = np.array([0, 0, math.cos(1.0), math.sin(1.0)])
        check = MixedVolume.negative_part_bound(u, v, TABLE_42, MCConfig(sample_count=100_000, seed=8))
        self.assertTrue(check.passed, str(check))
        self.assertRaises(ValueError, MixedVolume.negative_part_bound, np.array([1.0, 0, 0, 0]), v, TABLE_42,
                          MCConfig(sample_count=10))
