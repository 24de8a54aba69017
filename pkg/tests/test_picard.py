import math
import sys
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
from scipy.integrate import solve_ivp

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.hilfer import picard  # noqa: E402
from src.hilfer.certifier import estimate_constants  # noqa: E402
from src.hilfer.errors import DelayOutOfRange, MaxIterExceeded, ValidationError  # noqa: E402
from src.hilfer.fracops import Grid, Trajectory  # noqa: E402
from src.hilfer.solution_ops import Generator, kernel_table, solve_linear  # noqa: E402


def demo_problem(**changes) -> picard.Problem:
    options = dict(
        gen=Generator.from_array([[1.0, 0.0], [0.0, 2.0]]),
        alpha=0.5,
        beta=0.5,
        t0=0.0,
        a=1.0,
        xi0=(0.5, 0.25),
        nonlin=picard.NonlinSpec(picard.NonlinKind.SINE, scale=0.1),
        delay=picard.DelaySpec(picard.DelayKind.PROPORTIONAL, q=0.5),
        nonlocal_=picard.NonlocalSpec.build([1.0], [0.05], 2),
        ball_radius=50.0,
    )
    options.update(changes)
    return picard.Problem(**options)


def classical_problem(nonlin: picard.NonlinSpec, a0: float = 1.0, xi0=(1.0,), n: int = 1024) -> picard.Problem:
    return picard.Problem(
        gen=Generator.from_array([[a0]]),
        alpha=1.0,
        beta=1.0,
        t0=0.0,
        a=1.0,
        xi0=xi0,
        nonlin=nonlin,
        numerics=picard.Numerics(grid_n=n),
    )


class DelayEvaluationTests(unittest.TestCase):
    def setUp(self) -> None:
        self.grid = Grid((0.0, 0.5, 1.0))
        self.traj = Trajectory(self.grid, np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 4.0]]), gamma=1.0)

    def test_weighted_norm_is_max_row_norm(self) -> None:
        traj = Trajectory(self.grid, np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 1.0]]), gamma=1.0)
        self.assertEqual(5.0, picard.weighted_norm(traj))

    def test_identity_delay_returns_nodes(self) -> None:
        values = picard.eval_delay(self.traj, self.grid.array, picard.DelaySpec())
        np.testing.assert_array_equal(self.traj.weighted_values, values)

    def test_proportional_delay_lands_on_midpoint_node(self) -> None:
        delay = picard.DelaySpec(picard.DelayKind.PROPORTIONAL, q=0.5)
        np.testing.assert_allclose(picard.eval_delay(self.traj, 1.0, delay), [1.0, 2.0])

    def test_tabulated_delay_interpolates(self) -> None:
        delay = picard.DelaySpec(picard.DelayKind.TABULATED, table=((0.0, 0.0), (1.0, 0.75)))
        np.testing.assert_allclose(picard.eval_delay(self.traj, 1.0, delay), [2.0, 3.0])

    def test_delay_leaving_horizon_raises(self) -> None:
        delay = picard.DelaySpec(picard.DelayKind.TABULATED, table=((0.0, 0.0), (1.0, 2.0)))
        with self.assertRaises(DelayOutOfRange):
            picard.eval_delay(self.traj, 1.0, delay)

    def test_singular_weight_moves_t0_to_first_midpoint(self) -> None:
        grid = Grid.uniform(0.0, 1.0, 4)
        traj = Trajectory(grid, np.ones((5, 1)), gamma=0.5)
        delay = picard.DelaySpec(picard.DelayKind.LAG, lag=1.0)
        value = picard.eval_delay(traj, 0.5, delay)
        self.assertAlmostEqual(1.0 / math.sqrt(0.125), float(value[0]), delta=1e-12)

    def test_weight_ratio_at_start(self) -> None:
        self.assertEqual(1.0, picard.DelaySpec().weight_ratio_at_start(0.0, 0.75))
        proportional = picard.DelaySpec(picard.DelayKind.PROPORTIONAL, q=0.5)
        self.assertAlmostEqual(0.5 ** -0.25, proportional.weight_ratio_at_start(0.0, 0.75), delta=1e-15)
        self.assertEqual(0.0, picard.DelaySpec(picard.DelayKind.LAG, lag=0.1).weight_ratio_at_start(0.0, 0.75))
        lifted = picard.DelaySpec(picard.DelayKind.TABULATED, table=((0.0, 0.1), (1.0, 1.0)))
        self.assertEqual(0.0, lifted.weight_ratio_at_start(0.0, 0.75))
        through_origin = picard.DelaySpec(picard.DelayKind.TABULATED, table=((0.0, 0.0), (1.0, 0.25)))
        self.assertAlmostEqual(0.25 ** -0.25, through_origin.weight_ratio_at_start(0.0, 0.75), delta=1e-15)

    def test_linear_part_of_catalog_kinds(self) -> None:
        self.assertIsNone(picard.NonlinSpec(picard.NonlinKind.SINE, scale=0.1).linear_part(2))
        self.assertIsNone(picard.NonlinSpec().linear_part(2))
        polynomial = picard.NonlinSpec(picard.NonlinKind.POLYNOMIAL, coeffs=(0.2, 0.3, 1.0))
        np.testing.assert_array_equal(0.3 * np.eye(2), polynomial.linear_part(2))
        linear = picard.NonlinSpec(picard.NonlinKind.LINEAR, matrix=((0.1, 0.2), (0.0, 0.3)))
        np.testing.assert_array_equal([[0.1, 0.2], [0.0, 0.3]], linear.linear_part(2))


class ProblemValidationTests(unittest.TestCase):
    def test_anchor_outside_horizon(self) -> None:
        with self.assertRaises(ValidationError) as ctx:
            demo_problem(nonlocal_=picard.NonlocalSpec.build([1.5], [0.05], 2))
        self.assertEqual("nonlocal.anchors", ctx.exception.field)

    def test_delay_leaving_horizon(self) -> None:
        delay = picard.DelaySpec(picard.DelayKind.TABULATED, table=((0.0, 0.0), (1.0, 2.0)))
        with self.assertRaises(ValidationError) as ctx:
            demo_problem(delay=delay)
        self.assertEqual("delay", ctx.exception.field)

    def test_order_and_dimension_checks(self) -> None:
        with self.assertRaises(ValidationError) as ctx:
            demo_problem(alpha=0.0)
        self.assertEqual("orders.alpha", ctx.exception.field)
        with self.assertRaises(ValidationError) as ctx:
            demo_problem(xi0=(1.0,))
        self.assertEqual("initial.xi0", ctx.exception.field)

    def test_problems_hash_by_value(self) -> None:
        self.assertEqual(hash(demo_problem()), hash(demo_problem()))
        self.assertAlmostEqual(0.75, demo_problem().gamma, delta=1e-15)


class MildOperatorTests(unittest.TestCase):
    def test_without_nonlinear_terms_output_is_homogeneous(self) -> None:
        prob = demo_problem(nonlin=picard.NonlinSpec(), nonlocal_=picard.NonlocalSpec())
        grid = prob.grid(32)
        rng = np.random.default_rng(0)
        arbitrary = Trajectory(grid, rng.standard_normal((33, 2)), prob.gamma)
        result = picard.apply_F(arbitrary, prob)
        expected = picard.mild_operator(prob, grid).homogeneous()
        np.testing.assert_allclose(result.weighted_values, expected.weighted_values, atol=1e-15)

    def test_zero_input_gives_exponential_in_classical_case(self) -> None:
        prob = classical_problem(picard.NonlinSpec(picard.NonlinKind.SINE, scale=0.1), n=64)
        grid = prob.grid()
        result = picard.apply_F(Trajectory(grid, np.zeros((65, 1)), 1.0), prob)
        np.testing.assert_allclose(result.weighted_values[:, 0], np.exp(-grid.array), atol=1e-12)

    def test_nonlocal_term_vanishes_on_zero_input(self) -> None:
        prob = demo_problem(nonlin=picard.NonlinSpec(), nonlocal_=picard.NonlocalSpec.build([1.0], [1.0], 2))
        grid = prob.grid(16)
        result = picard.apply_F(Trajectory(grid, np.zeros((17, 2)), prob.gamma), prob)
        expected = picard.mild_operator(prob, grid).homogeneous()
        np.testing.assert_allclose(result.weighted_values, expected.weighted_values, atol=1e-15)

    def test_leaving_ball_warns(self) -> None:
        prob = demo_problem(ball_radius=0.01)
        grid = prob.grid(16)
        with mock.patch.object(picard.click, "echo") as mocked_echo:
            picard.apply_F(Trajectory(grid, np.ones((17, 2)), prob.gamma), prob)
        mocked_echo.assert_called_once()
        self.assertIn("leaves B_R", mocked_echo.call_args[0][0])


class SolveMildTests(unittest.TestCase):
    def test_single_sweep_without_nonlinear_terms(self) -> None:
        prob = classical_problem(picard.NonlinSpec(), n=32)
        traj, diagnostics = picard.solve_mild(prob)
        self.assertEqual(1, diagnostics.iterations)
        self.assertTrue(diagnostics.converged)
        self.assertEqual(0.0, diagnostics.residual)
        np.testing.assert_allclose(traj.weighted_values[:, 0], np.exp(-prob.grid().array), atol=1e-12)

    def test_linear_feedback_shifts_decay_rate(self) -> None:
        nonlin = picard.NonlinSpec(picard.NonlinKind.LINEAR, matrix=((0.25,),))
        prob = classical_problem(nonlin)
        traj, _ = picard.solve_mild(prob)
        np.testing.assert_allclose(traj.weighted_values[:, 0], np.exp(-0.75 * prob.grid().array), atol=1e-4)

    def test_linear_feedback_with_singular_weight_matches_shifted_generator(self) -> None:
        errors = []
        for n in (128, 512):
            prob = picard.Problem(
                gen=Generator.from_array([[1.0]]),
                alpha=0.5,
                beta=0.5,
                t0=0.0,
                a=1.0,
                xi0=(1.0,),
                nonlin=picard.NonlinSpec(picard.NonlinKind.LINEAR, matrix=((0.5,),)),
                ball_radius=10.0,
                numerics=picard.Numerics(grid_n=n),
            )
            traj, _ = picard.solve_mild(prob)
            reference = solve_linear(Generator.from_array([[0.5]]), 0.5, 0.5, (1.0,), None, prob.grid())
            errors.append(float(np.abs(traj.weighted_values - reference.weighted_values).max()))
        self.assertLess(errors[1], 2e-3)
        self.assertGreater(errors[0] / errors[1], 3.0)

    def test_operator_caches_stay_small(self) -> None:
        self.assertLessEqual(picard.mild_operator.cache_info().maxsize, 2)
        self.assertLessEqual(kernel_table.cache_info().maxsize, 4)

    def test_classical_sine_system_against_ode_solver(self) -> None:
        A = np.array([[1.0, 0.4], [-0.2, 1.5]])
        prob = picard.Problem(
            gen=Generator.from_array(A),
            alpha=1.0,
            beta=1.0,
            t0=0.0,
            a=1.0,
            xi0=(1.0, -1.0),
            nonlin=picard.NonlinSpec(picard.NonlinKind.SINE, scale=0.3),
            numerics=picard.Numerics(grid_n=1024),
        )
        traj, _ = picard.solve_mild(prob)
        t = prob.grid().array
        reference = solve_ivp(
            lambda s, y: -A @ y + 0.3 * np.sin(y),
            (0.0, 1.0),
            [1.0, -1.0],
            t_eval=t,
            rtol=1e-10,
            atol=1e-12,
        )
        self.assertLess(float(np.abs(traj.weighted_values - reference.y.T).max()), 1e-4)

    def test_demo_iteration_contracts_and_is_unique(self) -> None:
        prob = demo_problem()
        cert = estimate_constants(prob)
        traj, diagnostics = picard.solve_mild(prob)
        self.assertTrue(diagnostics.converged)
        self.assertEqual("homogeneous", diagnostics.initial)
        self.assertEqual(diagnostics.iterations + 1, len(diagnostics.norms))
        for ratio in diagnostics.ratios[1:]:
            self.assertLessEqual(ratio, cert.q + 0.05)
        self.assertTrue(all(norm <= prob.ball_radius + 1e-8 for norm in diagnostics.norms))

        residual = picard.weighted_norm(picard.apply_F(traj, prob).difference(traj))
        self.assertLess(residual, 1e-8)

        other, other_diagnostics = picard.solve_mild(prob, initial="zero")
        self.assertEqual("zero", other_diagnostics.initial)
        self.assertLess(picard.weighted_norm(traj.difference(other)), 5e-8)

    def test_iteration_cap_reports_last_residual(self) -> None:
        prob = demo_problem(numerics=picard.Numerics(grid_n=32))
        with self.assertRaises(MaxIterExceeded) as ctx:
            picard.solve_mild(prob, tol=1e-30, max_iter=1)
        self.assertGreater(ctx.exception.last_residual, 0.0)
        self.assertEqual(1, ctx.exception.diagnostics.iterations)
        self.assertFalse(ctx.exception.diagnostics.converged)

    def test_unknown_initial_iterate(self) -> None:
        with self.assertRaises(ValidationError):
            picard.solve_mild(demo_problem(numerics=picard.Numerics(grid_n=8)), initial="random")


if __name__ == "__main__":
    unittest.main()
