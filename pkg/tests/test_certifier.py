import dataclasses
import math
import sys
import unittest
from pathlib import Path
from unittest import mock

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.hilfer import certifier  # noqa: E402
from src.hilfer.errors import BudgetTooSmall  # noqa: E402
from src.hilfer.picard import (  # noqa: E402
    DelayKind,
    DelaySpec,
    NonlinKind,
    NonlinSpec,
    NonlocalSpec,
    Numerics,
    Problem,
)
from src.hilfer.solution_ops import Generator  # noqa: E402


def make_problem(**changes) -> Problem:
    options = dict(
        gen=Generator.from_array([[1.0, 0.0], [0.0, 2.0]]),
        alpha=0.5,
        beta=0.5,
        t0=0.0,
        a=1.0,
        xi0=(0.5, 0.25),
        nonlin=NonlinSpec(NonlinKind.SINE, scale=0.1),
        delay=DelaySpec(DelayKind.PROPORTIONAL, q=0.5),
        nonlocal_=NonlocalSpec.build([1.0], [0.05], 2),
        ball_radius=50.0,
        numerics=Numerics(grid_n=128),
    )
    options.update(changes)
    return Problem(**options)


def make_certificate(**changes) -> certifier.Certificate:
    options = dict(
        zeta1=1.0,
        zeta2=0.0,
        zeta3=0.2,
        delta=0.4,
        lam=0.2,
        b=1.0,
        r=1.0,
        a=1.0,
        xi0_norm=0.2,
        q=0.6,
        q_proof=0.6,
        cond6_lhs=0.8,
        passes={},
        provenance={name: certifier.CLOSED_FORM for name in ("zeta1", "zeta2", "zeta3", "delta", "lambda", "b")},
        sampled={},
        sampling_budget=certifier.SamplingBudget(),
    )
    options.update(changes)
    return certifier.Certificate(**options)


class ClosedFormTests(unittest.TestCase):
    def test_linear_nonlinearity_uses_spectral_norm(self) -> None:
        prob = make_problem(nonlin=NonlinSpec(NonlinKind.LINEAR, matrix=((0.3, 0.0), (0.0, 0.1))))
        self.assertAlmostEqual(0.3, certifier.closed_form_delta(prob), delta=1e-14)

    def test_polynomial_slope_over_ball(self) -> None:
        prob = make_problem(
            gen=Generator.from_array([[1.0]]),
            xi0=(0.1,),
            nonlin=NonlinSpec(NonlinKind.POLYNOMIAL, coeffs=(0.0, 0.0, 0.0, 1.0)),
            nonlocal_=NonlocalSpec(),
            ball_radius=2.0,
        )
        self.assertAlmostEqual(12.0, certifier.closed_form_delta(prob), delta=1e-12)

    def test_tabulated_slope(self) -> None:
        table = ((-1.0, -2.0), (0.0, 0.0), (1.0, 1.0))
        prob = make_problem(nonlin=NonlinSpec(NonlinKind.TABULATED, table=table))
        self.assertEqual(2.0, certifier.closed_form_delta(prob))

    def test_delay_lower_slopes(self) -> None:
        self.assertEqual(1.0, certifier.closed_form_b(make_problem(delay=DelaySpec())))
        self.assertEqual(0.5, certifier.closed_form_b(make_problem()))
        self.assertEqual(0.0, certifier.closed_form_b(make_problem(delay=DelaySpec(DelayKind.LAG, lag=0.1))))
        table = ((0.0, 0.0), (0.5, 0.1), (1.0, 0.9))
        self.assertAlmostEqual(0.2, certifier.closed_form_b(make_problem(delay=DelaySpec(DelayKind.TABULATED, table=table))), delta=1e-15)

    def test_no_nonlocal_term(self) -> None:
        cert = certifier.estimate_constants(make_problem(nonlocal_=NonlocalSpec()))
        self.assertEqual(0.0, cert.lam)
        self.assertEqual(0.0, cert.zeta3)
        self.assertEqual(0.0, cert.sampled["lambda"])

    def test_classical_operator_bound_is_one(self) -> None:
        prob = make_problem(gen=Generator.from_array([[1.0]]), alpha=1.0, beta=1.0, xi0=(1.0,), nonlocal_=NonlocalSpec())
        self.assertAlmostEqual(1.0, certifier.operator_bound(prob, 4), delta=1e-12)


class EstimateConstantsTests(unittest.TestCase):
    def test_demo_certificate(self) -> None:
        cert = certifier.estimate_constants(make_problem())
        zeta1 = 1.0 / math.gamma(0.75)
        self.assertAlmostEqual(zeta1, cert.zeta1, delta=1e-12)
        self.assertAlmostEqual(0.05, cert.lam, delta=1e-15)
        self.assertEqual(0.0, cert.zeta2)
        self.assertAlmostEqual(2.5, cert.zeta3, delta=1e-12)
        self.assertAlmostEqual(zeta1 * 0.05 + zeta1 * 0.1 / 0.5, cert.q, delta=1e-10)
        self.assertAlmostEqual(cert.zeta1 * cert.lam + cert.zeta1 * cert.delta * cert.a / cert.b, cert.q, delta=1e-15)
        self.assertAlmostEqual(cert.zeta1 * cert.zeta3 + cert.zeta1 * cert.delta * cert.a / cert.b, cert.q_proof, delta=1e-15)
        self.assertLess(cert.cond6_lhs, cert.r)
        self.assertTrue(all(cert.passes.values()))
        self.assertEqual(certifier.EVALUATED, cert.provenance["zeta1"])

        report = certifier.check_conditions(cert)
        self.assertTrue(report.passed)
        self.assertFalse(report.advisory)
        self.assertAlmostEqual(cert.r - cert.cond6_lhs, report.margin, delta=1e-12)
        self.assertIsNotNone(report.r_candidate)
        self.assertEqual("PASS", report.to_document()["verdict"])

    def test_document_uses_lambda_key(self) -> None:
        document = make_certificate().to_document()
        self.assertIn("lambda", document)
        self.assertNotIn("lam", document)

    def test_sampled_estimates_grow_with_budget(self) -> None:
        prob = make_problem()
        small = certifier.SamplingBudget(lipschitz=200, delay=200)
        large = certifier.SamplingBudget(lipschitz=1000, delay=1000)
        self.assertLessEqual(certifier.sampled_delta(prob, small), certifier.sampled_delta(prob, large))
        self.assertLessEqual(certifier.sampled_lambda(prob, small), certifier.sampled_lambda(prob, large))

    def test_sampled_estimates_approach_closed_forms(self) -> None:
        budget = certifier.SamplingBudget(lipschitz=10000, delay=10000)
        for nonlin in (
            NonlinSpec(NonlinKind.SINE, scale=0.1),
            NonlinSpec(NonlinKind.LINEAR, matrix=((0.3, 0.1), (0.0, 0.2))),
        ):
            with self.subTest(kind=nonlin.kind.value):
                prob = make_problem(nonlin=nonlin)
                exact = certifier.closed_form_delta(prob)
                sampled = certifier.sampled_delta(prob, budget)
                self.assertLessEqual(sampled, exact * (1.0 + 1e-8))
                self.assertGreaterEqual(sampled, 0.98 * exact)
        prob = make_problem()
        self.assertAlmostEqual(certifier.closed_form_b(prob), certifier.sampled_b(prob, budget), delta=1e-12)
        self.assertAlmostEqual(certifier.closed_form_lambda(prob), certifier.sampled_lambda(prob, budget), delta=1e-12)

    def test_budget_below_minimum(self) -> None:
        with self.assertRaises(BudgetTooSmall):
            certifier.estimate_constants(make_problem(), certifier.SamplingBudget(lipschitz=50))


class CheckConditionsTests(unittest.TestCase):
    def test_passing_example(self) -> None:
        report = certifier.check_conditions(make_certificate())
        self.assertTrue(report.passed)
        self.assertAlmostEqual(0.6, report.q, delta=1e-12)
        self.assertAlmostEqual(0.8, report.cond6_lhs, delta=1e-12)
        self.assertAlmostEqual(0.2, report.margin, delta=1e-12)
        self.assertEqual(list(certifier.CONDITIONS), [item.name for item in report.conditions])
        self.assertAlmostEqual(0.4 / 0.6, report.r_candidate, delta=1e-12)

    def test_contraction_failure_names_q(self) -> None:
        report = certifier.check_conditions(make_certificate(lam=0.8))
        self.assertFalse(report.passed)
        self.assertAlmostEqual(1.2, report.q, delta=1e-12)
        failed = [item for item in report.conditions if not item.passed]
        self.assertEqual(["6"], [item.name for item in failed])
        self.assertIn("q=1.2", failed[0].message)

    def test_flat_delay_fails_condition_two(self) -> None:
        report = certifier.check_conditions(make_certificate(b=0.0))
        flags = {item.name: item.passed for item in report.conditions}
        self.assertFalse(flags["2"])
        self.assertFalse(report.passed)
        self.assertEqual(math.inf, report.q)
        self.assertIsNone(report.r_candidate)

    def test_zero_lipschitz_with_flat_delay_keeps_finite_q(self) -> None:
        self.assertEqual(0.0, certifier.ratio_term(1.0, 0.0, 1.0, 0.0))
        self.assertEqual(0.2, certifier.contraction_constant(1.0, 0.2, 0.0, 1.0, 0.0))

    def test_radius_override(self) -> None:
        report = certifier.check_conditions(make_certificate(), r=0.5)
        self.assertEqual(0.5, report.r)
        self.assertFalse(report.passed)

    def test_sampled_pass_is_advisory(self) -> None:
        provenance = dict(make_certificate().provenance, delta=certifier.SAMPLED)
        cert = dataclasses.replace(make_certificate(), provenance=provenance)
        with mock.patch.object(certifier.click, "echo") as mocked_echo:
            report = certifier.check_conditions(cert)
        self.assertTrue(report.passed)
        self.assertTrue(report.advisory)
        mocked_echo.assert_called_once()


if __name__ == "__main__":
    unittest.main()
