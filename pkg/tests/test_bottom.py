"""Per-mark quadratic form: weights, bilinearity, hypothesis checks."""

import numpy as np
import pytest

import lentparticle as lp
from lentparticle.bottom import gamma_weight, gamma_weights
from lentparticle.errors import SpecViolationError


def test_weight_hand_values():
    spec = lp.unit_ratio_spec(1)
    # xi = x^2, psi/k = 1: gamma[f](u) = u^2 f'(u)^2
    assert lp.gamma_of(spec, [1.0], [1.0], [0.5]) == pytest.approx(0.25)
    assert lp.gamma_of(spec, [0.0], [1.0], [0.5]) == 0.0


def test_weight_with_psi_half():
    # psi = k/2 halves the weight: f'(u) = 3 at u = 2 gives 4 * 9 * 0.5 = 18
    spec = lp.LevyMeasureSpec(
        dim=1,
        density_k=lambda u: 1.0,
        domain_O=lambda u: u[0] != 0.0,
        psi=lambda u: 0.5,
        xi=lambda u: np.array([[u[0] ** 2]]),
        total_mass=np.inf,
    )
    assert lp.gamma_of(spec, [3.0], [3.0], [2.0]) == pytest.approx(18.0)


def test_weight_zero_off_domain():
    spec = lp.compound_poisson_uniform(rate=1.0)  # O = (-1, 1) minus 0
    assert np.all(gamma_weight(spec, [2.0]) == 0.0)
    assert np.all(gamma_weight(spec, [0.5]) != 0.0)


def test_broken_domination_raises():
    spec = lp.LevyMeasureSpec(
        dim=1,
        density_k=lambda u: 0.0,
        domain_O=lambda u: True,
        psi=lambda u: 1.0,
        xi=lambda u: np.eye(1),
        total_mass=1.0,
    )
    with pytest.raises(SpecViolationError):
        gamma_weight(spec, [0.3])


def test_bilinearity_and_symmetry():
    spec = lp.unit_ratio_spec(3, xi=lambda u: np.diag(np.asarray(u) ** 2) + 0.1 * np.eye(3))
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b, c = rng.normal(size=(3, 3))
        u = rng.uniform(0.2, 1.0, 3)
        s, t = rng.normal(size=2)
        assert lp.gamma_of(spec, a, b, u) == pytest.approx(lp.gamma_of(spec, b, a, u))
        left = lp.gamma_of(spec, s * a + t * b, c, u)
        right = s * lp.gamma_of(spec, a, c, u) + t * lp.gamma_of(spec, b, c, u)
        assert left == pytest.approx(right, rel=1e-12, abs=1e-12)
        assert lp.gamma_of(spec, a, a, u) >= 0.0


def test_mark_level_chain_rule():
    # gradient of Phi(f) is Phi'(f) grad f, so gamma scales by Phi'(f)^2
    spec = lp.unit_ratio_spec(2)
    u = np.array([0.4, -0.7])
    grad_f = np.array([1.3, 0.2])
    f_val = 0.9
    dphi = 2.0 * f_val  # Phi(x) = x^2
    scaled = lp.gamma_of(spec, dphi * grad_f, dphi * grad_f, u)
    assert scaled == pytest.approx(dphi**2 * lp.gamma_of(spec, grad_f, grad_f, u))


def test_gamma_weights_batch_matches_single():
    spec = lp.truncated_power(beta=0.5, cut=0.05)
    marks = np.array([[0.3], [-0.6], [2.0]])
    batch = gamma_weights(spec, marks)
    for i, u in enumerate(marks):
        assert np.array_equal(batch[i], gamma_weight(spec, u))


def test_validate_spec_passes_degenerate_psi():
    spec = lp.LevyMeasureSpec(
        dim=1,
        density_k=lambda u: 1.0,
        domain_O=lambda u: 0.0 < abs(u[0]) < 1.0,
        psi=lambda u: 0.0,
        xi=lambda u: np.array([[u[0] ** 2]]),
        total_mass=2.0,
    )
    report = lp.validate_spec(spec, [np.array([0.5]), np.array([-0.3]), np.array([2.0])])
    assert report.passed
    assert report.first_failure is None


def test_validate_spec_flags_domination_failure():
    spec = lp.LevyMeasureSpec(
        dim=1,
        density_k=lambda u: 1.0,
        domain_O=lambda u: 0.0 < abs(u[0]) < 1.0,
        psi=lambda u: 2.0,  # exceeds k
        xi=lambda u: np.array([[u[0] ** 2]]),
        total_mass=2.0,
    )
    report = lp.validate_spec(spec, [np.array([0.5])])
    assert not report.passed
    assert report.first_failure.check == "domination"


def test_validate_spec_isotropic_form_off_axes():
    # xi = |x|^2 I gives gamma[f] = (psi/k) |x|^2 |grad f|^2; positive definite off the axes
    spec = lp.LevyMeasureSpec(
        dim=2,
        density_k=lambda u: 1.0,
        domain_O=lambda u: 0.0 < np.linalg.norm(u) < 1.0,
        psi=lambda u: 1.0 if 0.0 < np.linalg.norm(u) < 1.0 else 0.0,
        xi=lambda u: float(np.dot(u, u)) * np.eye(2),
        total_mass=np.inf,
    )
    probes = [np.array([0.3, 0.4]), np.array([-0.2, 0.25]), np.array([3.0, 3.0])]
    report = lp.validate_spec(spec, probes)
    assert report.passed
    pd_checks = [c for c in report.checks if c.check == "xi-positive-definite"]
    assert len(pd_checks) == 2 and all(c.passed for c in pd_checks)


def test_validate_spec_csv_and_text(tmp_path):
    spec = lp.compound_poisson_uniform(rate=1.0)
    report = lp.validate_spec(spec, [np.array([0.5]), np.array([3.0])])
    assert "PASS" in report.to_text()
    out = tmp_path / "diag.csv"
    report.write_csv(str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "probe,check,pass,detail"
    assert len(lines) > 2
