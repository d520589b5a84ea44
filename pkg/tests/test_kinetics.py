import math

import numpy as np
import pytest
from pydantic import ValidationError

from epidemic_fv.exceptions import ParameterError
from epidemic_fv.models.diffusion import diffusion_bounds, eval_diffusion, lipschitz_constant
from epidemic_fv.models.kinetics import incidence, reaction_rates, treatment
from epidemic_fv.schemas.params import DiffusionKind, DiffusionLaw, ModelParams, Variant


@pytest.mark.parametrize(
    "u, v, w, alpha, expected",
    [
        (1.0, 1.0, 1.0, 2.0, 2.0 / 3.0),
        (0.0, 0.0, 0.0, 5.0, 0.0),
        (-1.0, 2.0, 0.0, 3.0, 0.0),
        (2.0, -1.0, 1.0, 3.0, 0.0),
    ],
)
def test_incidence(u, v, w, alpha, expected):
    assert incidence(u, v, w, alpha) == pytest.approx(expected)


def test_incidence_vectorized():
    values = incidence(np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0]), 2.0)
    np.testing.assert_allclose(values, [2.0 / 3.0, 0.0])


@pytest.mark.parametrize("v, expected", [(0.5, 0.5), (0.0, 0.0), (-1.0, 0.0)])
def test_treatment(v, expected):
    assert treatment(v, 0.5) == expected


def test_reaction_rates_zero_state(sir_params):
    assert reaction_rates(sir_params, 0.0, 0.0, 0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)


def test_reaction_rates_sir():
    params = ModelParams(alpha_incidence=2.0, mu=0.01, gamma=1.0)
    f1, f2, f3 = reaction_rates(params, 1.0, 1.0, 1.0, 1.0, 1.0)
    assert f1 == pytest.approx(-2.0 / 3.0 - 0.01)
    assert f2 == pytest.approx(2.0 / 3.0 - 1.01)
    assert f3 == pytest.approx(1.0)


def test_reaction_rates_sars_without_infected(sars_params):
    f1, f2, f3 = reaction_rates(sars_params, 1.0, 0.0, 1.0, 1.0, 0.0)
    assert f2 == pytest.approx(0.0)
    assert f3 == pytest.approx(-sars_params.mu)


def test_sir_rejects_sars_terms():
    with pytest.raises(ValidationError):
        ModelParams(alpha_incidence=1.0, mu=0.1, gamma=0.1, A=1.0)


def test_negative_rate_rejected():
    with pytest.raises(ValidationError):
        ModelParams(alpha_incidence=-1.0, mu=0.1, gamma=0.1)


def test_example2_is_sars(sars_params):
    assert sars_params.variant == Variant.SARS
    assert sars_params.is_sars


@pytest.mark.parametrize("s, expected", [(2e4, 1e4), (1.0, 1.0), (1e-6, 1e-4)])
def test_truncated_linear(s, expected):
    law = DiffusionLaw.truncated_linear(M=1e4, eps=1e-4)
    assert eval_diffusion(law, s) == pytest.approx(expected)


def test_truncated_linear_slope():
    law = DiffusionLaw.truncated_linear(M=1e4, eps=1e-4, slope=0.1)
    assert eval_diffusion(law, 3.0) == pytest.approx(0.3)


def test_constant_and_linear():
    assert eval_diffusion(DiffusionLaw.constant(0.1), 123.0) == 0.1
    assert eval_diffusion(DiffusionLaw.linear(2.0), 3.0) == pytest.approx(6.0)


def test_linear_law_rejects_zero_mass():
    with pytest.raises(ParameterError):
        eval_diffusion(DiffusionLaw.linear(2.0), 0.0)


def test_inverse_square():
    law = DiffusionLaw.truncated_inverse_square(d=4.0, u_tilde=1.0, M=1e4, eps=1e-4)
    assert eval_diffusion(law, 3.0) == pytest.approx(1.0)
    assert eval_diffusion(law, 1.0) == 1e4
    assert eval_diffusion(law, 1e6) == pytest.approx(1e-4)


def test_eval_vectorized():
    law = DiffusionLaw.truncated_linear(M=10.0, eps=1.0)
    np.testing.assert_allclose(eval_diffusion(law, np.array([0.0, 5.0, 50.0])), [1.0, 5.0, 10.0])


def test_bounds():
    assert diffusion_bounds(DiffusionLaw.constant(0.3)) == (0.3, 0.3)
    assert diffusion_bounds(DiffusionLaw.truncated_linear(M=5.0, eps=0.5)) == (0.5, 5.0)
    assert diffusion_bounds(DiffusionLaw.linear(1.0)) == (0.0, math.inf)


def test_lipschitz_constants():
    assert lipschitz_constant(DiffusionLaw.constant(1.0)) == 0.0
    assert lipschitz_constant(DiffusionLaw.truncated_linear(M=5.0, eps=0.5, slope=0.1)) == 0.1
    law = DiffusionLaw.truncated_inverse_square(d=4.0, u_tilde=0.0, M=1.0, eps=1e-4)
    # |a'(s)| = 2d/|s|^3 peaks where d/s^2 = M, i.e. s = 2
    assert lipschitz_constant(law) == pytest.approx(1.0)


def test_law_missing_parameter():
    with pytest.raises(ValidationError):
        DiffusionLaw(kind=DiffusionKind.TRUNCATED_INVERSE_SQUARE, d=1.0, M=1.0, eps=0.1)


def test_law_eps_above_m():
    with pytest.raises(ValidationError):
        DiffusionLaw.truncated_linear(M=1.0, eps=2.0)


@pytest.mark.parametrize("seed", range(5))
def test_incidence_between_zero_and_alpha_min(seed):
    rng = np.random.default_rng(seed)
    u, v, w = rng.uniform(-2.0, 5.0, size=(3, 10_000))
    alpha = rng.uniform(0.0, 10.0)
    sigma = incidence(u, v, w, alpha)
    assert np.all(sigma >= 0.0)
    bound = alpha * np.minimum(np.maximum(u, 0.0), np.maximum(v, 0.0))
    assert np.all(sigma <= bound * (1.0 + 1e-14))


@pytest.mark.parametrize("seed", range(5))
def test_incidence_sees_only_positive_parts(seed):
    rng = np.random.default_rng(seed)
    u, v, w = rng.uniform(-2.0, 5.0, size=(3, 10_000))
    alpha = rng.uniform(0.1, 10.0)
    sigma = incidence(u, v, w, alpha)
    np.testing.assert_array_equal(incidence(np.maximum(u, 0.0), v, w, alpha), sigma)
    np.testing.assert_array_equal(incidence(u, np.maximum(v, 0.0), w, alpha), sigma)
    np.testing.assert_array_equal(incidence(u, v, np.maximum(w, 0.0), alpha), sigma)


@pytest.mark.parametrize("seed", range(5))
def test_incidence_lipschitz_away_from_origin(seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.1, 10.0)
    u1, u2, v, w = rng.uniform(0.0, 5.0, size=(4, 100_000))
    keep = (u1 + v + w >= 1.0) & (u2 + v + w >= 1.0)
    u1, u2, v, w = u1[keep], u2[keep], v[keep], w[keep]
    change = np.abs(incidence(u1, v, w, alpha) - incidence(u2, v, w, alpha))
    assert np.all(change <= alpha * np.abs(u1 - u2) * (1.0 + 1e-12) + 1e-14)

    # all three arguments moving at once: |d sigma| <= alpha (|du| + |dv| + |dw|)
    p, q = rng.uniform(0.0, 5.0, size=(2, 3, 100_000))
    keep = (p.sum(axis=0) >= 1.0) & (q.sum(axis=0) >= 1.0)
    p, q = p[:, keep], q[:, keep]
    change = np.abs(incidence(*p, alpha) - incidence(*q, alpha))
    assert np.all(change <= alpha * np.abs(p - q).sum(axis=0) * (1.0 + 1e-12) + 1e-14)


BOUNDED_LAWS = [
    DiffusionLaw.constant(0.3),
    DiffusionLaw.truncated_linear(M=1e4, eps=1e-4),
    DiffusionLaw.truncated_linear(M=5.0, eps=0.5, slope=0.1),
    DiffusionLaw.truncated_inverse_square(d=1.0, u_tilde=2.0, M=10.0, eps=1e-3),
    DiffusionLaw.truncated_inverse_square(d=4.0, u_tilde=-1.0, M=1e4, eps=1e-4),
]


@pytest.mark.parametrize("law", BOUNDED_LAWS, ids=lambda law: law.kind.value)
def test_bounded_laws_stay_in_range(law, rng):
    s = np.concatenate([rng.uniform(-50.0, 50.0, 500_000), rng.normal(law.u_tilde or 0.0, 1e-2, 500_000)])
    values = eval_diffusion(law, s)
    low, high = diffusion_bounds(law)
    assert law.is_truncated == (law.kind != DiffusionKind.CONSTANT)
    assert np.all(values >= low)
    assert np.all(values <= high)


@pytest.mark.parametrize("law", BOUNDED_LAWS, ids=lambda law: law.kind.value)
def test_bounded_laws_lipschitz(law, rng):
    s1 = rng.uniform(-20.0, 20.0, 200_000)
    s2 = s1 + rng.normal(0.0, 0.5, 200_000)
    change = np.abs(eval_diffusion(law, s1) - eval_diffusion(law, s2))
    L = lipschitz_constant(law)
    assert np.all(change <= L * np.abs(s1 - s2) * (1.0 + 1e-9) + 1e-12)


def test_linear_law_is_not_truncated():
    assert not DiffusionLaw.linear(1.0).is_truncated
    assert not DiffusionLaw.constant(1.0).is_truncated
