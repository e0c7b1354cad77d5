import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openqsl.core import ket, maximally_mixed, projector, random_density
from openqsl.errors import ArccosDomainError, NotHermitian, TraceNotOne
from openqsl.metric import (
    distance_d,
    distance_e,
    distance_phi,
    fidelity_gm,
    normalize,
    safe_arccos,
    speed_d,
    speed_e,
    speed_from_normalized,
)

ZERO = projector(ket(0, 2))
ONE = projector(ket(1, 2))
PLUS = np.full((2, 2), 0.5, dtype=complex)


def test_distance_examples():
    assert distance_d(ZERO, ZERO) == 0.0
    assert distance_d(ZERO, ONE) == pytest.approx(math.pi / 2)
    # <P0, P+> = Tr(|0><0| |+><+|) = 1/2
    assert distance_d(ZERO, PLUS) == pytest.approx(math.pi / 3, abs=1e-15)
    # I/2 has purity 1/2, so <P, Q> = (1/2) / sqrt(1/2) = 1/sqrt 2
    assert distance_d(ZERO, maximally_mixed(2)) == pytest.approx(math.pi / 4, abs=1e-15)
    assert distance_e(ZERO, ONE) == pytest.approx(math.sqrt(2))
    assert distance_phi(ZERO, PLUS) == pytest.approx(math.sqrt(2) * math.acos(math.sqrt(0.5)))


def test_distance_d_small_separation_is_accurate():
    eps = 1e-9
    rho = np.array([[1 - eps, 0], [0, eps]], dtype=complex)
    sigma = np.array([[1 - 2 * eps, 0], [0, 2 * eps]], dtype=complex)
    # angle between (1-e, e) and (1-2e, 2e) is about e for small e
    assert distance_d(rho, sigma) == pytest.approx(eps, rel=1e-6)


def test_normalize_unit_norm():
    p = normalize(random_density(3, seed=2))
    assert np.vdot(p.matrix, p.matrix).real == pytest.approx(1.0)
    assert fidelity_gm(ZERO, ZERO) == pytest.approx(1.0)


def test_safe_arccos_window():
    assert safe_arccos(1 + 5e-11) == 0.0
    with pytest.raises(ArccosDomainError):
        safe_arccos(1 + 1e-9)


def test_speed_examples():
    # unitary sigma_z/2 rotation of |+>: rho_dot = -i[H, rho]
    h = np.diag([0.5, -0.5])
    rho_dot = -1j * (h @ PLUS - PLUS @ h)
    assert speed_e(rho_dot) == pytest.approx(math.sqrt(0.5))
    assert speed_d(PLUS, rho_dot) == pytest.approx(math.sqrt(0.5))
    assert speed_d(ZERO, np.zeros((2, 2))) == 0.0


def test_speed_rejects_bad_derivative():
    with pytest.raises(TraceNotOne):
        speed_d(ZERO, np.diag([0.1, 0.0]))
    with pytest.raises(NotHermitian):
        speed_e(np.array([[0, 1], [0, 0]], dtype=complex))


def _triples(dim, count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield tuple(random_density(dim, seed=rng) for _ in range(3))


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_metric_axioms_seeded(dim):
    for a, b, c in _triples(dim, 200, dim):
        ab, bc, ac = distance_d(a, b), distance_d(b, c), distance_d(a, c)
        assert ab == pytest.approx(distance_d(b, a), abs=1e-15)
        assert 0.0 <= ab <= math.pi / 2 + 1e-12
        assert ac <= ab + bc + 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([2, 3, 4]), st.floats(0.0, 1.0))
def test_triangle_with_mixtures(seed, dim, w):
    rng = np.random.default_rng(seed)
    a, b = random_density(dim, seed=rng), random_density(dim, seed=rng)
    mid = w * a.matrix + (1 - w) * b.matrix
    assert distance_d(a, b) <= distance_d(a, mid) + distance_d(mid, b) + 1e-10


def _random_derivative(dim, rng):
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (h + h.conj().T) / 2
    return h - np.trace(h) / dim * np.eye(dim)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_speed_finite_difference_first_order(dim):
    rng = np.random.default_rng(100 + dim)
    rho = random_density(dim, seed=rng).matrix
    rho = 0.8 * rho + 0.2 * np.eye(dim) / dim
    x = _random_derivative(dim, rng) * 0.1
    v = speed_d(rho, x)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        errs.append(abs(distance_d(rho, rho + h * x) / h - v))
    # error shrinks about linearly in h
    assert errs[1] < errs[0] and errs[2] < errs[1]
    assert 1.5 < errs[0] / errs[1] < 2.6
    assert 1.5 < errs[1] / errs[2] < 2.6


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_speed_matches_normalized_state_route(dim):
    rng = np.random.default_rng(dim)
    for _ in range(20):
        rho = random_density(dim, seed=rng).matrix
        x = _random_derivative(dim, rng)
        pur = np.vdot(rho, rho).real
        p_dot = x / math.sqrt(pur) - np.vdot(rho, x).real / pur**1.5 * rho
        assert speed_d(rho, x) == pytest.approx(speed_from_normalized(p_dot), rel=1e-10)
