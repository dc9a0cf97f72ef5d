import math

import numpy as np
import pytest
from scipy import integrate

from randpack.errors import DomainError
from randpack.lattice2d import (FLAT, MAX_DENSITY, MEAN, SQUARE_DENSITY, VARIANCE, cdf_delta,
                                curved_branch, delta_moments, in_domain, lattice_density, pdf_delta,
                                sample_modular, sample_modular_batch)


def cdf_closed_form(a):
    # antiderivative of the curved branch, worked by hand
    c = SQUARE_DENSITY
    if a <= c:
        return FLAT * a
    a = min(a, MAX_DENSITY)
    return FLAT * (a - 2 * (math.sqrt(a * a - c * c) - c * math.acos(c / a)))


def haar_pdf_oracle(a):
    # Haar measure dx dy / y^2 on F, normalized by pi/3, pushed through y = pi/(4a):
    # the density is (12/pi^2) times the length of the horizontal slice of F at height y
    y = math.pi / (4 * a)
    width = 1.0 if y >= 1 else 1.0 - 2.0 * math.sqrt(max(0.0, 1.0 - y * y))
    return 12 / math.pi ** 2 * max(width, 0.0)


def test_lattice_density_examples():
    assert lattice_density(0, 1) == pytest.approx(math.pi / 4)
    assert lattice_density(0.5, math.sqrt(3) / 2) == pytest.approx(0.9068997, abs=1e-7)
    assert lattice_density(0.3, 2) == pytest.approx(math.pi / 8)
    with pytest.raises(DomainError):
        lattice_density(0, 0.5)
    with pytest.raises(DomainError):
        lattice_density(0.6, 2)


@pytest.mark.parametrize("a,expected", [(0.5, 12 / math.pi ** 2), (0.95, 0.0), (MAX_DENSITY, 0.0)])
def test_pdf_examples(a, expected):
    assert pdf_delta(a) == pytest.approx(expected, abs=1e-15)


def test_pdf_at_09():
    assert pdf_delta(0.9) == pytest.approx(0.0284, abs=5e-5)
    h = 1e-5
    numeric = (cdf_delta(0.9 + h) - cdf_delta(0.9 - h)) / (2 * h)
    assert numeric == pytest.approx(pdf_delta(0.9), abs=1e-6)


@pytest.mark.parametrize("a", np.linspace(0.01, MAX_DENSITY - 1e-6, 37))
def test_pdf_matches_haar_pushforward(a):
    assert pdf_delta(a) == pytest.approx(haar_pdf_oracle(a), abs=1e-12)


def test_pdf_continuity_and_domain():
    assert abs(curved_branch(SQUARE_DENSITY) - pdf_delta(SQUARE_DENSITY)) <= 1e-12
    # square-root onset: the gap at distance h scales like sqrt(h)
    gaps = [FLAT - pdf_delta(SQUARE_DENSITY + h) for h in (1e-6, 1e-8, 1e-10)]
    assert gaps[0] / gaps[1] == pytest.approx(10, rel=1e-3)
    assert gaps[1] / gaps[2] == pytest.approx(10, rel=1e-2)
    with pytest.raises(DomainError):
        pdf_delta(-0.1)


def test_cdf_values():
    assert cdf_delta(SQUARE_DENSITY) == pytest.approx(3 / math.pi, abs=1e-12)
    assert cdf_delta(MAX_DENSITY) == pytest.approx(1.0, abs=1e-10)
    assert cdf_delta(5.0) == pytest.approx(1.0, abs=1e-10)
    for a in np.linspace(0, 1, 41):
        assert cdf_delta(a) == pytest.approx(cdf_closed_form(a), abs=1e-10)
    grid = np.linspace(0, 1, 200)
    vals = cdf_delta(grid)
    assert vals.shape == grid.shape and np.all(np.diff(vals) >= -1e-15)
    with pytest.raises(DomainError):
        cdf_delta(-1.0)


def test_closed_form_moments():
    assert MEAN == pytest.approx(0.4119796, abs=1e-7)
    # the stated 0.0569923 rounds pi/(8 sqrt 3) to 0.2267195; the exact value is 0.2267249...
    assert math.pi / (8 * math.sqrt(3)) == pytest.approx(0.2267249, abs=1e-7)
    assert VARIANCE == pytest.approx(0.0569977, abs=1e-7)
    assert abs(VARIANCE - 0.0569923) < 1e-5
    m = delta_moments()
    assert m["quad_mass"] == pytest.approx(1.0, abs=1e-9)
    assert m["quad_mean"] == pytest.approx(MEAN, abs=1e-8)
    assert m["quad_variance"] == pytest.approx(VARIANCE, abs=1e-8)
    assert m["max"] == MAX_DENSITY


def test_sample_modular_in_domain():
    s = sample_modular(3)
    assert in_domain(s.x, s.y) and s.delta == pytest.approx(math.pi / (4 * s.y))
    assert s == sample_modular(3)


def test_batch_invariants_and_determinism():
    batch = sample_modular_batch(20_000, seed=4, block=4096)
    assert len(batch.delta) == 20_000
    assert np.all(np.abs(batch.x) <= 0.5)
    assert np.all(batch.x ** 2 + batch.y ** 2 >= 1)
    assert np.all((batch.delta > 0) & (batch.delta <= MAX_DENSITY))
    again = sample_modular_batch(20_000, seed=4, block=4096)
    assert np.array_equal(batch.delta, again.delta) and batch.proposals == again.proposals
    assert len(sample_modular_batch(0, seed=1).delta) == 0


def _acceptance_area_oracle(m=4000):
    # midpoint rule over the proposal rectangle in (x, delta)
    hx = 1.0 / m
    hd = MAX_DENSITY / m
    x = -0.5 + hx * (np.arange(m) + 0.5)
    d = hd * (np.arange(m) + 0.5)
    xx, dd = np.meshgrid(x, d, indexing="ij")
    ok = xx ** 2 + (math.pi / (4 * dd)) ** 2 >= 1
    return ok.mean()


def test_acceptance_rate():
    oracle = _acceptance_area_oracle()
    assert oracle == pytest.approx(math.pi / math.sqrt(12), abs=1e-3)
    exact, _ = integrate.quad(lambda a: pdf_delta(a) * math.pi ** 2 / 12, 0, MAX_DENSITY, points=[SQUARE_DENSITY])
    assert exact / MAX_DENSITY == pytest.approx(math.pi / math.sqrt(12), abs=1e-9)
    batch = sample_modular_batch(300_000, seed=11)
    p = MAX_DENSITY
    rate = len(batch.delta) / batch.proposals
    se = math.sqrt(p * (1 - p) / batch.proposals)
    assert abs(rate - p) <= 3 * se
