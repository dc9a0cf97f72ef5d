import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randpack.errors import DomainError, UndefinedSpacingError
from randpack.pointfield import (BoxSpec, PointConfiguration, ball_volume, min_spacing,
                                 packing_density_clipped_mc, packing_density_torus,
                                 read_points, sample_poisson, torus_distance, write_points)

TORUS_1 = BoxSpec(1, 1.0)
TORUS_2 = BoxSpec(2, 1.0)
SQUARE = [(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5)]


@pytest.mark.parametrize("n,r,expected", [(1, 1, 2.0), (2, 1, math.pi), (2, 0.5, math.pi / 4),
                                          (3, 1, 4 * math.pi / 3), (4, 1, math.pi ** 2 / 2)])
def test_ball_volume(n, r, expected):
    assert ball_volume(n, r) == pytest.approx(expected, rel=1e-15)


def test_ball_volume_matches_gamma_formula():
    for n in range(1, 40):
        ref = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        assert ball_volume(n, 1.0) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 12])
@pytest.mark.parametrize("r", [0.5, 2.0])
def test_ball_volume_scaling(n, r):
    assert ball_volume(n, r) / ball_volume(n, 1.0) == pytest.approx(r ** n, rel=1e-12)


@pytest.mark.parametrize("n,r", [(0, 1.0), (2, -0.1)])
def test_ball_volume_domain(n, r):
    with pytest.raises(DomainError):
        ball_volume(n, r)


def test_torus_distance_examples():
    assert torus_distance((0.3,), (0.3,), TORUS_1) == 0.0
    assert torus_distance((-0.9,), (0.9,), TORUS_1) == pytest.approx(0.2)
    assert torus_distance((0, 0), (1, 1), TORUS_2) == pytest.approx(math.sqrt(2))


def test_torus_distance_dimension_mismatch():
    with pytest.raises(DomainError):
        torus_distance((0, 0), (1,), TORUS_2)


coords = st.floats(-3.0, 2.999, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.just(n), *[st.lists(coords, min_size=n, max_size=n) for _ in range(3)])))
def test_torus_metric_properties(args):
    n, p, q, r = args
    box = BoxSpec(n, 3.0)
    dpq = torus_distance(p, q, box)
    assert dpq == pytest.approx(torus_distance(q, p, box))
    assert dpq <= math.dist(p, q) + 1e-12
    assert dpq <= 3.0 * math.sqrt(n) + 1e-12
    assert dpq <= torus_distance(p, r, box) + torus_distance(r, q, box) + 1e-12


def test_canonicalization_wraps_into_box():
    cfg = PointConfiguration(TORUS_1, [[0.0], [0.5], [1.7]])
    assert cfg.points[2, 0] == pytest.approx(-0.3)
    assert np.all(cfg.points >= -1.0) and np.all(cfg.points < 1.0)
    edge = PointConfiguration(TORUS_1, [[1.0], [-1.0], [-1e-18]])
    assert np.all(edge.points < 1.0) and np.all(edge.points >= -1.0)


def test_configuration_is_immutable():
    cfg = PointConfiguration(TORUS_2, SQUARE)
    with pytest.raises(ValueError):
        cfg.points[0, 0] = 3.0
    with pytest.raises(AttributeError):
        cfg.box = TORUS_1


def test_min_spacing_examples():
    assert min_spacing(PointConfiguration(TORUS_1, [[0.0], [0.5], [1.7]])) == pytest.approx(0.3)
    two = PointConfiguration(TORUS_2, [(0.1, 0.2), (0.4, -0.2)])
    assert min_spacing(two) == pytest.approx(0.5)
    assert min_spacing(PointConfiguration(TORUS_2, SQUARE)) == pytest.approx(1.0)


@pytest.mark.parametrize("pts", [[], [(0.0, 0.0)]])
def test_min_spacing_undefined(pts):
    with pytest.raises(UndefinedSpacingError):
        min_spacing(PointConfiguration(TORUS_2, pts))


def test_min_spacing_large_configuration_uses_tree_consistently():
    box = BoxSpec(2, 30.0)
    cfg = sample_poisson(box, 1.0, seed=11)
    assert len(cfg) > 2048
    # brute force over wrapped differences
    pts = cfg.points
    best = math.inf
    for ax_chunk in np.array_split(np.arange(len(pts)), 8):
        diff = np.abs(pts[ax_chunk, None, :] - pts[None, :, :])
        diff = np.minimum(diff, box.side - diff)
        dd = np.sqrt((diff ** 2).sum(-1))
        dd[np.arange(len(ax_chunk)), ax_chunk] = np.inf
        best = min(best, dd.min())
    assert min_spacing(cfg) == pytest.approx(best, rel=1e-12)


def test_packing_density_torus_examples():
    two = PointConfiguration(TORUS_2, [(0, 0), (1, 0)])
    assert packing_density_torus(two) == pytest.approx(math.pi / 8)
    assert packing_density_torus(PointConfiguration(TORUS_1, [[-0.5], [0.5]])) == pytest.approx(1.0)
    assert packing_density_torus(PointConfiguration(TORUS_2, SQUARE)) == pytest.approx(math.pi / 4)


def test_packing_density_identity():
    box = BoxSpec(3, 2.0)
    cfg = sample_poisson(box, 1.0, seed=3)
    expected = len(cfg) * ball_volume(3, min_spacing(cfg) / 2) / box.volume
    assert packing_density_torus(cfg) == expected


def _clipped_area_oracle(points, r, half_side, m=2000):
    # midpoint rule on an m x m grid of the box
    h = 2 * half_side / m
    g = -half_side + h * (np.arange(m) + 0.5)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    inside = np.zeros_like(xx, dtype=bool)
    for px, py in points:
        inside |= (xx - px) ** 2 + (yy - py) ** 2 <= r * r
    return inside.mean()


def test_clipped_density_converges_to_quadrature_value():
    box = BoxSpec(2, 1.0, "clipped")
    cfg = PointConfiguration(box, [(0, 0), (1, 0)])
    oracle = _clipped_area_oracle(cfg.points, 0.5, 1.0)
    assert oracle == pytest.approx(3 * math.pi / 32, abs=2e-4)
    est = packing_density_clipped_mc(cfg, 200_000, seed=5)
    assert abs(est.value - 3 * math.pi / 32) <= 3 * est.stderr


def test_clipped_density_matches_torus_when_interior():
    pts = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.4, 0.45)]
    clipped = PointConfiguration(BoxSpec(2, 1.5, "clipped"), pts)
    torus = PointConfiguration(BoxSpec(2, 1.5), pts)
    est = packing_density_clipped_mc(clipped, 100_000, seed=2)
    assert abs(est.value - packing_density_torus(torus)) <= 3 * est.stderr


def test_clipped_density_deterministic():
    cfg = PointConfiguration(BoxSpec(2, 1.0, "clipped"), [(0, 0), (0.7, 0.1)])
    assert packing_density_clipped_mc(cfg, 5000, 9) == packing_density_clipped_mc(cfg, 5000, 9)


def test_convention_guards():
    with pytest.raises(DomainError):
        packing_density_torus(PointConfiguration(BoxSpec(2, 1.0, "clipped"), SQUARE))
    with pytest.raises(DomainError):
        packing_density_clipped_mc(PointConfiguration(TORUS_2, SQUARE), 10, 0)


def test_sample_poisson_empty_and_deterministic():
    box = BoxSpec(2, 5.0)
    assert len(sample_poisson(box, 0.0, 1)) == 0
    assert sample_poisson(box, 1.0, 42) == sample_poisson(box, 1.0, 42)
    assert sample_poisson(box, 1.0, 42) != sample_poisson(box, 1.0, 43)
    with pytest.raises(DomainError):
        sample_poisson(box, -1.0, 0)


def test_sample_poisson_mean_count():
    box = BoxSpec(2, 5.0)
    counts = np.array([len(sample_poisson(box, 1.0, s)) for s in range(2000)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - 100.0) <= 3 * se


def test_sample_poisson_disjoint_counts_uncorrelated():
    box = BoxSpec(2, 2.0)
    left = np.empty(10_000)
    right = np.empty(10_000)
    for s in range(10_000):
        pts = sample_poisson(box, 1.0, s).points
        left[s] = np.count_nonzero(pts[:, 0] < 0)
        right[s] = np.count_nonzero(pts[:, 0] >= 0)
    rho = np.corrcoef(left, right)[0, 1]
    assert abs(rho) < 0.05


def test_point_file_round_trip(tmp_path):
    box = BoxSpec(3, 2.5)
    cfg = sample_poisson(box, 1.0, seed=8)
    path = tmp_path / "pts.txt"
    write_points(cfg, path)
    text = path.read_text()
    assert text.splitlines()[0] == "# dim=3 half_side=2.5 convention=torus"
    back = read_points(path)
    assert back == cfg
    assert np.array_equal(back.points, cfg.points)


def test_point_file_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# dim=2 half_side=1 convention=torus\n0.1 0.2 0.3\n")
    with pytest.raises(DomainError):
        read_points(path)
