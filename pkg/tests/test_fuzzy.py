import math

import numpy as np
import pytest

from demandcast.errors import ConfigError, DegenerateError, ShapeError
from demandcast.fuzzy import (FuzzyVector, MembershipPartition,
                              build_partition, defuzzify, defuzzify_vector,
                              fuzzify, fuzzify_vector, fuzzy_difference,
                              mf_labels, radbas, satlin)


def test_satlin_clamps_to_unit_interval():
    assert satlin(-1.0) == 0.0
    assert satlin(0.5) == 0.5
    assert satlin(2.0) == 1.0


def test_satlin_vectorized():
    out = satlin(np.array([-3.0, 0.25, 9.0]))
    assert np.array_equal(out, [0.0, 0.25, 1.0])


def test_radbas_known_values():
    assert radbas(0.0) == 1.0
    assert math.isclose(radbas(1.0), 0.36787944117144233, rel_tol=1e-15)


def test_build_partition_even_centers_and_half_spacing_widths():
    p = build_partition(0.0, 1.0, 4)
    assert np.allclose(p.centers, [0.0, 1 / 3, 2 / 3, 1.0])
    # gaussian width is half the spacing between adjacent centers
    assert np.allclose(p.widths, [1 / 6] * 4)


def test_build_partition_triangular_uses_full_spacing():
    p = build_partition(0.0, 1.0, 3, kind="triangular")
    assert np.allclose(p.widths, [0.5, 0.5, 0.5])


def test_build_partition_rejects_bad_counts_and_ranges():
    with pytest.raises(ConfigError):
        build_partition(0.0, 1.0, 1)
    with pytest.raises(ConfigError):
        build_partition(1.0, 0.0, 3)


def test_partition_validates_ordering_and_positivity():
    with pytest.raises(ConfigError):
        MembershipPartition("x", "gaussian", np.array([0.5, 0.2]),
                            np.array([0.1, 0.1]))
    with pytest.raises(ConfigError):
        MembershipPartition("x", "gaussian", np.array([0.2, 0.5]),
                            np.array([0.1, -0.1]))
    with pytest.raises(ConfigError):
        MembershipPartition("x", "unknown", np.array([0.2, 0.5]),
                            np.array([0.1, 0.1]))


def test_fuzzify_midpoint_of_four_gaussians():
    p = build_partition(0.0, 1.0, 4)
    d = fuzzify(0.5, p)
    expected = [math.exp(-4.5), math.exp(-0.5), math.exp(-0.5), math.exp(-4.5)]
    assert np.allclose(d, expected, rtol=1e-14)


def test_fuzzify_clamps_outside_range():
    p = build_partition(0.0, 1.0, 3)
    assert np.allclose(fuzzify(-5.0, p), fuzzify(0.0, p))
    assert np.allclose(fuzzify(17.0, p), fuzzify(1.0, p))


def test_fuzzify_peaks_at_centers():
    p = build_partition(0.0, 1.0, 5)
    for i, c in enumerate(p.centers):
        d = fuzzify(float(c), p)
        assert d[i] == pytest.approx(1.0)
        assert int(np.argmax(d)) == i


def test_defuzzify_center_of_gravity():
    p = MembershipPartition("y", "gaussian", np.array([0.0, 1.0]),
                            np.array([0.25, 0.25]))
    assert defuzzify(np.array([0.2, 0.8]), p) == pytest.approx(0.8)


def test_defuzzify_rejects_mismatch_and_all_zero():
    p = build_partition(0.0, 1.0, 3)
    with pytest.raises(ShapeError):
        defuzzify(np.array([0.1, 0.2]), p)
    with pytest.raises(DegenerateError):
        defuzzify(np.zeros(3), p)


def test_reconstruction_error_small_on_interior_grid():
    # fuzzify then defuzzify should come back close on [0.05, 0.95]
    p = build_partition(0.0, 1.0, 4)
    grid = np.linspace(0.05, 0.95, 19)
    worst = max(abs(defuzzify(fuzzify(x, p), p) - x) for x in grid)
    assert worst < 0.06


def test_fuzzy_difference_oracle_values():
    assert fuzzy_difference([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
    assert fuzzy_difference([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25)


def test_fuzzy_difference_identity_symmetry_and_range():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a = rng.uniform(0.0, 1.0, size=8)
        b = rng.uniform(0.0, 1.0, size=8)
        a[0] += 1e-9  # keep the denominator away from zero
        d = fuzzy_difference(a, b)
        assert 0.0 <= d <= 1.0
        assert fuzzy_difference(a, a) == 0.0
        assert fuzzy_difference(b, a) == d


def test_fuzzy_difference_error_paths():
    with pytest.raises(ShapeError):
        fuzzy_difference([0.1, 0.2], [0.1, 0.2, 0.3])
    with pytest.raises(DegenerateError):
        fuzzy_difference([0.0, 0.0], [0.0, 0.0])


def test_fuzzify_vector_concatenates_segments():
    parts = [build_partition(0.0, 1.0, 3, name="a"),
             build_partition(0.0, 1.0, 4, name="b")]
    fv = fuzzify_vector(np.array([0.0, 1.0]), parts)
    assert isinstance(fv, FuzzyVector)
    assert fv.degrees.size == 7
    assert np.allclose(fv.segment(0), fuzzify(0.0, parts[0]))
    assert np.allclose(fv.segment(1), fuzzify(1.0, parts[1]))


def test_defuzzify_vector_inverts_each_variable():
    # overlapping gaussians pull the center of gravity slightly inward,
    # so the round trip is close but not exact
    parts = [build_partition(0.0, 1.0, 4, name="a"),
             build_partition(0.0, 1.0, 4, name="b")]
    fv = fuzzify_vector(np.array([1 / 3, 2 / 3]), parts)
    out = defuzzify_vector(fv, parts)
    assert np.allclose(out, [1 / 3, 2 / 3], atol=0.01)


def test_mf_labels_level_names():
    assert mf_labels(4) == ("LOW", "MEDIUM-LOW", "MEDIUM-HIGH", "HIGH")
    assert mf_labels(3) == ("LOW", "MEDIUM", "HIGH")
    assert mf_labels(5) == ("LOW", "MEDIUM-LOW", "MEDIUM", "MEDIUM-HIGH",
                            "HIGH")
    assert mf_labels(6) == ("MF1", "MF2", "MF3", "MF4", "MF5", "MF6")
