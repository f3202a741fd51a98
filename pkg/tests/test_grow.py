import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctseg.grow import (
    SeedPoint,
    find_seed,
    grow_floodfill,
    grow_splitquad,
    median_seed_by_coordinates,
    median_seed_by_index_array,
)
from ctseg.raster import binarize, threshold_skull
from oracles import component_of, median_seed
from shapes import ellipse_ring, kidney_ring, noisy_binary

sparse = arrays(
    np.uint8,
    st.tuples(st.integers(1, 20), st.integers(1, 20)),
    elements=st.sampled_from([0, 0, 0, 0, 30]),
).filter(lambda a: a.any())


# ------------------------------------------------------------------ seeds


def test_seed_disk_center():
    rr, cc = np.ogrid[:64, :64]
    img = np.where((rr - 30) ** 2 + (cc - 21) ** 2 <= 100, 80, 0).astype(np.uint8)
    assert median_seed(img) == (30, 21)
    assert find_seed(img) == (30, 21)


def test_seed_single_pixel():
    img = np.zeros((10, 10), np.uint8)
    img[5, 7] = 1
    assert find_seed(img) == SeedPoint(5, 7)


def test_seed_lower_median_two_points():
    img = np.zeros((3, 3), np.uint8)
    img[0, 0] = img[2, 2] = 4
    assert find_seed(img) == (0, 0)


def test_seed_moves_to_nearest_nonzero():
    img = np.zeros((9, 9), np.uint8)
    img[:, 0] = 5
    img[:, 8] = 5
    # medians land at (4, 0); make the median column empty in the middle
    img2 = np.zeros((9, 9), np.uint8)
    img2[0, 0] = img2[8, 8] = img2[0, 8] = img2[8, 0] = img2[4, 1] = 5
    assert find_seed(img2) == median_seed(img2)
    assert img2[find_seed(img2)] != 0


def test_seed_all_zero_fails():
    with pytest.raises(ValueError):
        find_seed(np.zeros((4, 4), np.uint8))


@settings(max_examples=300)
@given(sparse)
def test_seed_paths_agree(img):
    assert median_seed_by_index_array(img) == median_seed_by_coordinates(img)
    s = find_seed(img)
    assert s == median_seed(img)
    assert img[s] != 0


# ------------------------------------------------------------------- growth


def test_floodfill_ring_interior():
    binary = np.zeros((32, 32), np.uint8)
    binary[4:28, 5:27] = 255
    binary[6:26, 7:25] = 0
    binary[1:3, 1:3] = 0  # outside
    region = grow_floodfill(binary, SeedPoint(15, 15))
    expected = np.zeros((32, 32), bool)
    expected[6:26, 7:25] = True
    assert np.array_equal(region.support, expected)
    assert np.array_equal(region.support, component_of(binary == 0, (15, 15)))
    assert region.area == 20 * 18


def test_floodfill_all_zero():
    region = grow_floodfill(np.zeros((7, 9), np.uint8), SeedPoint(3, 3))
    assert region.support.all()


def test_second_cavity_excluded():
    binary = np.zeros((32, 32), np.uint8)
    binary[2:14, 2:14] = 255
    binary[4:12, 4:12] = 0
    binary[18:30, 18:30] = 255
    binary[20:28, 20:28] = 0
    for grow in (grow_floodfill, grow_splitquad):
        sup = grow(binary, SeedPoint(8, 8)).support
        assert sup[4:12, 4:12].all()
        assert not sup[20:28, 20:28].any()
        assert np.array_equal(sup, component_of(binary == 0, (8, 8)))


@pytest.mark.parametrize("grow", [grow_floodfill, grow_splitquad])
def test_seed_on_boundary_rejected(grow):
    binary = np.full((4, 4), 255, np.uint8)
    with pytest.raises(ValueError):
        grow(binary, SeedPoint(1, 1))
    with pytest.raises(ValueError):
        grow(np.zeros((4, 4), np.uint8), SeedPoint(4, 0))


def test_diagonal_connection_followed():
    binary = np.full((5, 5), 255, np.uint8)
    for i in range(5):
        binary[i, i] = 0
    for grow in (grow_floodfill, grow_splitquad):
        assert grow(binary, SeedPoint(2, 2)).area == 5


def test_splitquad_convex_ellipse():
    binary, interior = ellipse_ring(64, 80, (30.5, 41.2), (20, 28))
    a = grow_floodfill(binary, SeedPoint(30, 41))
    b = grow_splitquad(binary, SeedPoint(30, 41))
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(b.support, interior)


@pytest.mark.parametrize("k", range(8))
def test_splitquad_concave(k):
    rng = np.random.default_rng(k)
    binary, interior, seed = kidney_ring(48, 48, rng)
    a = grow_floodfill(binary, SeedPoint(*seed))
    b = grow_splitquad(binary, SeedPoint(*seed))
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(b.support, component_of(interior, seed))


def test_splitquad_center_of_empty_image():
    b = grow_splitquad(np.zeros((16, 16), np.uint8), SeedPoint(8, 8))
    assert b.support.all()


def test_spiral_needs_many_sweeps():
    # corridor winding back toward the seed several times
    n = 41
    binary = np.full((n, n), 255, np.uint8)
    r0, r1, c0, c1 = 1, n - 2, 1, n - 2
    path = []
    while r0 <= r1 and c0 <= c1:
        path += [(r0, c) for c in range(c0, c1 + 1)]
        path += [(r, c1) for r in range(r0, r1 + 1)]
        path += [(r1, c) for c in range(c1, c0 - 1, -1)]
        path += [(r, c0) for r in range(r1, r0 + 1, -1)]
        path.append((r0 + 2, c0 + 1))  # step inward to the next lap
        r0, r1, c0, c1 = r0 + 2, r1 - 2, c0 + 2, c1 - 2
    for p in path:
        binary[p] = 0
    seed = SeedPoint(*path[-1])
    a = grow_floodfill(binary, seed)
    b = grow_splitquad(binary, seed)
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(b.support, binary == 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 40), st.integers(2, 40), st.floats(0.1, 0.7), st.integers(0, 2**32 - 1))
def test_splitquad_equals_floodfill(n, m, density, seed):
    rng = np.random.default_rng(seed)
    binary, s = noisy_binary(n, m, rng, density)
    a = grow_floodfill(binary, SeedPoint(*s))
    b = grow_splitquad(binary, SeedPoint(*s))
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(a.support, component_of(binary == 0, s))
    assert not (binary[a.support] == 255).any()


def test_phantom_reference_growth(small_phantom):
    ref = small_phantom.dataset[small_phantom.peak_index]
    seed = find_seed(threshold_skull(ref.pixels))
    assert small_phantom.truth[small_phantom.peak_index][seed]
    b = binarize(ref.pixels)
    a = grow_floodfill(b, seed)
    q = grow_splitquad(b, seed)
    assert np.array_equal(a.support, q.support)
    assert (a.support <= small_phantom.truth[small_phantom.peak_index]).all()


def test_deterministic():
    rng = np.random.default_rng(9)
    binary, s = noisy_binary(30, 30, rng, 0.4)
    a = grow_splitquad(binary, SeedPoint(*s)).support
    b = grow_splitquad(binary.copy(), SeedPoint(*s)).support
    assert np.array_equal(a, b)
