import math

import numpy as np
import pytest

from beamgrid.features import (
    BoundsViolation,
    GridSpec,
    IndexOutOfRange,
    LidarConfig,
    NormBounds,
    PcfSpec,
    build_sa_vector,
    build_vdf,
    grid_index,
    lcs_origin,
    sa_vector_width,
    simulate_lidar,
    voxelize_pcf,
)
from beamgrid.scene import NoMs, Scene, SceneConfig, Vehicle, generate_scene

PAPER_GRID = GridSpec(dims=(14, 6, 6), pitch=(2.0, 6.0, 1.0), origin=(0.0, 0.0, 0.0))
BOUNDS = NormBounds(w_max=3.0, l_max=12.0, h_max=4.0)


def make_scene(vehicles, grid=PAPER_GRID):
    return Scene(vehicles=vehicles, rsu_position=np.array([0.0, 18.0, 6.0]), grid=grid)


def vdf_oracle(scene, spec, bounds):
    """Naive double loop over (grids x vehicles), averaging straight from the
    row definition.  Exact summation so the comparison can be bitwise."""
    dims = spec.dims
    out = np.zeros(dims + (7,))
    for gx in range(dims[0]):
        for gy in range(dims[1]):
            for gz in range(dims[2]):
                members = []
                for v in scene.vehicles:
                    if grid_index(v.center, spec) == (gx, gy, gz):
                        members.append(v)
                if not members:
                    continue
                n = len(members)
                mean = [math.fsum(v.center[a] for v in members) / n for a in range(3)]
                local = [mean[a] - (spec.origin[a] + (gx, gy, gz)[a] * spec.pitch[a])
                         for a in range(3)]
                out[gx, gy, gz] = [
                    local[0] / spec.pitch[0],
                    local[1] / spec.pitch[1],
                    local[2] / spec.pitch[2],
                    (math.fsum(v.width for v in members) / n) / bounds.w_max,
                    (math.fsum(v.length for v in members) / n) / bounds.l_max,
                    (math.fsum(v.height for v in members) / n) / bounds.h_max,
                    (math.fsum(v.azimuth for v in members) / n) / (2 * math.pi),
                ]
    return out


class TestGridIndex:
    def test_interior_of_first_grid(self):
        assert grid_index((0.5, 3.0, 0.75), PAPER_GRID) == (0, 0, 0)

    def test_boundary_goes_to_higher_index(self):
        assert grid_index((2.0, 0.0, 0.0), PAPER_GRID) == (1, 0, 0)

    def test_maximum_face_is_outside(self):
        assert grid_index((28.0, 1.0, 1.0), PAPER_GRID) is None

    def test_negative_is_outside(self):
        assert grid_index((-0.1, 1.0, 1.0), PAPER_GRID) is None


class TestLcsOrigin:
    def test_first_cell(self):
        np.testing.assert_array_equal(lcs_origin((0, 0, 0), PAPER_GRID), np.zeros(3))

    def test_direct_product(self):
        np.testing.assert_array_equal(lcs_origin((1, 2, 3), PAPER_GRID),
                                      np.array([2.0, 12.0, 3.0]))

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            lcs_origin((14, 0, 0), PAPER_GRID)

    def test_local_coordinates_in_pitch_range(self):
        """Any in-coverage point minus its cell's origin lands in [0, pitch)."""
        rng = np.random.default_rng(8)
        pitch = np.asarray(PAPER_GRID.pitch)
        for _ in range(500):
            p = rng.uniform([0, 0, 0], PAPER_GRID.extent * 0.999999)
            g = grid_index(p, PAPER_GRID)
            assert g is not None
            local = p - lcs_origin(g, PAPER_GRID)
            assert np.all(local >= 0.0) and np.all(local < pitch)


class TestBuildVdf:
    def test_hand_derived_single_vehicle_row(self):
        v = Vehicle(center=[1.0, 3.0, 0.9], length=4.2, width=1.8, height=1.8,
                    azimuth=math.pi / 2)
        vdf = build_vdf(make_scene([v]), PAPER_GRID, BOUNDS)
        # Row formula evaluated by hand: local mean over pitch, dims over
        # bounds, azimuth over 2*pi.
        expected = np.array([1.0 / 2.0, 3.0 / 6.0, 0.9 / 1.0,
                             1.8 / 3.0, 4.2 / 12.0, 1.8 / 4.0, 0.25])
        np.testing.assert_array_equal(vdf.data[0, 0, 0], expected)
        np.testing.assert_allclose(vdf.data[0, 0, 0],
                                   [0.5, 0.5, 0.9, 0.6, 0.35, 0.45, 0.25], atol=1e-12)
        mask = np.ones(PAPER_GRID.dims, dtype=bool)
        mask[0, 0, 0] = False
        assert np.all(vdf.data[mask] == 0.0)
        assert vdf.counts[0, 0, 0] == 1 and vdf.counts.sum() == 1

    def test_empty_scene_all_zero(self):
        vdf = build_vdf(make_scene([]), PAPER_GRID, BOUNDS)
        assert vdf.data.shape == (14, 6, 6, 7)
        assert np.all(vdf.data == 0.0)

    def test_two_vehicle_averaging(self):
        dims = dict(length=4.2, width=1.8, height=1.8, azimuth=math.pi / 2)
        a = Vehicle(center=[0.5, 1.0, 0.9], **dims)
        b = Vehicle(center=[1.5, 5.0, 0.9], **dims)
        vdf = build_vdf(make_scene([a, b]), PAPER_GRID, BOUNDS)
        row = vdf.data[0, 0, 0]
        np.testing.assert_allclose(row[:2], [0.5, 0.5], atol=1e-15)
        single = build_vdf(make_scene([a]), PAPER_GRID, BOUNDS).data[0, 0, 0]
        np.testing.assert_array_equal(row[3:], single[3:])
        assert vdf.counts[0, 0, 0] == 2

    def test_matches_naive_oracle_bitwise(self):
        for seed in range(10):
            scene = generate_scene(SceneConfig(grid=PAPER_GRID), seed)
            vdf = build_vdf(scene, PAPER_GRID, BOUNDS)
            np.testing.assert_array_equal(vdf.data, vdf_oracle(scene, PAPER_GRID, BOUNDS))

    def test_permutation_invariance_bitwise(self):
        scene = generate_scene(SceneConfig(grid=PAPER_GRID, vehicle_count_range=(12, 14)),
                               seed=3)
        vdf = build_vdf(scene, PAPER_GRID, BOUNDS)
        rng = np.random.default_rng(0)
        for _ in range(5):
            order = rng.permutation(len(scene.vehicles))
            shuffled = make_scene([scene.vehicles[i] for i in order])
            np.testing.assert_array_equal(build_vdf(shuffled, PAPER_GRID, BOUNDS).data,
                                          vdf.data)

    def test_grid_shift_equivariance(self):
        """Shifting every center by exactly one cell width moves occupied rows
        one cell over with identical values (lattice centers keep it exact)."""
        rng = np.random.default_rng(5)
        vehicles = []
        for _ in range(8):
            # Snap centers to 1/64 so the +2.0 shift is floating-point exact.
            x = np.floor(rng.uniform(0, 24) * 64) / 64
            y = np.floor(rng.uniform(0, 36) * 64) / 64
            h = 1.5
            vehicles.append(Vehicle(center=[x, y, h / 2], length=4.5, width=1.9,
                                    height=h, azimuth=rng.uniform(0, 2 * np.pi)))
        scene = make_scene(vehicles)
        shifted = make_scene([
            Vehicle(center=v.center + np.array([2.0, 0.0, 0.0]), length=v.length,
                    width=v.width, height=v.height, azimuth=v.azimuth)
            for v in vehicles])
        base = build_vdf(scene, PAPER_GRID, BOUNDS)
        moved = build_vdf(shifted, PAPER_GRID, BOUNDS)
        np.testing.assert_array_equal(moved.data[1:], base.data[:-1])
        np.testing.assert_array_equal(moved.counts[1:], base.counts[:-1])

    def test_entries_in_unit_interval(self):
        for seed in range(5):
            scene = generate_scene(SceneConfig(grid=PAPER_GRID), seed)
            vdf = build_vdf(scene, PAPER_GRID, BOUNDS)
            assert np.all(vdf.data >= 0.0) and np.all(vdf.data <= 1.0)

    def test_bounds_violation(self):
        v = Vehicle(center=[1.0, 3.0, 2.1], length=4.0, width=2.0, height=4.2,
                    azimuth=0.0)
        with pytest.raises(BoundsViolation):
            build_vdf(make_scene([v]), PAPER_GRID, NormBounds())

    def test_out_of_coverage_vehicle_ignored(self):
        v = Vehicle(center=[-5.0, 3.0, 0.8], length=4.0, width=2.0, height=1.6,
                    azimuth=0.0)
        vdf = build_vdf(make_scene([v]), PAPER_GRID, BOUNDS)
        assert np.all(vdf.data == 0.0) and vdf.counts.sum() == 0


def obb_surface_distance(point, vehicle):
    """Exact distance from a point to the vehicle box surface (0 if inside)."""
    box = vehicle.box()
    p = box.world_to_box(point)
    d = np.abs(p) - box.half_extents
    outside = np.linalg.norm(np.maximum(d, 0.0))
    inside = min(0.0, float(np.max(d)))
    return outside if outside > 0 else -inside


class TestSimulateLidar:
    def _ms(self, center=(8.0, 18.0, 0.75)):
        return Vehicle(center=np.asarray(center), length=4.5, width=1.8, height=1.5,
                       azimuth=0.0, is_ms=True)

    def test_only_ms_gives_empty_cloud(self):
        cloud = simulate_lidar(make_scene([self._ms()]))
        assert cloud.shape == (0, 3)

    def test_boresight_hit_matches_slab_oracle(self):
        ms = self._ms()
        target = Vehicle(center=[14.0, 18.0, 1.0], length=4.0, width=2.0, height=2.0,
                         azimuth=0.0)
        config = LidarConfig(n_azimuth=4, elevations=(0.0,), max_range=60.0)
        cloud = simulate_lidar(make_scene([ms, target]), config)
        # Sensor sits 1 m above the MS roof; only the +X ray can hit.
        sensor = ms.center + np.array([0.0, 0.0, ms.height / 2 + 1.0])
        assert sensor[2] == pytest.approx(2.5)
        assert cloud.shape == (1, 3)
        expected_t = (target.center[0] - target.length / 2) - sensor[0]
        np.testing.assert_allclose(cloud[0], sensor + np.array([expected_t, 0.0, 0.0]),
                                   atol=1e-12)

    def test_all_hits_on_some_box_surface(self):
        scene = generate_scene(SceneConfig(grid=PAPER_GRID, vehicle_count_range=(8, 12)),
                               seed=21)
        cloud = simulate_lidar(scene, LidarConfig(n_azimuth=90))
        assert len(cloud) > 0
        others = [v for v in scene.vehicles if not v.is_ms]
        for point in cloud:
            assert min(obb_surface_distance(point, v) for v in others) <= 1e-6

    def test_deterministic(self):
        scene = generate_scene(SceneConfig(grid=PAPER_GRID), seed=2)
        np.testing.assert_array_equal(simulate_lidar(scene), simulate_lidar(scene))

    def test_no_ms_raises(self):
        v = Vehicle(center=[5.0, 5.0, 0.8], length=4.0, width=2.0, height=1.6,
                    azimuth=0.0)
        with pytest.raises(NoMs):
            simulate_lidar(make_scene([v]))


class TestVoxelizePcf:
    SPEC = PcfSpec(voxel=(0.1, 0.15, 0.5), dims=(256, 256, 12), origin=(0.0, 0.0, 0.0),
                   mode="count")

    def test_default_spec_matches_contract(self):
        spec = PcfSpec()
        assert spec.voxel == (0.1, 0.15, 0.5)
        assert spec.dims == (256, 256, 12)

    def test_centered_on_paper_grid(self):
        spec = PcfSpec.centered_on(PAPER_GRID)
        np.testing.assert_allclose(spec.origin, (1.2, -1.2, 0.0), atol=1e-12)

    def test_empty_cloud(self):
        grid = voxelize_pcf(np.zeros((0, 3)), self.SPEC)
        assert grid.data.shape == (256, 256, 12)
        assert grid.data.sum() == 0 and grid.drops == 0

    def test_single_corner_point(self):
        grid = voxelize_pcf(np.array([[0.0, 0.0, 0.0]]), self.SPEC)
        assert grid.data[0, 0, 0] == 1
        assert grid.data.sum() == 1 and grid.drops == 0

    def test_count_conservation(self):
        rng = np.random.default_rng(17)
        extent = np.asarray(self.SPEC.dims) * np.asarray(self.SPEC.voxel)
        pts = rng.uniform(0, extent * 0.999, size=(1000, 3))
        grid = voxelize_pcf(pts, self.SPEC)
        assert grid.data.sum() == 1000 and grid.drops == 0

    def test_out_of_bounds_dropped_and_counted(self):
        pts = np.array([[1.0, 1.0, 1.0], [-1.0, 0.0, 0.0], [1000.0, 0.0, 0.0]])
        grid = voxelize_pcf(pts, self.SPEC)
        assert grid.data.sum() == 1 and grid.drops == 2

    def test_binary_mode(self):
        spec = PcfSpec(voxel=(0.1, 0.15, 0.5), dims=(8, 8, 4), origin=(0, 0, 0),
                       mode="binary")
        pts = np.tile([[0.05, 0.05, 0.25]], (7, 1))
        grid = voxelize_pcf(pts, spec)
        assert grid.data[0, 0, 0] == 1 and grid.data.sum() == 1
        assert set(np.unique(grid.data)) <= {0, 1}

    def test_same_floor_convention_as_grid_index(self):
        spec = PcfSpec(voxel=(2.0, 6.0, 1.0), dims=(14, 6, 6), origin=(0, 0, 0),
                       mode="count")
        grid = voxelize_pcf(np.array([[2.0, 0.0, 0.0]]), spec)
        assert grid.data[1, 0, 0] == 1


class TestSaVector:
    def test_width_and_padding(self):
        scene = generate_scene(SceneConfig(vehicle_count_range=(3, 3)), seed=1)
        vec = build_sa_vector(scene, PAPER_GRID, BOUNDS, max_vehicles=5)
        assert vec.shape == (sa_vector_width(5),)
        assert np.all(vec[3 + 7 * 3:] == 0.0)

    def test_ms_location_leads(self):
        scene = generate_scene(SceneConfig(), seed=1)
        vec = build_sa_vector(scene, PAPER_GRID, BOUNDS)
        expected = (scene.ms().center - np.asarray(PAPER_GRID.origin)) / PAPER_GRID.extent
        np.testing.assert_array_equal(vec[:3], expected)
