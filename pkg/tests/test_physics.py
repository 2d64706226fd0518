import numpy as np
import pytest

from oracles import random_loop, resample_loop

from knotsim.geometry import (
    Action,
    Box,
    KnotConfiguration,
    center_of_mass,
    circle_configuration,
    denormalize_action,
    nearest_key_point,
)
from knotsim.physics import (
    RopeState,
    SimParams,
    SimulationDiverged,
    _stretch_forces,
    apply_reset_noise,
    internal_forces,
    kinetic_energy,
    load_params,
    save_params,
    step_frame,
)

P = SimParams()


def random_state(seed: int, prefix_frames: int = 3) -> RopeState:
    """State drawn from the simulator's own reachable set: a short
    random-action prefix from the rest circle."""
    rng = np.random.default_rng(seed)
    s = RopeState.at_rest(circle_configuration(40))
    for _ in range(prefix_frames):
        a = Action.from_array(rng.uniform(-1, 1, 6))
        box = Box.centered(center_of_mass(s.positions), 1.0)
        point, force = denormalize_action(a, box, P.f_max)
        s = step_frame(s, nearest_key_point(s.positions, point), force, P)
    return s


class TestSimParams:
    def test_frame_duration(self):
        assert P.frame_duration == pytest.approx(P.dt * P.substeps_per_frame * P.frame_skip)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            SimParams(mass=0.0)
        with pytest.raises(ValueError):
            SimParams(dt=-1e-3)

    def test_config_roundtrip(self, tmp_path):
        custom = SimParams(dt=5e-4, frame_skip=48, f_max=1.5)
        path = tmp_path / "sim.cfg"
        save_params(path, custom)
        assert load_params(path) == custom

    def test_config_missing_key(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("dt = 1e-3\n")
        with pytest.raises(ValueError, match="missing"):
            load_params(path)


class TestInternalForces:
    def test_circle_only_bending_remains(self):
        circle = circle_configuration(40)
        f = internal_forces(RopeState.at_rest(circle), P)
        mags = np.linalg.norm(f, axis=1)
        # Rotationally symmetric: equal magnitude at every bead, purely
        # radial (no tangential or z component).
        assert np.allclose(mags, mags[0], rtol=1e-9)
        assert mags[0] > 0
        radial = circle.points / np.linalg.norm(circle.points, axis=1, keepdims=True)
        assert np.allclose(np.abs(np.einsum("ij,ij->i", f, radial)), mags, rtol=1e-9)
        assert np.allclose(f[:, 2], 0.0)

    def test_hooke_on_one_stretched_edge(self):
        # Edge 0-1 stretched to 2*r0; both edges touching beads 0 and 1
        # are otherwise at rest length, so the stretch force there is
        # exactly k * r0 along the edge, equal and opposite.
        pts = np.array(
            [
                [0.00, 0.00, 0.0],
                [0.10, 0.00, 0.0],
                [0.10, 0.05, 0.0],
                [0.07, 0.09, 0.0],
                [0.02, 0.12, 0.0],
                [-0.03, 0.10, 0.0],
                [-0.03, 0.05, 0.0],
                [0.00, 0.05, 0.0],
            ]
        )
        cfg = KnotConfiguration(pts)
        f = _stretch_forces(cfg.points, np.zeros_like(pts), P)
        expect = P.k_stretch * 0.05
        assert np.allclose(f[0], [expect, 0.0, 0.0], atol=1e-9)
        assert f[1][0] == pytest.approx(-expect)

    def test_newton_third_law_residual(self):
        for seed in range(20):
            cfg = KnotConfiguration(
                random_loop(np.random.default_rng(seed), amplitude=0.6, harmonics=6)
            )
            # Zero velocities: drag and dashpots vanish, leaving only the
            # internally-cancelling terms.
            f = internal_forces(RopeState.at_rest(cfg), P)
            total = np.linalg.norm(f.sum(axis=0))
            scale = np.linalg.norm(f, axis=1).sum()
            assert total < 1e-8 * max(scale, 1e-12)

    def test_drag_term(self):
        circle = circle_configuration(40)
        vel = np.full_like(circle.points, 0.3)
        still = internal_forces(RopeState.at_rest(circle), P)
        moving = internal_forces(RopeState(circle, vel), P)
        # Uniform translation excites no dashpot; difference is pure drag.
        assert np.allclose(moving - still, -P.c_drag * vel, atol=1e-12)


class TestStepFrame:
    def test_circle_relaxation_vs_refinement_oracle(self):
        circle = circle_configuration(40)
        s0 = RopeState.at_rest(circle)
        coarse = step_frame(s0, 0, np.zeros(3), P)
        disp = np.linalg.norm(coarse.positions.points - circle.points, axis=1)
        assert disp.max() < 1e-3

        refined = step_frame(
            s0, 0, np.zeros(3), SimParams(dt=P.dt / 10, frame_skip=P.frame_skip * 10)
        )
        gap = np.linalg.norm(coarse.positions.points - refined.positions.points, axis=1)
        assert gap.max() < 1e-4

    def test_forced_bead_moves_monotonically(self):
        s = RopeState.at_rest(circle_configuration(40))
        force = np.array([P.f_max, 0.0, 0.0])
        xs = [s.positions.points[0, 0]]
        for _ in range(5):
            s = step_frame(s, 0, force, P)
            xs.append(s.positions.points[0, 0])
        assert all(b > a for a, b in zip(xs, xs[1:]))

    def test_bitwise_determinism(self):
        s0 = random_state(11)
        force = np.array([0.4, -0.2, 0.7])
        a = step_frame(s0, 7, force, P)
        b = step_frame(s0, 7, force, P)
        assert np.array_equal(a.positions.points, b.positions.points)
        assert np.array_equal(a.velocities, b.velocities)

    def test_grasp_index_out_of_range(self):
        s = RopeState.at_rest(circle_configuration(40))
        with pytest.raises(IndexError):
            step_frame(s, 40, np.zeros(3), P)

    def test_divergence_detected(self):
        s = RopeState.at_rest(circle_configuration(40))
        with pytest.raises(SimulationDiverged):
            step_frame(s, 0, np.array([1e7, 0.0, 0.0]), P)

    def test_energy_dissipation_zero_force(self):
        # Reachable random states; kinetic energy must fall frame over
        # frame once the force is removed.
        for seed in range(100):
            s = random_state(seed)
            ke = kinetic_energy(s, P)
            for _ in range(8):
                s = step_frame(s, 0, np.zeros(3), P)
                ke_next = kinetic_energy(s, P)
                assert ke_next <= ke * (1 + 1e-10), f"seed {seed}"
                ke = ke_next

    def test_inextensibility_over_episode(self):
        rng = np.random.default_rng(123)
        s = RopeState.at_rest(circle_configuration(40))
        for _ in range(50):
            a = Action.from_array(rng.uniform(-1, 1, 6))
            box = Box.centered(center_of_mass(s.positions), 1.0)
            point, force = denormalize_action(a, box, P.f_max)
            s = step_frame(s, nearest_key_point(s.positions, point), force, P)
            pts = s.positions.points
            edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
            assert edges.min() >= 0.25 * 0.05 and edges.max() <= 4 * 0.05

    def test_no_tunneling_perpendicular_strands(self):
        from test_gauss import SINGLE_CROSSING_POINTS

        base = SINGLE_CROSSING_POINTS.copy()
        base[:, 2] *= 0.4  # strands at z = +-0.04 near the crossing
        pts = resample_loop(base, 40)
        cfg = KnotConfiguration(pts)
        upper = np.where(pts[:, 2] > 0.03)[0]
        lower = np.where(pts[:, 2] < -0.03)[0]
        grasp = upper[np.argmin(np.linalg.norm(pts[upper, :2], axis=1))]

        s = RopeState.at_rest(cfg)
        push = np.array([0.0, 0.0, -P.f_max])
        min_sep = np.inf
        for _ in range(50):
            s = step_frame(s, int(grasp), push, P)
            p = s.positions.points
            d = np.linalg.norm(p[upper][:, None, :] - p[lower][None, :, :], axis=2)
            min_sep = min(min_sep, float(d.min()))
        assert min_sep >= 0.5 * P.bead_radius


class TestResetNoise:
    def test_zero_scale_identity(self):
        cfg = circle_configuration(40)
        out = apply_reset_noise(cfg, 0.0, np.random.default_rng(0))
        assert np.array_equal(out.points, cfg.points)

    def test_seeded_reproducibility(self):
        cfg = circle_configuration(40)
        a = apply_reset_noise(cfg, 0.015, np.random.default_rng(42))
        b = apply_reset_noise(cfg, 0.015, np.random.default_rng(42))
        assert np.array_equal(a.points, b.points)

    def test_bounded_and_valid(self):
        cfg = circle_configuration(40)
        for seed in range(20):
            out = apply_reset_noise(cfg, 0.015, np.random.default_rng(seed))
            assert np.abs(out.points - cfg.points).max() <= 0.015

    def test_negative_scale_rejected(self):
        with pytest.raises(ValueError):
            apply_reset_noise(circle_configuration(40), -0.1, np.random.default_rng(0))
