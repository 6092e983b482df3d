import math

import numpy as np
import pytest

from lowdisc import rrtplan as rp
from lowdisc import seqcore as sq


def open_env(start, goal):
    return rp.ChainEnv.open_env(start, goal)


def folded(heading=0.0):
    """A zig-zag configuration whose chain stays within ~0.33 of the anchor."""
    headings = np.array([heading, heading + 2.4, heading, heading + 2.4])
    rel = np.diff(headings, prepend=0.0)
    return rp.angles_to_config([rp._wrap_angle(a) for a in rel])


class TestForwardKinematics:
    def test_straight_chain_along_x(self):
        pts = rp.chain_forward_kinematics([0, 0, 0, 0], anchor=(0, 0))
        expected = np.array([[0, 0], [0.2, 0], [0.4, 0], [0.6, 0], [0.8, 0]])
        np.testing.assert_allclose(pts, expected, atol=1e-15)

    def test_first_joint_rotates_whole_chain(self):
        pts = rp.chain_forward_kinematics([np.pi / 2, 0, 0, 0], anchor=(0, 0))
        expected = np.array([[0, 0], [0, 0.2], [0, 0.4], [0, 0.6], [0, 0.8]])
        np.testing.assert_allclose(pts, expected, atol=1e-15)

    def test_segment_lengths(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.uniform(-np.pi, np.pi, 4)
            pts = rp.chain_forward_kinematics(q)
            seg = np.diff(pts, axis=0)
            np.testing.assert_allclose(
                np.linalg.norm(seg, axis=1), rp.LINK_LENGTH, atol=1e-12
            )

    def test_config_angle_mapping(self):
        np.testing.assert_allclose(rp.config_to_angles([0.5] * 4), 0.0, atol=1e-15)
        np.testing.assert_allclose(rp.config_to_angles([0.0]), -np.pi)
        np.testing.assert_allclose(rp.config_to_angles([1.0]), np.pi)
        q = np.array([0.1, 0.4, 0.9, 0.5])
        np.testing.assert_allclose(
            rp.angles_to_config(rp.config_to_angles(q)), q, atol=1e-14
        )


class TestChainCollision:
    def test_open_env_is_free(self):
        env = open_env(folded(0.0), folded(1.0))
        assert not rp.chain_collision(env, env.start)

    def test_leaving_workspace_collides(self):
        # anchor near the box edge, chain stretched outward
        env = rp.ChainEnv.open_env([0.5] * 4, [0.6] * 4, anchor=(0.95, 0.5))
        straight_out = rp.angles_to_config([0.0, 0.0, 0.0, 0.0])  # along +x
        assert rp.chain_collision(env, straight_out)

    def test_tunnel_start_and_goal_are_free(self):
        for seed in range(25):
            env = rp.ChainEnv.tunnel_env(0.48, seed=seed)
            assert not rp.chain_collision(env, env.start)
            assert not rp.chain_collision(env, env.goal)

    def test_chain_through_wall_collides(self):
        # fixture: chain pointing radially into the walled half-plane
        # crosses both the inner and outer wall bands
        env = rp.ChainEnv.tunnel_env(0.48, seed=3)
        mid_span = env.phi0 + np.pi / 2
        rel = np.diff(np.array([mid_span, mid_span, mid_span, mid_span]), prepend=0.0)
        q = rp.angles_to_config([rp._wrap_angle(a) for a in rel])
        assert rp.chain_collision(env, q)

    def test_widening_passage_only_frees(self):
        # free space is nested: anything free at width w stays free at w' > w
        rng = np.random.default_rng(7)
        narrow = rp.ChainEnv.tunnel_env(0.40, seed=11)
        wide = rp.ChainEnv.tunnel_env(0.64, seed=11)
        assert narrow.phi0 == wide.phi0 and narrow.anchor == wide.anchor
        configs = rng.uniform(0, 1, (300, 4))
        for q in configs:
            if not rp.chain_collision(narrow, q):
                assert not rp.chain_collision(wide, q)


class TestRrtPlan:
    def test_goal_adjacent_straight_line_bound(self):
        start = folded(0.3)
        goal = start + np.array([0.12, 0.0, 0.0, 0.0])
        env = open_env(start, goal)
        cfg = rp.RrtConfig(max_iters=100, step=0.05, goal_tol=1e-9)
        samples = np.tile(goal, (100, 1))  # sample source aimed at the goal
        res = rp.rrt_plan(env, cfg, samples)
        assert res.success
        bound = math.ceil(np.linalg.norm(goal - start) / cfg.step) + 1
        assert res.iterations <= bound

    def test_goal_region_everything(self):
        env = open_env(folded(0.0), folded(0.0))
        cfg = rp.RrtConfig(max_iters=10, step=0.05, goal_tol=10.0)
        samples = sq.generate(sq.SequenceSpec("sobol", 4), 10)
        res = rp.rrt_plan(env, cfg, samples)
        assert res.success and res.iterations == 1

    def test_deterministic(self):
        env = rp.ChainEnv.tunnel_env(0.52, seed=5)
        cfg = rp.RrtConfig(max_iters=3000, step=0.05, goal_tol=0.05)
        samples = sq.generate(sq.SequenceSpec("halton", 4), 3000)
        a = rp.rrt_plan(env, cfg, samples)
        b = rp.rrt_plan(env, cfg, samples)
        assert a.success == b.success
        np.testing.assert_array_equal(a.nodes, b.nodes)
        np.testing.assert_array_equal(a.parents, b.parents)

    def test_start_in_collision_raises(self):
        env = rp.ChainEnv.open_env([0.5] * 4, [0.6] * 4, anchor=(0.99, 0.5))
        bad_start = rp.angles_to_config([0.0, 0.0, 0.0, 0.0])
        env = rp.ChainEnv.open_env(bad_start, [0.6] * 4, anchor=(0.99, 0.5))
        cfg = rp.RrtConfig(max_iters=10)
        with pytest.raises(ValueError, match="collision"):
            rp.rrt_plan(env, cfg, np.full((10, 4), 0.5))

    def test_exhausted_samples_fail(self):
        env = open_env(folded(0.0), folded(3.0))
        cfg = rp.RrtConfig(max_iters=1000, step=0.01, goal_tol=1e-6)
        samples = np.tile(folded(1.5), (5, 1))
        res = rp.rrt_plan(env, cfg, samples)
        assert not res.success and res.path is None
        assert res.iterations == 5

    def test_tree_invariants(self):
        env = rp.ChainEnv.tunnel_env(0.56, seed=2)
        cfg = rp.RrtConfig(max_iters=2000, step=0.05, goal_tol=0.05)
        samples = sq.generate(sq.SequenceSpec("sobol", 4), 2000)
        res = rp.rrt_plan(env, cfg, samples)
        assert res.n_nodes <= cfg.max_iters + 1
        for i in range(1, res.n_nodes):
            assert res.parents[i] < i
        # every node reachable from the root
        for i in range(res.n_nodes):
            j, hops = i, 0
            while res.parents[j] >= 0:
                j = res.parents[j]
                hops += 1
                assert hops <= res.n_nodes
            assert j == 0

    def test_path_validity(self):
        env = rp.ChainEnv.tunnel_env(0.60, seed=8)
        cfg = rp.RrtConfig(max_iters=8000, step=0.05, goal_tol=0.05)
        samples = sq.generate(sq.SequenceSpec("sobol", 4), 8000)
        res = rp.rrt_plan(env, cfg, samples)
        if not res.success:
            pytest.skip("this sweep cell did not find a path")
        assert np.array_equal(res.path[0], np.asarray(env.start))
        steps = np.linalg.norm(np.diff(res.path, axis=0), axis=1)
        assert (steps <= cfg.step + 1e-12).all()
        for q in res.path:
            assert not rp.chain_collision(env, q)
        assert np.linalg.norm(res.path[-1] - np.asarray(env.goal)) <= cfg.goal_tol

    def test_tree_dump(self, tmp_path):
        env = open_env(folded(0.0), folded(0.5))
        cfg = rp.RrtConfig(max_iters=50, step=0.05, goal_tol=0.02)
        samples = sq.generate(sq.SequenceSpec("halton", 4), 50)
        res = rp.rrt_plan(env, cfg, samples)
        path = tmp_path / "tree.csv"
        rp.write_tree_csv(res, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "index,parent,c1,c2,c3,c4"
        assert len(lines) == 1 + res.n_nodes
        assert lines[1].startswith("0,-1,")


class TestSuccessRate:
    def test_obstacle_free_family_is_certain(self):
        # when nothing can collide, every source succeeds
        start = folded(0.0)
        goal = folded(0.9)

        def factory(width, seed):
            return rp.ChainEnv.open_env(start, goal)

        cfg = rp.RrtConfig(max_iters=2000, step=0.05, goal_tol=0.15)
        sources = [
            sq.SequenceSpec("sobol", 4),
            sq.SequenceSpec("halton", 4),
            sq.SequenceSpec("uniform", 4, seed=1),
        ]
        rows = rp.success_rate(
            widths=[0.4],
            reps=4,
            sources=sources,
            cfg=cfg,
            seed=0,
            sequence_length=2000,
            env_factory=factory,
        )
        assert all(pct == 100.0 for _, _, pct in rows)

    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError, match="reps"):
            rp.success_rate([0.4], 0, [sq.SequenceSpec("sobol", 4)], rp.RrtConfig())

    def test_table_shape_and_determinism(self):
        cfg = rp.RrtConfig(max_iters=400, step=0.05, goal_tol=0.05)
        sources = [sq.SequenceSpec("sobol", 4), sq.SequenceSpec("uniform", 4, seed=3)]
        kwargs = dict(
            widths=[0.44, 0.64],
            reps=3,
            sources=sources,
            cfg=cfg,
            seed=1,
            sequence_length=400,
        )
        rows = rp.success_rate(**kwargs)
        assert len(rows) == 4
        labels = {r[0] for r in rows}
        assert labels == {"sobol", "uniform"}
        assert rows == rp.success_rate(**kwargs)

    def test_threads_match_serial(self):
        cfg = rp.RrtConfig(max_iters=300, step=0.05, goal_tol=0.05)
        sources = [sq.SequenceSpec("halton", 4)]
        kwargs = dict(
            widths=[0.48],
            reps=4,
            sources=sources,
            cfg=cfg,
            seed=2,
            sequence_length=300,
        )
        serial = rp.success_rate(**kwargs, threads=1)
        threaded = rp.success_rate(**kwargs, threads=4)
        assert serial == threaded
