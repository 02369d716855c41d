import numpy as np
import pytest

from aoisched import dqn


def small_params(sizes=(4, 8, 3), seed=0):
    return dqn.init_mlp(list(sizes), np.random.default_rng(seed))


def random_batch(params, batch=6, actions=3, seed=1):
    rng = np.random.default_rng(seed)
    dim = params.weights[0].shape[0]
    masks = rng.uniform(size=(batch, actions)) < 0.7
    masks[:, 0] = True  # idling stays feasible
    return dqn.Batch(
        states=rng.normal(size=(batch, dim)),
        actions=rng.integers(0, actions, size=batch),
        rewards=rng.normal(size=batch),
        next_states=rng.normal(size=(batch, dim)),
        next_masks=masks,
    )


class TestForward:
    def test_zero_weights_zero_output(self):
        params = small_params()
        for w in params.weights:
            w[:] = 0.0
        out = dqn.forward(params, np.ones(4))
        assert np.allclose(out, 0.0)

    def test_single_hidden_unit_hand_computed(self):
        params = dqn.MlpParams(
            weights=[np.array([[2.0]]), np.array([[-3.0]])],
            biases=[np.array([-1.0]), np.array([0.5])],
        )
        # relu(2x - 1) * -3 + 0.5
        assert dqn.forward(params, np.array([2.0]))[0] == pytest.approx(-8.5)
        assert dqn.forward(params, np.array([0.0]))[0] == pytest.approx(0.5)

    def test_output_layer_scaling(self):
        params = small_params(seed=3)
        base = dqn.forward(params, np.ones(4))
        params.weights[-1] *= 2.5
        params.biases[-1] *= 2.5
        assert np.allclose(dqn.forward(params, np.ones(4)), 2.5 * base)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            dqn.forward(small_params(), np.ones(5))

    def test_deterministic(self):
        params = small_params(seed=9)
        x = np.random.default_rng(0).normal(size=4)
        assert np.array_equal(dqn.forward(params, x), dqn.forward(params, x))


class TestMaskedArgmax:
    def test_never_selects_infeasible(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            q = rng.normal(size=10)
            mask = rng.uniform(size=10) < 0.4
            mask[rng.integers(10)] = True
            assert mask[dqn.masked_argmax(q, mask)]

    def test_ties_to_lowest_index(self):
        q = np.array([1.0, 1.0, 1.0])
        assert dqn.masked_argmax(q, np.array([True, True, True])) == 0
        assert dqn.masked_argmax(q, np.array([False, True, True])) == 1


class TestBellmanLoss:
    def test_zero_when_targets_equal_predictions(self):
        params = small_params(seed=5)
        batch = random_batch(params)
        # gamma = 0 and rewards equal to the current predictions
        preds = dqn.forward_batch(params, batch.states)
        batch.rewards = preds[np.arange(len(batch.actions)), batch.actions]
        loss, _ = dqn.bellman_loss(params, params.copy(), batch, gamma=0.0)
        assert loss == pytest.approx(0.0, abs=1e-24)

    def test_single_sample_hand_arithmetic(self):
        params = dqn.MlpParams(
            weights=[np.array([[1.0, 0.0], [0.0, 1.0]])],
            biases=[np.array([0.0, 0.0])],
        )
        target = params.copy()
        batch = dqn.Batch(
            states=np.array([[2.0, -1.0]]),
            actions=np.array([0]),
            rewards=np.array([1.5]),
            next_states=np.array([[0.5, 0.25]]),
            next_masks=np.array([[True, True]]),
        )
        # q(s, 0) = 2.0; bootstrap = max(0.5, 0.25) = 0.5
        # td = 2.0 - (1.5 + 0.9 * 0.5) = 0.05
        loss, _ = dqn.bellman_loss(params, target, batch, gamma=0.9, double=False)
        assert loss == pytest.approx(0.05**2)

    def test_infeasible_next_actions_ignored(self):
        params = dqn.MlpParams(
            weights=[np.eye(2)], biases=[np.zeros(2)]
        )
        batch = dqn.Batch(
            states=np.array([[1.0, 0.0]]),
            actions=np.array([0]),
            rewards=np.array([0.0]),
            next_states=np.array([[0.1, 5.0]]),
            next_masks=np.array([[True, False]]),
        )
        loss, _ = dqn.bellman_loss(params, params.copy(), batch, gamma=1.0 - 1e-9,
                                   double=False)
        # bootstrap must use 0.1, not the masked 5.0
        assert loss == pytest.approx((1.0 - 0.1) ** 2, rel=1e-6)

    @pytest.mark.parametrize("double", [False, True])
    def test_gradient_matches_finite_differences(self, double):
        for seed in range(5):
            params = small_params(sizes=(5, 7, 6, 4), seed=seed)
            target = dqn.init_mlp([5, 7, 6, 4], np.random.default_rng(seed + 50))
            batch = random_batch(params, batch=8, actions=4, seed=seed + 100)
            _, (gw, gb) = dqn.bellman_loss(params, target, batch, gamma=0.9,
                                           double=double)

            def loss_at(pt):
                value, _ = dqn.bellman_loss(pt, target, batch, gamma=0.9,
                                            double=double)
                return value

            step = 1e-6
            for layer in range(len(params.weights)):
                for arrays, grads in ((params.weights, gw), (params.biases, gb)):
                    flat = arrays[layer].ravel()
                    idx = np.random.default_rng(seed).choice(
                        flat.size, size=min(12, flat.size), replace=False
                    )
                    for i in idx:
                        keep = flat[i]
                        flat[i] = keep + step
                        up = loss_at(params)
                        flat[i] = keep - step
                        down = loss_at(params)
                        flat[i] = keep
                        numeric = (up - down) / (2 * step)
                        analytic = grads[layer].ravel()[i]
                        denom = max(abs(numeric), abs(analytic), 1e-8)
                        assert abs(numeric - analytic) / denom <= 1e-4


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        params = small_params(seed=1)
        before = params.copy()
        state = dqn.AdamState.zeros_like(params)
        zeros = ([np.zeros_like(w) for w in params.weights],
                 [np.zeros_like(b) for b in params.biases])
        dqn.adam_step(params, zeros, state, lr=0.01)
        for w0, w1 in zip(before.weights, params.weights):
            assert np.allclose(w0, w1)

    def test_first_step_is_bias_corrected_unit(self):
        params = dqn.MlpParams(weights=[np.array([[1.0]])], biases=[np.array([0.0])])
        grads = ([np.array([[1.0]])], [np.array([0.0])])
        state = dqn.AdamState.zeros_like(params)
        dqn.adam_step(params, grads, state, lr=0.01)
        assert params.weights[0][0, 0] == pytest.approx(1.0 - 0.01, abs=1e-6)

    def test_constant_gradient_drifts_monotonically(self):
        params = dqn.MlpParams(weights=[np.array([[0.0]])], biases=[np.array([0.0])])
        state = dqn.AdamState.zeros_like(params)
        grads = ([np.array([[1.0]])], [np.array([0.0])])
        history = []
        for _ in range(20):
            dqn.adam_step(params, grads, state, lr=0.01)
            history.append(params.weights[0][0, 0])
        assert all(b < a for a, b in zip(history, history[1:]))

    def test_clip_caps_global_norm(self):
        gw = [np.full((2, 2), 10.0)]
        gb = [np.full(2, 10.0)]
        norm = dqn.clip_gradients((gw, gb), 1.0)
        assert norm > 1.0
        total = np.sqrt(sum(float(np.sum(g * g)) for g in (*gw, *gb)))
        assert total == pytest.approx(1.0)


class TestTarget:
    def test_clone_matches_on_random_states(self):
        params = small_params(seed=4)
        target = dqn.clone_target(params)
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.normal(size=4)
            assert np.array_equal(dqn.forward(params, x), dqn.forward(target, x))

    def test_clone_is_isolated_from_updates(self):
        params = small_params(seed=4)
        target = dqn.clone_target(params)
        params.weights[0][0, 0] += 1.0
        x = np.ones(4)
        assert not np.array_equal(dqn.forward(params, x), dqn.forward(target, x))


class TestReplay:
    def transition(self, i, dim=3, actions=4):
        return dqn.Transition(
            state=np.full(dim, float(i)), action=i % actions, reward=float(i),
            next_state=np.full(dim, float(i + 1)),
            next_mask=np.ones(actions, dtype=bool),
        )

    def test_ring_overwrites_oldest(self):
        mem = dqn.ReplayMemory(3)
        for i in range(5):
            mem.push(self.transition(i))
        held = sorted(t.reward for t in mem._items)
        assert held == [2.0, 3.0, 4.0]
        assert len(mem) == 3

    def test_sample_is_whole_memory_when_equal(self):
        mem = dqn.ReplayMemory(4)
        for i in range(4):
            mem.push(self.transition(i))
        batch = mem.sample(4, np.random.default_rng(0))
        assert sorted(batch.rewards.tolist()) == [0.0, 1.0, 2.0, 3.0]

    def test_sample_without_replacement(self):
        mem = dqn.ReplayMemory(50)
        for i in range(50):
            mem.push(self.transition(i))
        batch = mem.sample(32, np.random.default_rng(1))
        assert len(set(batch.rewards.tolist())) == 32

    def test_underfull_raises(self):
        mem = dqn.ReplayMemory(10)
        mem.push(self.transition(0))
        with pytest.raises(ValueError):
            mem.sample(2, np.random.default_rng(0))

    def test_inclusion_frequency_uniform(self):
        mem = dqn.ReplayMemory(20)
        for i in range(20):
            mem.push(self.transition(i))
        rng = np.random.default_rng(2)
        counts = np.zeros(20)
        trials = 10_000
        for _ in range(trials):
            batch = mem.sample(5, rng)
            for r in batch.rewards:
                counts[int(r)] += 1
        p = 5 / 20
        sigma = np.sqrt(trials * p * (1 - p))
        assert np.all(np.abs(counts - trials * p) < 3.5 * sigma)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = small_params(seed=8)
        state = dqn.AdamState.zeros_like(params)
        grads = ([np.ones_like(w) for w in params.weights],
                 [np.ones_like(b) for b in params.biases])
        dqn.adam_step(params, grads, state, lr=0.01)
        path = tmp_path / "ckpt.txt"
        dqn.save_checkpoint(path, params, state)
        loaded, adam = dqn.load_checkpoint(path)
        for a, b in zip(params.weights, loaded.weights):
            assert np.array_equal(a, b)
        for a, b in zip(state.v_weights, adam.v_weights):
            assert np.array_equal(a, b)
        assert adam.t == 1

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("something else")
        with pytest.raises(ValueError):
            dqn.load_checkpoint(path)
