import numpy as np
import pytest
from hypothesis import given, settings

from menuplan.adaptation import SwapItems, apply_adaptation
from menuplan.harness import make_state_sampler
from menuplan.menu import SEPARATOR
from menuplan.user_model import ModelParams
from menuplan.value_net import (
    ArchConfig,
    Dataset,
    ENCODING_LENGTH,
    PAD_CLASS,
    TrainConfig,
    ValueModel,
    encode,
    generate_training_data,
    init_params,
    load_dataset,
    load_model,
    loss_and_grads,
    save_dataset,
    save_model,
    train,
)

from conftest import design_strategy, make_design, make_state, rng

P = ModelParams()


class TestEncode:
    def test_identity_has_zero_assoc_diff(self):
        design = make_design(["a", "b", SEPARATOR, "c"], categories=[["a", "b"]])
        state = make_state(design)
        enc = encode(state, design)
        assert not enc.assoc_diff.any()

    def test_empty_history_zero_click_vectors(self):
        design = make_design(["a", "b"])
        state = make_state(design)
        enc = encode(state, design)
        assert not enc.clicks_prev.any() and not enc.clicks_curr.any()

    def test_swap_permutes_exactly_two_rows(self):
        design = make_design(["a", "b", "c"])
        state = make_state(design)
        base = encode(state, design).menu_onehot
        swapped = encode(
            state, apply_adaptation(design, SwapItems("a", "c"))
        ).menu_onehot
        differing = [r for r in range(len(base)) if not (base[r] == swapped[r]).all()]
        assert differing == [0, 2]

    def test_rows_are_one_hot_with_padding(self):
        design = make_design(["a", SEPARATOR, "b"])
        enc = encode(make_state(design), design)
        assert (enc.menu_onehot.sum(axis=1) == 1.0).all()
        assert enc.menu_onehot[3:, PAD_CLASS].all()

    def test_over_capacity_rejected(self):
        labels = [f"x{i}" for i in range(21)]
        design = make_design(labels)
        with pytest.raises(ValueError, match="capacity"):
            encode(make_state(design), design)

    def test_vector_length(self):
        design = make_design(["a", "b"])
        assert encode(make_state(design), design).vector().shape == (ENCODING_LENGTH,)

    def test_deterministic(self):
        design = make_design(["a", "b", "c"], categories=[["a", "c"]])
        state = make_state(design, clicks=[("a", 1, 1), ("b", 2, 2)], now=3)
        after = apply_adaptation(design, SwapItems("a", "b"))
        assert (encode(state, after).vector() == encode(state, after).vector()).all()


@settings(max_examples=150, deadline=None)
@given(design_strategy(min_items=2, max_items=6))
def test_encoding_injective_over_reachable_designs(design):
    from menuplan.adaptation import enumerate_adaptations

    state = make_state(design)
    seen = {}
    for option in enumerate_adaptations(design):
        after = apply_adaptation(design, option)
        key = encode(state, after).vector().tobytes()
        assert key not in seen or seen[key] == after.entries
        seen[key] = after.entries


class TestNetwork:
    def test_zero_weight_model_returns_biases(self):
        arch = ArchConfig(head_width=4, trunk_width=4, tail_width=4)
        params = {k: np.zeros_like(v) for k, v in init_params(arch, rng(0)).items()}
        params["tail_serial_out_b"] = np.array([1.5])
        params["tail_forage_out_b"] = np.array([-2.0])
        params["tail_recall_out_b"] = np.array([0.25])
        model = ValueModel(
            params=params,
            arch=arch,
            target_mean=np.zeros(3),
            target_std=np.ones(3),
            hyper={},
        )
        out = model.predict(np.zeros(ENCODING_LENGTH))
        assert out.as_tuple() == (1.5, -2.0, 0.25)

    def test_inference_deterministic(self):
        arch = ArchConfig(head_width=8, trunk_width=8, tail_width=8)
        model = ValueModel(
            params=init_params(arch, rng(3)),
            arch=arch,
            target_mean=np.zeros(3),
            target_std=np.ones(3),
            hyper={},
        )
        x = rng(1).normal(size=ENCODING_LENGTH)
        assert model.predict(x) == model.predict(x)

    def test_gradients_match_finite_differences(self):
        arch = ArchConfig(head_width=3, trunk_width=4, tail_width=3)
        params = init_params(arch, rng(7))
        generator = rng(8)
        for name, value in params.items():
            # keep every unit off the rectifier kink so both gradient
            # estimates see the same active set
            params[name] = value + generator.normal(scale=0.05, size=value.shape)
        X = generator.normal(size=(10, ENCODING_LENGTH))
        Y = generator.normal(size=(10, 3))
        _, grads = loss_and_grads(params, X, Y, arch)

        h = 1e-5
        worst = 0.0
        for name, grad in grads.items():
            flat_param = params[name].ravel()
            flat_grad = grad.ravel()
            for i in range(flat_param.size):
                original = flat_param[i]
                flat_param[i] = original + h
                up, _ = loss_and_grads(params, X, Y, arch)
                flat_param[i] = original - h
                down, _ = loss_and_grads(params, X, Y, arch)
                flat_param[i] = original
                numeric = (up - down) / (2 * h)
                denom = max(abs(numeric) + abs(flat_grad[i]), 1e-8)
                worst = max(worst, abs(numeric - flat_grad[i]) / denom)
        assert worst < 1e-4


class TestDataset:
    def test_generation_is_seed_deterministic(self, tmp_path):
        sampler = make_state_sampler(menu_sizes=(3, 4), history_clicks=12)
        a = generate_training_data(sampler, rng(5), 4, P, horizon=2, session_length=4)
        b = generate_training_data(sampler, rng(5), 4, P, horizon=2, session_length=4)
        save_dataset(a, tmp_path / "a.bin")
        save_dataset(b, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_no_change_only_states_have_zero_targets(self):
        def sampler(generator):
            return make_state(make_design(["only"], max_separators=0))

        dataset = generate_training_data(
            sampler, rng(0), 3, P, horizon=3, session_length=4, warmup_max=0
        )
        assert not dataset.Y.any()

    def test_targets_match_independent_resimulation(self):
        from dataclasses import replace as dc_replace

        from menuplan.adaptation import enumerate_adaptations, transition
        from menuplan.planner import DEFAULT_DISCOUNT, rollout
        from menuplan.user_model import reward

        sampler = make_state_sampler(menu_sizes=(3,), history_clicks=10)
        dataset = generate_training_data(
            sampler, rng(17), 2, P, horizon=3, session_length=4, warmup_max=1
        )

        generator = rng(17)
        for i in range(2):
            state = sampler(generator)
            for _ in range(int(generator.integers(0, 2))):
                options = enumerate_adaptations(state.design)
                step = options[int(generator.integers(len(options)))]
                state = transition(state, dc_replace(step, visible=True), 4, generator)
            options = enumerate_adaptations(state.design)
            adaptation = options[int(generator.integers(len(options)))]
            after = apply_adaptation(state.design, adaptation)
            child = transition(state, dc_replace(adaptation, visible=True), 4, generator)
            future = rollout(
                child, 2, generator, P, DEFAULT_DISCOUNT, session_length=4
            )
            value = reward(state, after, P) + future.scaled(DEFAULT_DISCOUNT)
            assert dataset.Y[i] == pytest.approx(np.array(value.as_tuple(), dtype=np.float32))

    def test_save_load_round_trip(self, tmp_path):
        X = rng(0).normal(size=(5, ENCODING_LENGTH)).astype(np.float32)
        Y = rng(1).normal(size=(5, 3)).astype(np.float32)
        save_dataset(Dataset(X, Y), tmp_path / "d.bin")
        loaded = load_dataset(tmp_path / "d.bin")
        assert (loaded.X == X).all() and (loaded.Y == Y).all()


class TestTrain:
    def _toy_dataset(self, n=200, constant=None):
        generator = rng(2)
        X = np.zeros((n, ENCODING_LENGTH), dtype=np.float32)
        X[:, :40] = generator.normal(size=(n, 40))
        if constant is not None:
            Y = np.full((n, 3), constant, dtype=np.float32)
        else:
            w = generator.normal(size=(40, 3))
            Y = (X[:, :40] @ w).astype(np.float32)
        return Dataset(X, Y)

    def test_learns_constant_targets(self):
        dataset = self._toy_dataset(constant=4.2)
        config = TrainConfig(
            max_epochs=30, patience=5, seed=0,
            arch=ArchConfig(head_width=8, trunk_width=8, tail_width=8),
        )
        model = train(dataset, config)
        preds = model.predict_batch(dataset.X[:20].astype(np.float64))
        assert np.abs(preds - 4.2).max() < 0.2

    def test_best_validation_curve_non_increasing(self):
        dataset = self._toy_dataset()
        config = TrainConfig(
            max_epochs=25, patience=5, seed=1,
            arch=ArchConfig(head_width=8, trunk_width=8, tail_width=8),
        )
        model = train(dataset, config)
        best = model.history["best_val"]
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(best, best[1:]))

    def test_training_deterministic(self):
        dataset = self._toy_dataset(n=100)
        config = TrainConfig(
            max_epochs=5, patience=5, seed=3,
            arch=ArchConfig(head_width=4, trunk_width=4, tail_width=4),
        )
        m1, m2 = train(dataset, config), train(dataset, config)
        for name in m1.params:
            assert (m1.params[name] == m2.params[name]).all()

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train(Dataset(np.zeros((0, ENCODING_LENGTH)), np.zeros((0, 3))))

    def test_model_round_trip(self, tmp_path):
        dataset = self._toy_dataset(n=80)
        config = TrainConfig(
            max_epochs=3, patience=5, seed=4,
            arch=ArchConfig(head_width=4, trunk_width=4, tail_width=4),
        )
        model = train(dataset, config)
        save_model(model, tmp_path / "m.bin")
        loaded = load_model(tmp_path / "m.bin")
        x = dataset.X[:5].astype(np.float64)
        assert (model.predict_batch(x) == loaded.predict_batch(x)).all()
        assert loaded.hyper == model.hyper

    def test_dropout_infers_clean(self):
        # dropout affects training only; prediction has no stochastic path
        dataset = self._toy_dataset(n=60)
        config = TrainConfig(
            max_epochs=2, patience=5, seed=5, dropout=0.5,
            arch=ArchConfig(head_width=4, trunk_width=4, tail_width=4),
        )
        model = train(dataset, config)
        x = dataset.X[:3].astype(np.float64)
        assert (model.predict_batch(x) == model.predict_batch(x)).all()
