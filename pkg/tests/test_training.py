"""Adapter training: losses, gradients, and the SGD loop."""

import numpy as np
import pytest

from nomonet.constructs import Triplet
from nomonet.errors import GradCheckFailure, NumericalFault
from nomonet.training import (
    AOE,
    COSINE_TRIPLET,
    GradCheckReport,
    LinearAdapter,
    LossConfig,
    TrainConfig,
    grad_check,
    history_csv,
    loss_and_grad,
    separation,
    train,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


class TestLossConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            LossConfig(kind="nope")
        with pytest.raises(ValueError):
            LossConfig(margin=-0.1)
        with pytest.raises(ValueError):
            LossConfig(ibn_tau=0.0)


class TestCosineTripletLoss:
    def test_separated_case_zero_loss(self):
        adapter = LinearAdapter.identity(4)
        a = np.array([[1.0, 0.0, 0.0, 0.0]])
        n = np.array([[0.0, 1.0, 0.0, 0.0]])
        loss, grad = loss_and_grad(adapter, a, a, n, LossConfig(kind=COSINE_TRIPLET))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_inverted_case(self):
        # anchor == negative, positive orthogonal: 0.2 - 0 + 1 = 1.2
        adapter = LinearAdapter.identity(4)
        a = np.array([[1.0, 0.0, 0.0, 0.0]])
        p = np.array([[0.0, 1.0, 0.0, 0.0]])
        loss, _ = loss_and_grad(adapter, a, p, a, LossConfig(kind=COSINE_TRIPLET))
        assert loss == pytest.approx(1.2, abs=1e-12)

    def test_batch_loss_is_sum_of_triplet_losses(self):
        rng = np.random.default_rng(0)
        adapter = LinearAdapter(rng.normal(size=(6, 4)))
        A, P, N = (rng.normal(size=(5, 6)) for _ in range(3))
        cfg = LossConfig(kind=COSINE_TRIPLET)
        batch_loss, _ = loss_and_grad(adapter, A, P, N, cfg)
        single = sum(
            loss_and_grad(adapter, A[i : i + 1], P[i : i + 1], N[i : i + 1], cfg)[0]
            for i in range(5)
        )
        assert batch_loss == pytest.approx(single, abs=1e-12)


class TestAoeLoss:
    def test_single_triplet_reduces_to_pairwise_terms(self):
        rng = np.random.default_rng(1)
        adapter = LinearAdapter(rng.normal(size=(6, 4)))
        a, p, n = (rng.normal(size=(1, 6)) for _ in range(3))
        cfg = LossConfig(kind=AOE)
        loss, _ = loss_and_grad(adapter, a, p, n, cfg)

        ah = unit((a @ adapter.weights)[0])
        ph = unit((p @ adapter.weights)[0])
        nh = unit((n @ adapter.weights)[0])
        cp = float(ah @ ph)
        cn = float(ah @ nh)

        def skew(x, y):
            h = len(x) // 2
            return float(x[h:] @ y[:h] - x[:h] @ y[h:])

        sp = cp + skew(ah, ph)
        sn = cn + skew(ah, nh)
        expected = (
            np.log1p(np.exp(cfg.cosine_tau * (cn - cp)))
            + np.log1p(np.exp(cfg.angle_tau * (abs(sn) - abs(sp))))
            + np.log1p(np.exp(cfg.ibn_tau * (cn - cp)))
        )
        assert loss == pytest.approx(float(expected), rel=1e-10)

    def test_requires_even_output_dimension(self):
        adapter = LinearAdapter(np.eye(3))
        a = np.ones((1, 3))
        with pytest.raises(ValueError, match="even"):
            loss_and_grad(adapter, a, a, a, LossConfig(kind=AOE))

    def test_loss_invariant_to_orthogonal_base_transform(self):
        # Rotating all base embeddings while conjugating the adapter leaves
        # every cosine (and hence the loss) unchanged.
        rng = np.random.default_rng(2)
        adapter = LinearAdapter(rng.normal(size=(6, 4)))
        A, P, N = (rng.normal(size=(3, 6)) for _ in range(3))
        Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        rotated = LinearAdapter(Q.T @ adapter.weights)
        for cfg in (LossConfig(kind=AOE), LossConfig(kind=COSINE_TRIPLET)):
            base, _ = loss_and_grad(adapter, A, P, N, cfg)
            conj, _ = loss_and_grad(rotated, A @ Q, P @ Q, N @ Q, cfg)
            assert base == pytest.approx(conj, rel=1e-10)


class TestGradCheck:
    def test_cosine_triplet_passes(self):
        report = grad_check(LossConfig(kind=COSINE_TRIPLET), trials=50, seed=0)
        assert isinstance(report, GradCheckReport)
        assert report.worst_relative_error < 1e-4

    def test_aoe_passes(self):
        report = grad_check(LossConfig(kind=AOE), trials=50, seed=0)
        assert report.worst_relative_error < 1e-4

    def test_corrupted_gradient_detected(self):
        with pytest.raises(GradCheckFailure) as err:
            grad_check(LossConfig(kind=AOE), trials=5, seed=0, _corrupt=0.05)
        assert err.value.seed is not None


def make_fixture():
    rng = np.random.default_rng(3)
    centers = rng.normal(size=(3, 16))
    ids, vectors, groups = [], {}, []
    triplets = []
    for g in range(3):
        for i in range(6):
            ind_id = f"g{g}i{i}"
            ids.append(ind_id)
            vectors[ind_id] = unit(centers[g] + 0.6 * rng.normal(size=16))
            groups.append(g)
    for g in range(3):
        members = [f"g{g}i{i}" for i in range(6)]
        others = [f"g{o}i{i}" for o in range(3) if o != g for i in range(6)]
        for i, anchor in enumerate(members):
            triplets.append(
                Triplet(anchor, members[(i + 1) % 6], others[i % len(others)])
            )
    return ids, vectors, groups, triplets


class TestTrain:
    def test_zero_learning_rate_keeps_adapter_and_repeats_history(self):
        ids, vectors, groups, triplets = make_fixture()
        adapter = LinearAdapter.identity(16)
        cfg = TrainConfig(batch_size=4, learning_rate=0.0, epochs=2, seed=0)
        result = train(adapter, triplets, vectors, cfg, LossConfig(kind=COSINE_TRIPLET))
        np.testing.assert_array_equal(result.adapter.weights, adapter.weights)
        losses = [loss for _, loss in result.history]
        half = len(losses) // 2
        assert losses[:half] == losses[half:]  # same batch order every epoch

    def test_deterministic_given_seed(self):
        ids, vectors, groups, triplets = make_fixture()
        cfg = TrainConfig(batch_size=4, learning_rate=1e-2, epochs=2, seed=5)
        loss_cfg = LossConfig(kind=AOE)
        one = train(LinearAdapter.identity(16), triplets, vectors, cfg, loss_cfg)
        two = train(LinearAdapter.identity(16), triplets, vectors, cfg, loss_cfg)
        np.testing.assert_array_equal(one.adapter.weights, two.adapter.weights)
        assert one.history == two.history

    def test_separation_improves_on_clustered_fixture(self):
        ids, vectors, groups, triplets = make_fixture()
        base = np.vstack([vectors[i] for i in ids])
        adapter = LinearAdapter.identity(16)
        before = separation(adapter.apply(base), groups)
        cfg = TrainConfig(batch_size=4, learning_rate=1e-2, epochs=20, seed=0)
        result = train(adapter, triplets, vectors, cfg, LossConfig(kind=AOE))
        after = separation(result.adapter.apply(base), groups)
        assert after > before

    def test_missing_embedding_raises(self):
        with pytest.raises(NumericalFault):
            train(
                LinearAdapter.identity(4),
                [Triplet("a", "b", "c")],
                {"a": np.ones(4)},
                TrainConfig(),
                LossConfig(),
            )


class TestAdapterIo:
    def test_save_load_round_trip(self, tmp_path):
        adapter = LinearAdapter.random(8, 4, seed=1)
        path = tmp_path / "adapter.bin"
        adapter.save(path)
        loaded = LinearAdapter.load(path)
        np.testing.assert_array_equal(loaded.weights, adapter.weights)

    def test_apply_normalizes(self):
        adapter = LinearAdapter.random(8, 4, seed=2)
        out = adapter.apply(np.random.default_rng(0).normal(size=(5, 8)))
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)

    def test_history_csv(self):
        text = history_csv([(0, 1.5), (1, 1.25)])
        assert text.splitlines() == ["step,loss", "0,1.500000", "1,1.250000"]
