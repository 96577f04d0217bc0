"""Training loop: schedule, records, replay determinism, divergence.

The reduction test rebuilds the whole loop from primitive numpy for the
plain adam case and demands bit-identical recorded rows, which pins the
batch order, the schedule, and the update arithmetic all at once.
"""

import numpy as np
import pytest

from specopt.errors import ConfigError
from specopt.optim import HyperParams, OptimizerState, parse_optimizer
from specopt.tasks import MatrixRegression
from specopt.train import (
    COMPLETED,
    DIVERGED,
    TOOLKIT_VERSION,
    EvalRow,
    RunRecord,
    TrainConfig,
    _BatchStream,
    canonical_config_text,
    config_digest,
    lr_at,
    run_training,
)


def matreg_config(**overrides):
    base = dict(
        task="matreg",
        optimizer=parse_optimizer("adam"),
        hp=HyperParams(lr_mat=0.01),
        total_steps=120,
        warmup_steps=10,
        batch_size=40,
        eval_every=60,
        seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


# --- schedule ---------------------------------------------------------------


def test_lr_warmup_is_linear():
    cfg = matreg_config(hp=HyperParams(lr_mat=1.0), total_steps=2000, warmup_steps=100)
    assert lr_at(cfg, 1) == 0.01
    assert lr_at(cfg, 50) == 0.5
    assert lr_at(cfg, 100) == 1.0


def test_lr_cosine_tail_lands_on_a_tenth_of_peak():
    cfg = matreg_config(hp=HyperParams(lr_mat=0.8), total_steps=2000, warmup_steps=100)
    assert abs(lr_at(cfg, 2000) - 0.08) < 1e-15
    mid = lr_at(cfg, 100 + 950)
    assert abs(mid - 0.8 * 0.55) < 1e-12
    lrs = [lr_at(cfg, s) for s in range(100, 2001)]
    assert all(b < a for a, b in zip(lrs, lrs[1:]))


# --- config plumbing --------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        matreg_config(total_steps=0)
    with pytest.raises(ConfigError):
        matreg_config(warmup_steps=0)
    with pytest.raises(ConfigError):
        matreg_config(total_steps=10, warmup_steps=10)
    with pytest.raises(ConfigError):
        matreg_config(batch_size=0)
    with pytest.raises(ConfigError):
        matreg_config(eval_every=0)
    with pytest.raises(ConfigError):
        matreg_config(divergence_threshold=0.0)


def test_canonical_text_is_sorted_and_complete():
    cfg = matreg_config()
    text = canonical_config_text(cfg)
    keys = [line.split(" = ")[0] for line in text.splitlines()]
    assert keys == sorted(keys)
    assert len(keys) == 17
    assert "optimizer = adam\n" in text
    assert "divergence_threshold = auto\n" in text
    assert "corpus = builtin\n" in text
    assert "spectral_iters = default\n" in text


def test_digest_tracks_every_field():
    base = config_digest(matreg_config())
    assert len(base) == 64
    assert config_digest(matreg_config()) == base
    assert config_digest(matreg_config(seed=1)) != base
    assert config_digest(matreg_config(hp=HyperParams(lr_mat=0.02))) != base


# --- batch stream -----------------------------------------------------------


def test_batch_stream_walks_epochs_without_wrapping_slices():
    stream = _BatchStream(10, 4, np.random.default_rng(0))
    first_epoch = stream.perm.copy()
    a, b = stream.next(), stream.next()
    assert np.array_equal(np.concatenate([a, b]), first_epoch[:8])
    c = stream.next()  # 8 + 4 > 10: reshuffles instead of wrapping
    assert len(c) == 4
    assert np.array_equal(c, stream.perm[:4])
    assert stream.pos == 4


def test_batch_stream_caps_batch_at_population():
    stream = _BatchStream(6, 64, np.random.default_rng(1))
    batch = stream.next()
    assert np.array_equal(np.sort(batch), np.arange(6))


# --- run records ------------------------------------------------------------


def test_to_csv_pins_the_exact_format():
    record = RunRecord(config_digest="abc123")
    record.rows.append(EvalRow(0, 1.5, 2.5, 0.0))
    record.rows.append(EvalRow(10, 0.125, 0.25, 0.01))
    want = (
        "# config_digest=abc123\n"
        f"# version={TOOLKIT_VERSION}\n"
        "# optimizer=adam\n"
        "# outcome=completed\n"
        "step,train_loss,eval_loss,lr_mat_effective\n"
        "0,1.5,2.5,0.0\n"
        "10,0.125,0.25,0.01\n"
    )
    assert record.to_csv("adam") == want
    assert "# optimizer=" not in record.to_csv()


def test_final_eval_loss_handles_empty_rows():
    assert np.isnan(RunRecord(config_digest="x").final_eval_loss)
    rec = RunRecord(config_digest="x", rows=[EvalRow(0, 1.0, 3.0, 0.0)])
    assert rec.final_eval_loss == 3.0


# --- end-to-end runs --------------------------------------------------------


def test_run_starts_with_a_step_zero_row_and_evals_on_schedule():
    record = run_training(matreg_config(total_steps=10, warmup_steps=2, eval_every=4))
    assert [row.step for row in record.rows] == [0, 4, 8, 10]
    assert record.rows[0].lr_mat_effective == 0.0
    assert record.outcome == COMPLETED


def test_runs_replay_bit_identically():
    cfg = matreg_config(seed=5)
    a = run_training(cfg).to_csv()
    b = run_training(cfg).to_csv()
    assert a == b


def test_adam_approaches_the_least_squares_optimum():
    cfg = matreg_config(
        hp=HyperParams(lr_mat=0.01),
        total_steps=2000,
        warmup_steps=100,
        batch_size=64,
        eval_every=100,
    )
    record = run_training(cfg)
    assert record.outcome == COMPLETED

    # closed-form optimum on the train split via the normal equations
    task = MatrixRegression(seed=cfg.seed)
    a = task.a_map[: task.num_train]
    c = task.targets[: task.num_train]
    b = task.b_map
    w_best = np.linalg.solve(a.T @ a, np.linalg.solve((b @ b.T).T, (a.T @ c @ b.T).T).T)
    best = task.train_loss({"W": w_best})

    final_train = record.rows[-1].train_loss
    assert final_train <= 2.0 * best
    assert record.final_eval_loss <= 0.1 * record.rows[0].eval_loss


def test_stable_runs_decrease_train_loss_between_evals():
    for token, lr in (("msgd", 0.5), ("adam", 0.01)):
        cfg = matreg_config(
            optimizer=parse_optimizer(token),
            hp=HyperParams(lr_mat=lr),
            total_steps=600,
            warmup_steps=30,
            batch_size=40,
            eval_every=50,
            seed=3,
        )
        record = run_training(cfg)
        losses = [row.train_loss for row in record.rows]
        assert all(b < a for a, b in zip(losses, losses[1:])), token


def test_divergence_is_recorded_not_raised():
    record = run_training(matreg_config(hp=HyperParams(lr_mat=1e6), seed=0))
    assert record.outcome == DIVERGED
    assert not record.completed
    assert record.diverged_step is not None and record.diverged_step >= 1
    assert record.rows[-1].step == record.diverged_step
    assert "# outcome=diverged" in record.to_csv()


def test_adam_run_matches_a_from_scratch_reimplementation():
    cfg = matreg_config(seed=2, total_steps=90, warmup_steps=9, eval_every=30)
    record = run_training(cfg)

    task = MatrixRegression(seed=2)
    init_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([2, 1])))
    batch_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([2, 2])))
    w = task.init_params(init_rng)["W"]
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    hp = cfg.hp
    rows = [(0, task.train_loss({"W": w}), task.eval_loss({"W": w}), 0.0)]
    bs = min(cfg.batch_size, task.num_train)
    perm = batch_rng.permutation(task.num_train)
    pos = 0
    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.warmup_steps:
            lr = hp.lr_mat * step / cfg.warmup_steps
        else:
            frac = (step - cfg.warmup_steps) / (cfg.total_steps - cfg.warmup_steps)
            lr = hp.lr_mat * (0.1 + 0.45 * (1.0 + np.cos(np.pi * frac)))
        lr = float(lr)
        if pos + bs > task.num_train:
            perm = batch_rng.permutation(task.num_train)
            pos = 0
        indices = perm[pos:pos + bs]
        pos += bs
        _, grads = task.loss_and_grads({"W": w}, indices)
        g = grads["W"]
        m = hp.beta1 * m + (1.0 - hp.beta1) * g
        v = hp.beta2 * v + (1.0 - hp.beta2) * (g * g)
        w = w - lr * (m / (np.sqrt(v) + hp.eps))
        if step % cfg.eval_every == 0 or step == cfg.total_steps:
            rows.append((step, task.train_loss({"W": w}), task.eval_loss({"W": w}), lr))

    assert len(record.rows) == len(rows)
    for got, want in zip(record.rows, rows):
        assert got.step == want[0]
        assert got.train_loss == want[1]
        assert got.eval_loss == want[2]
        assert got.lr_mat_effective == want[3]
