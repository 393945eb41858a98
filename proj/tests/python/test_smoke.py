import json
import math

import pytest

import v2x


def test_rc0():
    assert [v2x.rc0_of(g) for g in (20, 50, 100)] == [50, 20, 10]
    assert v2x.rc0_of(7) == 50


def test_random_episode_is_deterministic():
    runs = []
    for _ in range(2):
        env = v2x.Env(n_vehicles=6, horizon_slots=800)
        runs.append(v2x.run_random_episode(env, seed=3, policy_seed=4))
    assert runs[0] == runs[1]
    assert runs[0]["slots"] == 800
    assert -1.0 <= runs[0]["mean_reward"] <= 0.0
    assert runs[0]["avg_aoi_slots"] > 0.0


def test_manual_stepping_and_python_policy():
    env = v2x.Env(n_vehicles=4, horizon_slots=300, access="OMA", radio="LTE")
    waiting = env.reset(1)
    assert sorted(waiting) == [0, 1, 2, 3]
    for i in waiting:
        state = env.observe(i)
        assert len(state) == 4
        env.apply_action(i, 20, 0.05)
    assert env.energy_total() == pytest.approx(4 * 0.05 * 1e-3 * 50)
    while not env.done:
        for i in env.step():
            env.close_epoch(i)
            env.apply_action(i, 100, 0.01)
    assert env.slot == 300

    seen = []

    def policy(vehicle, state, epoch):
        seen.append(vehicle)
        return 50, 0.02

    out = v2x.run_episode(v2x.Env(n_vehicles=3, horizon_slots=400), 2, policy)
    assert out["n_transitions"] >= 3
    assert set(seen) == {0, 1, 2}
    with pytest.raises(ValueError):
        v2x.Env(n_vehicles=3).apply_action(0, 33, 0.1)


def test_agent_train_and_checkpoint(tmp_path):
    env = v2x.Env(n_vehicles=6, horizon_slots=2000)
    agent = v2x.Agent(env.p_max_w, hidden=16, batch_size=8, buffer_capacity=64, seed=2)
    rewards = agent.train(env, 3, 5)
    assert len(rewards) == 3
    assert agent.train_steps > 0
    rri, power = agent.act((0.2, 0.3, 0.9, 0.0))
    assert rri in (20, 50, 100)
    assert 0.0 <= power <= env.p_max_w
    path = str(tmp_path / "agent.json")
    agent.save(path)
    back = v2x.Agent.load(path)
    assert back.act((0.2, 0.3, 0.9, 0.0)) == (rri, power)
    report = back.evaluate(env, 1, 9)
    assert math.isfinite(report["objective"])


def test_config_run_and_summarize(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"agent": {"batch_size": 0}, "typo": 1}))
    issues = v2x.validate_config(str(bad))
    assert any("$.typo" in s for s in issues)
    with pytest.raises(v2x.ConfigError):
        v2x.canonical_config(str(bad))

    good = tmp_path / "good.json"
    good.write_text(json.dumps({
        "scenario": {"horizon_slots": 300},
        "env": {"eval_episodes": 1},
        "sweep": {"n_vehicles": [3], "access": ["OMA", "NOMA"]},
        "seeds": [1, 2],
    }))
    assert v2x.validate_config(str(good)) == []
    out = v2x.run(str(good), out=str(tmp_path / "run"), jobs=2)
    assert out["n_failed"] == 0
    assert len(out["records"]) == 4
    rows = v2x.summarize(str(tmp_path / "run"))
    assert [r["n_seeds"] for r in rows] == [2, 2]
    assert (tmp_path / "run" / "summary.csv").exists()
