"""Config parsing (fail-closed) and schedule evaluation."""
import json

import pytest

from fedsim.config import build_task, parse_config, to_dict
from fedsim.errors import ConfigError
from fedsim.schedules import Schedule, schedule_eval, schedule_from_spec


def minimal(**kw):
    raw = {"task": {"kind": "quadratic"}, "optimizer": "adagrad"}
    raw.update(kw)
    return raw


def test_minimal_config_fills_defaults():
    cfg = parse_config(minimal())
    assert cfg.epochs == 1
    assert cfg.clients_per_round == 10
    assert cfg.tau == 1e-3
    assert cfg.rounds == 100


def test_effective_beta1_per_flavor():
    assert parse_config(minimal()).effective_beta1() == 0.0
    assert parse_config(minimal(optimizer="adam")).effective_beta1() == 0.9
    assert parse_config(minimal(optimizer="yogi")).effective_beta1() == 0.9
    assert parse_config(minimal(optimizer="adam", beta1=0.5)).effective_beta1() == 0.5


def test_unknown_key_rejected_with_name():
    with pytest.raises(ConfigError, match="learnig_rate"):
        parse_config(minimal(learnig_rate=0.1))


def test_unknown_task_key_rejected_with_path():
    with pytest.raises(ConfigError, match="task.heterogeneity"):
        parse_config({"task": {"kind": "quadratic", "heterogeneity": 2},
                      "optimizer": "sgd"})


def test_missing_required_keys_listed():
    with pytest.raises(ConfigError) as err:
        parse_config({})
    assert any("task: required" in e for e in err.value.errors)
    assert any("optimizer: required" in e for e in err.value.errors)


def test_constraint_violations_have_field_paths():
    with pytest.raises(ConfigError) as err:
        parse_config(minimal(rounds=-1, clients_per_round=20, total_clients=5))
    msgs = " | ".join(err.value.errors)
    assert "rounds" in msgs and "clients_per_round" in msgs


def test_parse_from_file_and_text(tmp_path):
    raw = minimal(rounds=7)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    assert parse_config(str(path)).rounds == 7
    assert parse_config(json.dumps(raw)).rounds == 7


def test_invalid_json_is_config_error():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{not json")


def test_fingerprint_stable_and_sensitive():
    a = parse_config(minimal())
    b = parse_config(minimal())
    c = parse_config(minimal(client_lr=0.3))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert a.resume_key() == a.with_overrides(rounds=999).resume_key()
    assert a.resume_key() != c.resume_key()


def test_to_dict_round_trips():
    cfg = parse_config(minimal(rounds=3, schedule={"kind": "inv_sqrt"}))
    again = parse_config(to_dict(cfg))
    assert again == cfg


def test_build_task_every_kind():
    for kind in ("quadratic", "sparse_logreg", "mlp2", "linear_ae"):
        cfg = parse_config({"task": {"kind": kind}, "optimizer": "sgd",
                            "total_clients": 3})
        task = build_task(cfg)
        assert task.num_clients == 3
        assert task.dim > 0


def test_build_csv_task(tmp_path):
    path = tmp_path / "pool.csv"
    rows = ["label,f0,f1"] + [f"{i % 2},{i / 10},{(9 - i) / 10}" for i in range(10)]
    path.write_text("\n".join(rows) + "\n")
    cfg = parse_config({
        "task": {"kind": "csv_logreg", "path": str(path),
                 "partitioner": {"kind": "iid", "per_client": 5}},
        "optimizer": "sgd", "total_clients": 2, "batch_size": 2,
    })
    task = build_task(cfg)
    assert task.num_clients == 2
    assert task.client_data(0).n == 5


def test_csv_task_requires_partitioner():
    with pytest.raises(ConfigError, match="task.partitioner"):
        parse_config({"task": {"kind": "csv_logreg", "path": "x.csv"},
                      "optimizer": "sgd"})


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


def test_expdecay_staircase_values():
    sched = Schedule(kind="expdecay", base=2.0, factor=0.1, period=500)
    assert schedule_eval(sched, 499) == 2.0
    assert schedule_eval(sched, 500) == pytest.approx(0.2, rel=1e-15)
    assert schedule_eval(sched, 1000) == pytest.approx(0.02, rel=1e-15)


def test_constant_schedule():
    sched = Schedule(kind="constant", base=0.3)
    assert all(schedule_eval(sched, t) == 0.3 for t in (0, 1, 10_000))


def test_inv_sqrt_schedule():
    sched = Schedule(kind="inv_sqrt", base=1.0, scale=1.0)
    assert schedule_eval(sched, 3) == pytest.approx(0.5, rel=1e-15)


def test_expdecay_nonincreasing_with_exact_drop_count():
    sched = Schedule(kind="expdecay", base=1.0, factor=0.5, period=7)
    values = [schedule_eval(sched, t) for t in range(50)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    drops = sum(1 for a, b in zip(values, values[1:]) if b < a)
    assert drops == (50 - 1) // 7


def test_schedule_validation():
    with pytest.raises(ConfigError):
        Schedule(kind="expdecay", factor=0.0)
    with pytest.raises(ConfigError):
        Schedule(kind="linear")
    with pytest.raises(ConfigError, match="unknown key"):
        schedule_from_spec({"kind": "constant", "rate": 2}, base=1.0)


def test_schedule_spec_builds_with_base():
    sched = schedule_from_spec({"kind": "expdecay", "factor": 0.5, "period": 10},
                               base=0.4)
    assert sched.base == 0.4
    assert schedule_eval(sched, 10) == pytest.approx(0.2, rel=1e-15)
