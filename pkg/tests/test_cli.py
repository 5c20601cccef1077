import json

import pytest

from menuplan.cli import main

MENU = {
    "items": ["cat", "dog", "---", "carrot", "potato"],
    "categories": [["cat", "dog"], ["carrot", "potato"]],
}


@pytest.fixture
def menu_file(tmp_path):
    path = tmp_path / "menu.json"
    path.write_text(json.dumps(MENU))
    return path


@pytest.fixture
def history_file(tmp_path):
    path = tmp_path / "history.json"
    path.write_text(json.dumps({"clicks": ["carrot", "carrot", "dog", "carrot"]}))
    return path


def test_plan_outputs_deterministic_json(menu_file, history_file, tmp_path):
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    argv = [
        "plan", "--menu", str(menu_file), "--history", str(history_file),
        "--iterations", "50", "--horizon", "2", "--seed", "5",
    ]
    assert main(argv + ["--out", str(out_a)]) == 0
    assert main(argv + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    payload = json.loads(out_a.read_text())
    assert set(payload) >= {"chosen", "predicted_reward", "iterations", "root_visits"}
    assert payload["iterations"] == 50


def test_plan_respects_param_overrides(menu_file, capsys):
    assert main([
        "plan", "--menu", str(menu_file), "--iterations", "10",
        "--horizon", "1", "--delta", "2.0", "--seed", "1",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["root_visits"] == 10


def test_eval_writes_results(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main([
        "eval", "--sizes", "4", "--designs", "1", "--histories", "2",
        "--history-clicks", "20", "--iterations", "30", "--horizon", "2",
        "--seed", "2", "--out-dir", str(out_dir),
    ])
    assert code == 0
    assert (out_dir / "trials.csv").exists()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["n_trials"] == 2
    assert "success_rate" in capsys.readouterr().out


def test_baseline_command(tmp_path, capsys):
    out_dir = tmp_path / "base"
    code = main([
        "baseline", "--policy", "frequency", "--sizes", "4", "--designs", "1",
        "--histories", "1", "--history-clicks", "16", "--out-dir", str(out_dir),
    ])
    assert code == 0
    assert "policy=frequency" in capsys.readouterr().out


def test_gen_data_and_train_round_trip(tmp_path, capsys):
    data = tmp_path / "data.bin"
    assert main([
        "gen-data", "--count", "24", "--seed", "4", "--out", str(data),
        "--sizes", "3,4", "--history-clicks", "12", "--horizon", "2",
        "--session-length", "4",
    ]) == 0
    data_b = tmp_path / "data2.bin"
    assert main([
        "gen-data", "--count", "24", "--seed", "4", "--out", str(data_b),
        "--sizes", "3,4", "--history-clicks", "12", "--horizon", "2",
        "--session-length", "4",
    ]) == 0
    assert data.read_bytes() == data_b.read_bytes()

    model = tmp_path / "model.bin"
    assert main([
        "train", "--dataset", str(data), "--out", str(model),
        "--epochs", "3", "--batch-size", "8", "--seed", "0",
    ]) == 0
    assert model.exists()
    assert "trained" in capsys.readouterr().out


def test_ab_command(tmp_path, capsys):
    out = tmp_path / "ab.json"
    assert main([
        "ab", "--sizes", "4", "--designs", "1", "--histories", "1",
        "--history-clicks", "16", "--iterations", "20", "--horizon", "2",
        "--blocks", "1", "--out", str(out),
    ]) == 0
    assert "mcts_beats_static" in capsys.readouterr().out
    assert out.exists()
