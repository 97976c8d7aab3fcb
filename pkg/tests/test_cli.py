import csv

import numpy as np
import pytest

from ptreg.cli import parse_arch, run
from ptreg.cpmap import choi
from ptreg.formats import (parse_dataset, parse_matrix, parse_model, parse_stinespring, read_text,
                           render_matrix, render_model, write_text)
from ptreg.model import StackedModel
from ptreg.cpmap import KrausLayer


def _run(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_example(capsys):
    code, out, _ = _run(capsys, "bound", "--p", 1, "--q", 1, "--rank", 1, "--l", 100,
                        "--gamma", 1, "--delta", 0.05)
    assert code == 0
    gap = float(out.split("generalization_gap")[1].split()[0])
    assert gap == pytest.approx(0.4990, abs=1e-4)
    assert "natural-log" in out


def test_bound_vacuous_is_usage_error(capsys):
    code, _, err = _run(capsys, "bound", "--p", 2, "--q", 2, "--rank", 2, "--l", 8)
    assert code == 1 and "vacuous" in err


def test_usage_errors(capsys):
    assert _run(capsys, "nonsense")[0] == 1
    assert _run(capsys, "fit", "--data", "x")[0] == 1
    assert _run(capsys)[0] == 1


def test_missing_file_exit_code(tmp_path, capsys):
    assert _run(capsys, "eval", "--model", tmp_path / "no.json", "--data", tmp_path / "no.txt")[0] == 1


def test_parse_arch():
    assert parse_arch("3:2,2:1") == [(3, 2), (2, 1)]
    with pytest.raises(Exception):
        parse_arch("3-2")


def test_simulate_fit_eval_recovery(tmp_path, capsys):
    data, model, log = tmp_path / "d.txt", tmp_path / "m.json", tmp_path / "log.csv"
    assert _run(capsys, "simulate", "--p", 4, "--q", 3, "--rank", 2, "--n", 200, "--sigma", 0,
                "--seed", 1, "--map-seed", 0, "--out", data)[0] == 0
    code, out, _ = _run(capsys, "fit", "--data", data, "--arch", "3:2", "--lr", 1e-2,
                        "--epochs", 150, "--seed", 3, "--out", model, "--log", log)
    assert code == 0
    final = float(out.split()[-1])
    code, out, _ = _run(capsys, "eval", "--model", model, "--data", data)
    assert code == 0
    mse = float(out)
    assert mse <= 1e-3
    assert abs(mse - final) <= 1e-12
    rows = list(csv.reader(open(log)))
    assert rows[0] == ["epoch", "train_mse"] and len(rows) == 151


def test_fit_is_deterministic(tmp_path, capsys):
    data = tmp_path / "d.txt"
    _run(capsys, "simulate", "--p", 3, "--q", 2, "--rank", 1, "--n", 30, "--seed", 4, "--out", data)
    outs = []
    for k in range(2):
        out = tmp_path / f"m{k}.json"
        assert _run(capsys, "fit", "--data", data, "--arch", "2:1", "--epochs", 5,
                    "--seed", 9, "--out", out)[0] == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_is_deterministic_and_env_seed(tmp_path, capsys, monkeypatch):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    _run(capsys, "simulate", "--p", 2, "--q", 2, "--rank", 1, "--n", 5, "--seed", 8, "--out", a)
    monkeypatch.setenv("PTR_SEED", "8")
    _run(capsys, "simulate", "--p", 2, "--q", 2, "--rank", 1, "--n", 5, "--out", b)
    _run(capsys, "simulate", "--p", 2, "--q", 2, "--rank", 1, "--n", 5, "--seed", 9, "--out", c)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_simulate_writes_true_model(tmp_path, capsys):
    data, true = tmp_path / "d", tmp_path / "t.json"
    _run(capsys, "simulate", "--p", 3, "--q", 2, "--rank", 2, "--n", 4, "--seed", 0,
         "--out", data, "--true-model", true)
    code, out, _ = _run(capsys, "eval", "--model", true, "--data", data)
    assert code == 0 and float(out) <= 1e-28


def test_predict(tmp_path, capsys):
    data, true, pred = tmp_path / "d", tmp_path / "t.json", tmp_path / "p"
    _run(capsys, "simulate", "--p", 3, "--q", 2, "--rank", 2, "--n", 4, "--seed", 0,
         "--out", data, "--true-model", true)
    assert _run(capsys, "predict", "--model", true, "--data", data, "--out", pred)[0] == 0
    np.testing.assert_allclose(parse_dataset(read_text(pred)).Y, parse_dataset(read_text(data)).Y,
                               atol=1e-14)


def test_convert_identity_to_choi(tmp_path, capsys):
    model, out = tmp_path / "id.json", tmp_path / "c.txt"
    write_text(model, render_model(StackedModel((KrausLayer(np.eye(2)[None]),))))
    assert _run(capsys, "convert", "--model", model, "--to", "choi", "--out", out)[0] == 0
    hand = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            hand[2 * i + i, 2 * j + j] = 1.0  # block (i, j) = E_ij
    np.testing.assert_array_equal(parse_matrix(read_text(out)), hand)


def test_convert_stinespring_and_back_to_kraus(tmp_path, capsys, rng):
    from .conftest import random_layer
    layer = random_layer(rng, 3, 2, 2)
    model, sf, ch, kr = (tmp_path / n for n in ("m.json", "s.json", "c.txt", "k.json"))
    write_text(model, render_model(StackedModel((layer,))))
    assert _run(capsys, "convert", "--model", model, "--to", "stinespring", "--out", sf)[0] == 0
    assert parse_stinespring(read_text(sf)).A.shape == (4, 3)
    _run(capsys, "convert", "--model", model, "--to", "choi", "--out", ch)
    assert _run(capsys, "convert", "--matrix", ch, "--p", 3, "--q", 2, "--to", "kraus",
                "--out", kr)[0] == 0
    back = parse_model(read_text(kr)).layers[0]
    np.testing.assert_allclose(choi(back).mat, choi(layer).mat, atol=1e-10)


def test_convert_non_cp_exits_2(tmp_path, capsys):
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * i + j, 2 * j + i] = 1.0  # Choi of the transpose map
    path = tmp_path / "t.txt"
    write_text(path, render_matrix(swap))
    code, _, err = _run(capsys, "convert", "--matrix", path, "--p", 2, "--q", 2,
                        "--to", "kraus", "--out", tmp_path / "k.json")
    assert code == 2 and err


def test_gradcheck(capsys):
    code, out, _ = _run(capsys, "gradcheck", "--p", 3, "--q", 2, "--rank", 2, "--seed", 0,
                        "--trials", 2)
    assert code == 0 and float(out.split()[-1]) <= 1e-5


def test_complete_block_mask(tmp_path, capsys):
    from ptreg.complete import BlockLayout, block_mask, completion_error
    from ptreg.datagen import planted_choi_target
    C = planted_choi_target(3, 2, 2, seed=1)
    mask = block_mask(BlockLayout(3, 2), [(0, 2)])
    src, out = tmp_path / "obs.txt", tmp_path / "hat.txt"
    write_text(src, render_matrix(np.where(mask.observed, C, np.nan)))
    code, text, _ = _run(capsys, "complete", "--matrix", src, "--p", 3, "--q", 2, "--rank", 2,
                         "--epochs", 400, "--lr", 1e-2, "--seed", 0, "--out", out)
    assert code == 0
    assert "fully missing block (1,3)" in text
    M_hat = parse_matrix(read_text(out))
    assert np.linalg.eigvalsh(M_hat).min() >= -1e-8
    assert completion_error(C, M_hat, mask) <= 1e-3


def test_complete_needs_layout(tmp_path, capsys):
    src = tmp_path / "m.txt"
    write_text(src, render_matrix(np.eye(4)))
    assert _run(capsys, "complete", "--matrix", src, "--out", tmp_path / "o")[0] == 1
    assert _run(capsys, "complete", "--matrix", src, "--p", 3, "--q", 2, "--rank", 1,
                "--out", tmp_path / "o")[0] == 1


def test_complete_grid(tmp_path, capsys):
    src = tmp_path / "m.txt"
    write_text(src, render_matrix(np.eye(4)))
    code, out, _ = _run(capsys, "complete", "--matrix", src, "--grid", "--ranks", "1,2",
                        "--epochs", 5, "--seed", 0, "--out", tmp_path / "o")
    assert code == 0
    assert out.startswith("p,q,rank,holdout_mse") and "selected" in out


def test_baseline_csv(tmp_path, capsys):
    train_p, test_p, out = tmp_path / "a", tmp_path / "b", tmp_path / "r.csv"
    _run(capsys, "simulate", "--p", 3, "--q", 2, "--rank", 1, "--n", 40, "--seed", 1,
         "--map-seed", 0, "--out", train_p)
    _run(capsys, "simulate", "--p", 3, "--q", 2, "--rank", 1, "--n", 10, "--seed", 2,
         "--map-seed", 0, "--out", test_p)
    for method in ("mlr", "rrr", "tr"):
        code, _, _ = _run(capsys, "baseline", "--data", train_p, "--test", test_p,
                          "--method", method, "--rank-grid", "1,2", "--epochs", 3,
                          "--seed", 0, "--csv", out)
        assert code == 0
        rows = list(csv.DictReader(open(out)))
        assert rows and all(r["method"] == method for r in rows)
    code, out_text, _ = _run(capsys, "baseline", "--data", train_p, "--method", "mlr")
    assert code == 0 and out_text.startswith("method,rank,train_mse,test_mse")
