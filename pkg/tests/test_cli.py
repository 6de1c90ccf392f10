import csv
import json
import re
import subprocess
import sys

import numpy as np
import pytest

from aucmonitor.cli import MONITOR_HEADER, main

HEADER_LINE = "window,raw,raw95CI_up,raw95CI_low,filtered,filtered95CI_up,filtered95CI_low,m,n,gain,upper_bound,skipped"


def write_log(path, rows, header="timestamp,score,label"):
    path.write_text(header + "\n" + "".join(f"{d},{s!r},{lab}\n" for d, s, lab in rows))
    return path


def monthly_rows(months, seed=0, skip=(), pos_only=()):
    rng = np.random.default_rng(seed)
    rows = []
    for year, month in months:
        day = f"{year:04d}-{month:02d}-15"
        if (year, month) in skip:
            continue
        n_pos = int(rng.integers(8, 40))
        n_neg = 0 if (year, month) in pos_only else int(rng.integers(150, 400))
        rows += [(day, float(1 / (1 + np.exp(-v))), 1) for v in rng.normal(2.0, 1, n_pos)]
        rows += [(day, float(1 / (1 + np.exp(-v))), 0) for v in rng.normal(0.0, 1, n_neg)]
    return rows


MONTHS = [(y, m) for y in (2021, 2022) for m in range(1, 13)]


def read_csv(path):
    with open(path, newline="") as fp:
        return list(csv.reader(fp))


# ---------------------------------------------------------------------------
# auc
# ---------------------------------------------------------------------------

def test_auc_hand_example(tmp_path, capsys):
    p = write_log(tmp_path / "a.csv", [("2021-01-01", 0.8, 1), ("2021-01-01", 0.4, 1),
                                       ("2021-01-01", 0.6, 0), ("2021-01-01", 0.2, 0)])
    assert main(["auc", str(p), "--min-positives", "0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-2] == "theta,variance,ci_low,ci_high,m,n,upper_bound"
    theta, var, lo, hi, m, n, ub = out[-1].split(",")
    assert (theta, var, m, n, ub) == ("0.7500", "1.2500e-01", "2", "2", "false")


def test_auc_perfect_separation(tmp_path, capsys):
    p = write_log(tmp_path / "a.csv", [("2021-01-01", 0.9, 1), ("2021-01-01", 0.8, 1),
                                       ("2021-01-01", 0.2, 0), ("2021-01-01", 0.1, 0)])
    assert main(["auc", str(p), "--min-positives", "0"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "1.0000,0.0000e+00,1.0000,1.0000,2,2,false"


def test_auc_small_variance_keeps_precision(tmp_path, capsys):
    rng = np.random.default_rng(0)
    rows = [("2021-01-01", float(s), 1) for s in rng.uniform(0.5, 1, 500)]
    rows += [("2021-01-01", float(s), 0) for s in rng.uniform(0, 0.6, 5000)]
    p = write_log(tmp_path / "a.csv", rows)
    assert main(["auc", str(p)]) == 0
    var = float(capsys.readouterr().out.splitlines()[-1].split(",")[1])
    assert 0 < var < 1e-4


def test_auc_only_positives_exits_2(tmp_path, capsys):
    p = write_log(tmp_path / "a.csv", [("2021-01-01", 0.9, 1), ("2021-01-01", 0.8, 1)])
    assert main(["auc", str(p)]) == 2
    assert "degenerate batch" in capsys.readouterr().err


def test_missing_file_exits_1(tmp_path):
    assert main(["auc", str(tmp_path / "nope.csv")]) == 1


def test_bad_header_exits_1(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("when,score,label\n")
    assert main(["auc", str(p)]) == 1


# ---------------------------------------------------------------------------
# monitor
# ---------------------------------------------------------------------------

def test_monitor_monthly(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS))
    out = tmp_path / "mon.csv"
    assert main(["monitor", str(log), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == HEADER_LINE
    rows = read_csv(out)[1:]
    assert [r[0] for r in rows] == [f"{y}-{m:02d}" for y, m in MONTHS]
    for r in rows:
        for v in r[1:7] + [r[9]]:
            assert re.fullmatch(r"\d\.\d{4}", v)
        raw, up, low, filt, fup, flow = map(float, r[1:7])
        assert 0 <= low <= raw <= up <= 1 and 0 <= flow <= filt <= fup <= 1
    meta = json.loads((tmp_path / "mon.meta.json").read_text())
    assert meta["config"]["window"] == "monthly" and meta["counts"]["windows"] == 24
    assert meta["counts"]["records"] == len(monthly_rows(MONTHS))


def test_monitor_skipped_window(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:6], pos_only={(2021, 3)}, skip={(2021, 5)}))
    out = tmp_path / "mon.csv"
    assert main(["monitor", str(log), "--out", str(out)]) == 0
    rows = {r[0]: r for r in read_csv(out)[1:]}
    for month in ("2021-03", "2021-05"):
        r = rows[month]
        assert r[11] == "true" and r[1] == ""
    assert rows["2021-03"][4] == rows["2021-02"][4]
    assert rows["2021-05"][4] == rows["2021-04"][4]
    assert rows["2021-05"][7:9] == ["0", "0"]


def test_monitor_deterministic(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["monitor", str(log), "--out", str(a)])
    main(["monitor", str(log), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_monitor_count_window_and_baseline(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:4]))
    base = write_log(tmp_path / "base.csv", monthly_rows([(2020, 6)], seed=9))
    out = tmp_path / "mon.csv"
    assert main(["monitor", str(log), "--window", "count:200", "--baseline", str(base), "--out", str(out)]) == 0
    rows = read_csv(out)[1:]
    assert rows[0][0] == "0"
    # with a baseline the first window is filtered, not copied
    assert rows[0][1] != rows[0][4]


def test_monitor_snapshot_resume(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:3]))
    log2 = write_log(tmp_path / "log2.csv", monthly_rows(MONTHS[3:6], seed=1))
    snap = tmp_path / "state.txt"
    assert main(["monitor", str(log), "--out", str(tmp_path / "a.csv"), "--snapshot", str(snap)]) == 0
    keys = [line.split("=")[0] for line in snap.read_text().splitlines()]
    assert keys == ["theta", "s10", "s01", "p", "step_count"]
    assert main(["monitor", str(log2), "--out", str(tmp_path / "b.csv"), "--resume", str(snap)]) == 0
    assert read_csv(tmp_path / "b.csv")[1][9] != "1.0000"


def test_monitor_no_usable_windows(tmp_path):
    log = write_log(tmp_path / "log.csv", [("2021-01-01", 0.9, 1), ("2021-02-01", 0.8, 1)])
    assert main(["monitor", str(log), "--out", str(tmp_path / "m.csv")]) == 2
    assert not (tmp_path / "m.csv").exists()


def test_config_precedence(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:3]))
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[aucmonitor]\nwindow = count:100\nmin_positives = 3\nout = {tmp_path / 'cfg.csv'}\n")
    assert main(["monitor", str(log), "--config", str(cfg)]) == 0
    meta = json.loads((tmp_path / "cfg.meta.json").read_text())
    assert meta["config"]["window"] == "count:100" and meta["config"]["min_positives"] == 3
    assert main(["monitor", str(log), "--config", str(cfg), "--window", "monthly", "--min-positives", "5"]) == 0
    meta = json.loads((tmp_path / "cfg.meta.json").read_text())
    assert meta["config"]["window"] == "monthly" and meta["config"]["min_positives"] == 5


@pytest.mark.parametrize(
    "extra", [["--window", "weekly"], ["--window", "count:1"], ["--min-positives", "-1"]]
)
def test_bad_flags_exit_1(tmp_path, extra):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:2]))
    assert main(["monitor", str(log), "--out", str(tmp_path / "m.csv"), *extra]) == 1


def test_bad_config_key(tmp_path):
    log = write_log(tmp_path / "log.csv", monthly_rows(MONTHS[:2]))
    cfg = tmp_path / "run.ini"
    cfg.write_text("[aucmonitor]\ncolour = blue\n")
    assert main(["monitor", str(log), "--config", str(cfg)]) == 1


# ---------------------------------------------------------------------------
# simulate / replay
# ---------------------------------------------------------------------------

def test_simulate_paper_default(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--paper-default", "--seed", "3", "--out", str(out)]) == 0
    truth = read_csv(out / "truth.csv")
    assert truth[0] == ["step", "true_auc", "m", "n"]
    assert len(truth) == 61
    assert all(int(r[2]) + int(r[3]) == 400 for r in truth[21:41])
    log = read_csv(out / "predictions.csv")
    assert log[0] == ["timestamp", "score", "label"]
    days = sorted({r[0] for r in log[1:]})
    assert len(days) == 60 and days[0] == "2000-01-01"
    meta = json.loads((out / "simulate.meta.json").read_text())
    assert meta["phase_bounds"] == [[0, 20], [20, 40], [40, 60]] and meta["config"]["seed"] == 3


def test_simulate_requires_one_source(tmp_path):
    assert main(["simulate", "--out", str(tmp_path)]) == 1


def test_simulate_scenario_file(tmp_path):
    sc = tmp_path / "s.ini"
    sc.write_text("[scenario]\nseed = 4\n\n[phase 1]\nsteps = 3\ntotal_samples = 100 -> 200\n"
                  "positive_ratio = 0.2\ntrue_auc = 0.8 -> 0.7\n")
    assert main(["simulate", str(sc), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "simulate.meta.json").read_text())["config"]["seed"] == 4
    truth = read_csv(tmp_path / "o" / "truth.csv")
    assert [int(r[2]) + int(r[3]) for r in truth[1:]] == [100, 150, 200]


def test_simulate_invalid_scenario(tmp_path, capsys):
    sc = tmp_path / "s.ini"
    sc.write_text("[phase 1]\nsteps = 3\n")
    assert main(["simulate", str(sc), "--out", str(tmp_path / "o")]) == 1
    assert "missing" in capsys.readouterr().err


def test_replay(tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--paper-default", "--out", str(sim)])
    capsys.readouterr()
    assert main(["replay", str(sim), "--out", str(tmp_path / "r")]) == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert [p["steps"] for p in summary["phases"]] == [[0, 19], [20, 39], [40, 59]]
    for ph in summary["phases"][:2]:
        assert ph["mae_filtered"] < ph["mae_raw"]
    rows = read_csv(tmp_path / "r" / "monitor.csv")
    assert rows[0] == MONITOR_HEADER and len(rows) == 61
    assert "phase 1" in capsys.readouterr().out


def test_replay_phase3_moves_toward_truth(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--paper-default", "--out", str(sim)])
    main(["replay", str(sim), "--update-rule", "window", "--out", str(tmp_path / "r")])
    filt = [float(r[4]) for r in read_csv(tmp_path / "r" / "monitor.csv")[1:]]
    thirds = [np.mean(filt[a:b]) for a, b in ((41, 47), (47, 53), (53, 60))]
    assert thirds[0] > thirds[1] > thirds[2]


def test_replay_empty_truth(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--paper-default", "--out", str(sim)])
    (sim / "truth.csv").write_text("step,true_auc,m,n\n")
    out = tmp_path / "r"
    assert main(["replay", str(sim), "--out", str(out)]) == 2
    assert not out.exists()


def test_replay_step_mismatch(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--paper-default", "--out", str(sim)])
    lines = (sim / "truth.csv").read_text().splitlines()
    (sim / "truth.csv").write_text("\n".join(lines[:-1]) + "\n")
    assert main(["replay", str(sim), "--out", str(tmp_path / "r")]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "aucmonitor", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "kernels" in out.stdout
