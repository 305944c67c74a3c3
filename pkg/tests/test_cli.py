import json
import math

import pytest

from forkbound.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bounds_forkjoin_example(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--system", "fork-join", "--k", "8",
                           "--arrival", "exp:0.5", "--task", "exp:1", "--eps", "1e-6")
    assert code == 0
    assert "theta*=" in out
    tau_line = [l for l in out.splitlines() if "tau(1e-06)" in l][0]
    tau = float(tau_line.split("=")[1])
    assert tau == pytest.approx(math.log(16e6) / 0.5, rel=1e-6)


def test_bounds_fixed_theta(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--system", "single-server",
                           "--arrival", "exp:0.5", "--task", "exp:1",
                           "--theta", "0.5", "--eps", "1e-3")
    assert code == 0
    assert "2*exp(-0.5*tau)" in out
    tau = float([l for l in out.splitlines() if "tau(0.001)" in l][0].split("=")[1])
    # printed with 9 significant digits
    assert tau == pytest.approx(math.log(2000.0) / 0.5, rel=1e-8)


def test_bounds_unstable_system_errors(capsys):
    code, _, err = run_cli(capsys, "bounds", "--system", "single-server",
                           "--arrival", "exp:2.0", "--task", "exp:1")
    assert code == 1
    assert "error" in err.lower()


def test_simulate_prints_quantiles(capsys, tmp_path):
    trace = tmp_path / "t.csv"
    code, out, _ = run_cli(capsys, "simulate", "--system", "sq-fork-join", "--k", "2",
                           "--arrival", "exp:0.5", "--task", "exp:1",
                           "--jobs", "20000", "--interval", "10", "--seed", "3",
                           "--eps", "1e-2", "--trace", str(trace))
    assert code == 0
    assert "sojourn:" in out and "waiting:" in out
    assert "ci=[" in out
    assert trace.exists()
    assert trace.read_text().splitlines()[0].startswith("n,A,V_1,V_2")


def test_sweep_and_compare_write_csv(capsys, tmp_path):
    config = {
        "id": "cli-fig3",
        "topology": {"kind": "fork_join", "k": 1,
                     "arrival": {"type": "exponential", "rate": 0.5},
                     "service": {"type": "exponential", "rate": 1.0}},
        "mode": "bound_only",
        "epsilons": [1e-6],
        "sweep": {"parameter": "k", "values": [1, 2, 4]},
        "theta": {"mode": "fixed", "value": 0.5},
        "n_jobs": 1000,
        "seeds": [1],
    }
    cfg = tmp_path / "fig3.json"
    cfg.write_text(json.dumps(config))
    out_csv = tmp_path / "fig3.csv"
    code, out, _ = run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out_csv))
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("scenario_id,system,k,h,lambda,mu,epsilon,theta_star,"
                               "tau_bound,tau_sim,ci_lo,ci_hi,n_samples,seed,alpha,"
                               "beta,expected_bound")
    assert len(lines) == 4

    # compare forces simulation columns
    config["mode"] = "bound_only"
    config["n_jobs"] = 20000
    config["sample_interval"] = 10
    config["epsilons"] = [1e-2]
    cfg.write_text(json.dumps(config))
    out2 = tmp_path / "fig3_cmp.csv"
    code, _, _ = run_cli(capsys, "compare", "--config", str(cfg), "--out", str(out2))
    assert code == 0
    row = out2.read_text().splitlines()[1].split(",")
    assert row[9] != ""  # tau_sim populated


def test_sweep_byte_identical(capsys, tmp_path):
    config = {
        "id": "det", "mode": "compare", "epsilons": [1e-2],
        "topology": {"kind": "single_server",
                     "arrival": {"type": "exponential", "rate": 0.5},
                     "service": {"type": "exponential", "rate": 1.0}},
        "n_jobs": 20000, "sample_interval": 10, "seeds": [1, 2],
    }
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(config))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(a))[0] == 0
    assert run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_malformed_config_exits_2(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{\"id\": \"x\"")
    code, _, err = run_cli(capsys, "sweep", "--config", str(cfg), "--out",
                           str(tmp_path / "o.csv"))
    assert code == 2
    assert "config error" in err
    cfg.write_text(json.dumps({"id": "x", "mode": "compare", "epsilons": [0.1]}))
    code, _, err = run_cli(capsys, "sweep", "--config", str(cfg), "--out",
                           str(tmp_path / "o.csv"))
    assert code == 2
    assert "topology" in err


def test_selftest_passes(capsys):
    code, out, _ = run_cli(capsys, "selftest")
    assert code == 0
    assert "selftest passed" in out
