import json

import numpy as np
import pytest
from absl import app

import run_stc
import trajectory_utils
from certificates.bank import load_bank, save_bank


@pytest.fixture
def example1_out(tmp_path, example1_bank):
    save_bank(example1_bank, str(tmp_path / "bank.json"))
    return tmp_path


def test_surface(example1_config, tmp_path):
    assert run_stc.run_command("surface", example1_config, out=str(tmp_path)) == 0
    lines = (tmp_path / "surface.csv").read_text().splitlines()
    assert lines[0] == "gamma,lambda,t_max"
    assert len(lines) == 41 * 41 + 1
    gamma, lambda_cap, t_max = map(float, lines[1].split(","))
    assert gamma == pytest.approx(0.1) and lambda_cap == pytest.approx(0.1)
    assert t_max > 0.0


def test_certify(example1_config, tmp_path, capsys):
    example1_config.verify_samples = 2000
    assert run_stc.run_command("certify", example1_config, out=str(tmp_path)) == 0
    bank = load_bank(str(tmp_path / "bank.json"))
    assert bank.is_global
    assert capsys.readouterr().out.startswith("c,n_sets,eps_1,gamma_1,l_gain_1,fallback\ninf,")


def test_simulate_zero_horizon(example1_config, example1_out):
    example1_config.horizon = 0.0
    assert run_stc.run_command("simulate", example1_config, out=str(example1_out)) == 0
    summary = json.loads((example1_out / "summary.json").read_text())
    assert summary["num_events"] == 1
    header = (example1_out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,j,x1,x2,V,interval,event_flag,level,fallback_flag"


def test_empty_epsilon_grid(example1_config, tmp_path):
    example1_config.n_par = 0
    assert run_stc.run_command("certify", example1_config, out=str(tmp_path)) == run_stc.EXIT_USAGE


def test_infeasible(example1_config, tmp_path):
    example1_config.epsilon_min = 10.0
    example1_config.epsilon_max = 10.0
    example1_config.n_par = 1
    code = run_stc.run_command("certify", example1_config, out=str(tmp_path))
    assert code == run_stc.EXIT_INFEASIBLE


def test_missing_bank(example1_config, tmp_path):
    code = run_stc.run_command(
        "simulate", example1_config, out=str(tmp_path), bank=str(tmp_path / "missing.json")
    )
    assert code == run_stc.EXIT_USAGE


def test_out_of_region(example2_config, example2_small_bank, tmp_path):
    save_bank(example2_small_bank, str(tmp_path / "bank.json"))
    example2_config.n_levels = 5
    example2_config.x0 = (6.0, 0.0)
    code = run_stc.run_command("simulate", example2_config, out=str(tmp_path))
    assert code == run_stc.EXIT_OUT_OF_REGION


def test_unknown_command(example1_config, tmp_path):
    with pytest.raises(app.UsageError):
        run_stc.run_command("train", example1_config, out=str(tmp_path))


def test_empty_bench(example1_config, tmp_path):
    example1_config.bench_mechanisms = ()
    example1_config.baseline = "none"
    assert run_stc.run_command("bench", example1_config, out=str(tmp_path)) == 0
    assert (tmp_path / "bench.csv").read_text() == ",".join(trajectory_utils.BENCH_COLUMNS) + "\n"


def test_bench_is_deterministic(example1_config, example1_bank, tmp_path):
    example1_config.horizon = 1.0
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        out.mkdir()
        save_bank(example1_bank, str(out / "bank.json"))
        assert run_stc.run_command("bench", example1_config, out=str(out)) == 0
        outputs.append(out)
    for path in ("bench.csv", "bench.txt", "fir/trajectory.csv", "periodic/summary.json"):
        assert (outputs[0] / path).read_bytes() == (outputs[1] / path).read_bytes()
    rows = (outputs[0] / "bench.csv").read_text().splitlines()
    assert [row.split(",")[0] for row in rows[1:]] == ["fir", "iir", "ref", "periodic"]


class TestTables:
    ROW = {
        "mechanism": "iir",
        "num_events": 80,
        "mean_interval": 0.1875,
        "min_interval": 0.05,
        "max_interval": 0.4,
        "final_V": 0.5,
        "checks_passed": True,
    }

    def test_example2_footer(self):
        text = trajectory_utils.bench_text([self.ROW], "example2")
        assert text.splitlines()[-1] == "tiberi,12907 (external, not reproduced)"
        assert trajectory_utils.bench_csv([self.ROW], "example2").endswith(
            "# tiberi,12907 (external, not reproduced)\n"
        )

    def test_no_footer_elsewhere(self):
        assert "tiberi" not in trajectory_utils.bench_text([self.ROW], "example1")
        assert "tiberi" not in trajectory_utils.bench_text([], "example2")

    def test_csv_row(self):
        lines = trajectory_utils.bench_csv([self.ROW]).splitlines()
        assert lines[1] == "iir,80,0.1875,0.05,0.4,0.5,yes"


def test_export_keeps_jump_samples(short_example1_run):
    rows = trajectory_utils.export_rows(short_example1_run, stride=10_000)
    jumps = np.flatnonzero(np.diff(short_example1_run.j) == 1) + 1
    assert set(jumps) <= set(rows)
    assert rows[0] == 0 and rows[-1] == short_example1_run.t.size - 1
    table = trajectory_utils.trajectory_table(short_example1_run, stride=10_000)
    assert table.shape == (rows.size, 2 + 2 + 5)
    assert table[:, 5 + 1].sum() == short_example1_run.num_events
