import io
import math
import subprocess
import sys

import pytest

from oligosim.cli import run
from oligosim.dynamics import read_trajectory_csv
from oligosim.figures import FIGURES, figure, read_figure_csv
from oligosim.pricing import read_trace_csv
from oligosim.regulation import read_sweep_csv

CONFIG = """\
N: 1000
I: 3
W: 500
U0: 0.0
prices: [1, 1, 1]
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "market.yaml"
    p.write_text(CONFIG)
    return str(p)


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_stationary_report(cfg):
    code, text = call("stationary", "--config", cfg)
    assert code == 0
    assert text.startswith("case A:") and "x0=0.44818" in text


def test_set_overrides_file(cfg):
    code, text = call("stationary", "--config", cfg, "--set", "prices=[2, 2, 2]",
                      "--set", "W=20085.536923187668")
    assert code == 0 and text.startswith("case B:")


def test_config_errors_name_key(cfg, capsys):
    assert call("stationary", "--config", cfg, "--set", "W=-3")[0] == 2
    assert "W" in capsys.readouterr().err
    assert call("stationary", "--config", cfg, "--set", "bogus=1")[0] == 2
    assert "bogus" in capsys.readouterr().err
    assert call("stationary", "--config", cfg, "--set", "prices=[1, 1]")[0] == 2
    assert "prices" in capsys.readouterr().err
    assert call("stationary", "--config", "/nonexistent.yaml")[0] == 2


def test_numerical_error_exit_code(cfg, capsys):
    code, _ = call("simulate", "--config", cfg, "--set", "dt=80")
    assert code == 3
    assert "StepSizeError" in capsys.readouterr().err
    code, _ = call("sweep", "--config", cfg, "--set", "parameter=W", "--set", "target=1e6",
                   "--set", "bracket=[100, 200]")
    assert code == 3


def test_simulate_writes_trajectory(cfg, tmp_path):
    out = tmp_path / "traj.csv"
    code, text = call("simulate", "--config", cfg, "--out", str(out), "--set", "record_every=500")
    assert code == 0 and "settled=True" in text
    traj = read_trajectory_csv(out)
    assert traj.x[-1][-1] == pytest.approx(1 - 1.5 / math.e, abs=1e-5)


def test_simulate_seed_is_reproducible(cfg):
    a = call("simulate", "--config", cfg, "--seed", "7", "--set", "t_max=2")[1]
    b = call("simulate", "--config", cfg, "--seed", "7", "--set", "t_max=2")[1]
    c = call("simulate", "--config", cfg, "--seed", "8", "--set", "t_max=2")[1]
    assert a == b and a != c


def test_best_response_command(tmp_path):
    p = tmp_path / "m.yaml"
    p.write_text(f"N: 1000\nI: 2\nW: {1000 * math.e}\nprices: [1.1, 1.1]\noperator: 2\n")
    code, text = call("best-response", "--config", str(p))
    assert code == 0 and "branch=InteriorB" in text and "price=1.604" in text


def test_equilibrium_trace(tmp_path):
    p = tmp_path / "m.yaml"
    e3 = math.exp(3)
    start = math.log(2 * e3)
    p.write_text(f"N: 1000\nI: 2\nW: {1000 * e3}\ninitial_prices: [{start}, {start}]\n")
    out = tmp_path / "trace.csv"
    code, text = call("equilibrium", "--config", str(p), "--out", str(out))
    assert code == 0 and "converged=True" in text
    trace = read_trace_csv(out)
    assert trace[-1].new_price == pytest.approx(2.0, abs=1e-6)
    code, text = call("equilibrium", "--config", str(p), "--set", "mode=symmetric")
    assert code == 0 and "interval=A3" in text


def test_sweep_and_find(cfg, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _ = call("sweep", "--config", cfg, "--out", str(out), "--set", "parameter=alpha",
                   "--set", "grid={start: 0.1, stop: 3, num: 30}")
    assert code == 0 and len(read_sweep_csv(out)) == 30
    code, text = call("sweep", "--config", cfg, "--set", "parameter=W", "--set", "U0=0.1",
                      "--set", "target=1500", "--set", "bracket=[1000, 3000]")
    fields = dict(kv.split("=") for kv in text.split())
    assert code == 0 and float(fields["R_total"]) == pytest.approx(1500, abs=2e-6)
    assert float(fields["W"]) == pytest.approx(math.exp(1.5) / 3 * 1000 * math.exp(0.1), abs=1e-3)


@pytest.mark.parametrize("name", FIGURES)
def test_figure_csv_roundtrip(name, tmp_path):
    out = tmp_path / f"{name}.csv"
    assert call("figure", name, "--out", str(out))[0] == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    back = read_figure_csv(out)
    ref = figure(name)
    assert back.header == ref.header and len(back.rows) == len(ref.rows)


def test_figure_fig2_converges():
    data = figure("fig2")
    assert data.rows[-1][3] == pytest.approx(2.0, abs=1e-6)
    assert data.rows[-2][3] == pytest.approx(2.0, abs=1e-6)


def test_figure_fig4_upper_flat_utility():
    data = figure("fig4-upper")
    edge = math.exp(1.5) / 3
    flat = [r for r in data.rows if r[1] < edge]
    assert flat and all(r[5] == 100.0 for r in flat)


def test_figure_fig3_regimes():
    data = figure("fig3")
    for alpha, region, l1, l2, R1, R2, Rsym in data.rows:
        if region == "A1":
            assert R1 == pytest.approx(alpha * 1000 / math.e, rel=1e-9)
        elif region == "A3":
            assert R1 == pytest.approx(1000, rel=1e-6) and R2 == pytest.approx(1000, rel=1e-6)
        else:
            assert abs(alpha * (math.exp(-l1) + math.exp(-l2)) - 1) < 1e-6


def test_figure_fig1_lands_on_boundary():
    data = figure("fig1")
    for lam0, l1, l2, R1, R2, _ in data.rows:
        assert abs(math.e * (math.exp(-l1) + math.exp(-l2)) - 1) < 1e-6
    # the outcome depends on the opening price
    assert max(data.column("R_1")) - min(data.column("R_1")) > 10


def test_figure_unknown(capsys):
    assert call("figure", "fig9")[0] == 2
    assert "figure" in capsys.readouterr().err


def test_figure_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    call("figure", "fig4-upper", "--out", str(a))
    call("figure", "fig4-upper", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point(tmp_path):
    out = tmp_path / "f.csv"
    proc = subprocess.run([sys.executable, "-m", "oligosim.cli", "figure", "fig2", "--out",
                           str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.read_text().startswith("round,operator,old_price,new_price,potential,region\n")
