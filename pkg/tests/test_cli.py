import csv
import io

import numpy as np
import pytest

from fracwave.cli import CSV_COLUMNS, ConfigError, load_config, main, read_snapshot


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_header_columns_exact():
    code, out, _ = run(["run", "N=8", "h_exp=3"])
    assert code == 0
    assert out.splitlines()[0] == "example,method,N,h_exp,error,rate,wall_seconds,max_diff_vs_tss"
    assert tuple(out.splitlines()[0].split(",")) == CSV_COLUMNS


def test_run_both_reports_agreement():
    code, out, _ = run(["run", "example=ex1", "method=both", "N=32", "h_exp=5", "panels=256"])
    assert code == 0
    r = rows(out)
    assert [x["method"] for x in r] == ["tss", "fdac"]
    assert r[0]["max_diff_vs_tss"] == ""
    assert float(r[1]["max_diff_vs_tss"]) <= 1e-10
    assert float(r[0]["error"]) == pytest.approx(float(r[1]["error"]), rel=1e-9)


def test_run_custom_zero_problem():
    code, out, _ = run(["run", "example=custom", "N=16", "h_exp=3", "dim=2"])
    assert code == 0
    assert float(rows(out)[0]["error"]) == 0.0


def test_run_ex3_has_no_error_value():
    code, out, _ = run(["run", "example=ex3", "N=8", "h_exp=3"])
    assert code == 0 and rows(out)[0]["error"] == ""


def test_byte_stable_without_timings():
    argv = ["run", "example=ex1", "method=both", "N=16", "h_exp=4", "panels=128", "timings=false"]
    assert run(argv)[1] == run(argv)[1]
    argv = ["converge", "example=ex1", "levels=3,4", "fixed=4", "panels=128", "timings=false"]
    assert run(argv)[1] == run(argv)[1]


def test_converge_rows_and_rates():
    code, out, _ = run(["converge", "example=ex1", "levels=3:5", "fixed=6", "panels=256"])
    assert code == 0
    r = rows(out)
    assert [x["N"] for x in r] == ["8", "16", "32"]
    assert r[0]["rate"] == "" and 0.5 < float(r[2]["rate"]) < 1.5


def test_converge_degenerate_levels_flagged():
    code, out, _ = run(["converge", "example=ex1", "levels=3,3", "fixed=4", "panels=64"])
    assert code == 0
    r = rows(out)
    assert float(r[1]["rate"]) == 0.0 and "degenerate" in r[1]["method"]


def test_compare_command():
    code, out, err = run(["compare", "example=ex3", "n_exps=2,3,4", "h_exp=2"])
    assert code == 0
    assert "max relative difference" in err
    assert len(rows(out)) == 6


def test_bench_small_prints_slopes():
    code, out, err = run(["bench", "n_exps=4:6", "tss_cutoff=5", "h_exp=2"])
    assert code == 0
    r = rows(out)
    assert sum(x["method"] == "tss" for x in r) == 2
    assert sum(x["method"] == "fdac" for x in r) == 3
    assert "tss: log-log slope" in err and "fdac: log-log slope" in err


def test_snapshots(tmp_path):
    prefix = tmp_path / "snap"
    code, _, _ = run(["run", "example=ex3", "N=8", "h_exp=3", "snapshot_times=0.5,1", f"snapshot_prefix={prefix}"])
    assert code == 0
    meta, values = read_snapshot(tmp_path / "snap_fdac_t0.5.txt")
    assert meta == {"dim": 2, "m": 7, "t": 0.5}
    assert values.shape == (7, 7)
    assert np.allclose(values, values.T)


def test_config_file_and_override(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# study\nexample = ex2\nN = 64\nh_exp=4\n")
    cfg = load_config("run", str(cfg_file), ["N=8"])
    assert (cfg.example, cfg.N, cfg.h_exp, cfg.alpha) == ("ex2", 8, 4, "t-sin-t")
    out_file = tmp_path / "out.csv"
    code, out, _ = run(["run", "--config", str(cfg_file), "N=8", "panels=64", f"output={out_file}"])
    assert code == 0 and out == ""
    assert rows(out_file.read_text())[0]["example"] == "ex2"


@pytest.mark.parametrize(
    "argv, field",
    [
        (["run", "N=abc"], "N"),
        (["run", "N=1"], "N"),
        (["run", "method=fast"], "method"),
        (["run", "K=-1"], "K"),
        (["run", "alpha=sin"], "alpha"),
        (["run", "bogus=1"], "bogus"),
        (["run", "snapshot_times=2"], "snapshot_times"),
        (["run", "panels=3"], "panels"),
        (["converge", "method=both"], "method"),
        (["converge", "levels=5"], "levels"),
        (["converge", "levels=6,5"], "levels"),
        (["converge", "example=custom"], "example"),
        (["bench", "n_exps=5"], "n_exps"),
        (["run", "timings=maybe"], "timings"),
        (["run", "T=inf"], "T"),
        (["run", "--config", "/nonexistent/file"], "config"),
    ],
)
def test_config_errors_name_the_field(argv, field):
    code, out, err = run(argv)
    assert code == 2
    assert err.startswith(f"config error: {field}:")
    assert out == ""


def test_load_config_raises_config_error():
    with pytest.raises(ConfigError) as exc:
        load_config("run", None, ["h_exp=0"])
    assert exc.value.field == "h_exp"


def test_alpha_violating_assumption_on_long_interval():
    # t sin t exceeds 1 before t = 1.2
    code, _, err = run(["run", "example=custom", "alpha=t-sin-t", "T=2", "N=8", "h_exp=2"])
    assert code == 2 and err.startswith("config error: alpha:")
