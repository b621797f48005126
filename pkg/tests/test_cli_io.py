import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointintensity import io as pio
from pointintensity.cli import main, parse_alpha_prior, parse_model_prior
from pointintensity.core import EventSeries
from pointintensity.errors import ConfigurationError, DataError
from pointintensity.gmc import rule_of_thumb_bins


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# ingestion -----------------------------------------------------------------

def test_csv_example_groups_replicates(tmp_path):
    data = pio.ingest_events(_write(tmp_path, "e.csv", "1,0.5\n1,2.0\n2,1.0"), horizon=3.0)
    assert data.n == 2 and data.horizon == 3.0
    assert [r.tolist() for r in data.replicates] == [[0.5, 2.0], [1.0]]


def test_header_and_comments_are_accepted():
    text = "# horizon: 4\nreplicate,time\n1,0.5\n2,3.5\n"
    data, meta = pio.parse_events(text)
    assert data.horizon == 4.0 and meta["horizon"] == "4"
    assert data.total_events() == 2


def test_empty_file_is_one_empty_replicate(tmp_path):
    with pytest.warns(UserWarning, match="no events"):
        data = pio.ingest_events(_write(tmp_path, "e.csv", ""), horizon=2.0)
    assert data.n == 1 and data.total_events() == 0


def test_missing_horizon_defaults_to_max_time_with_warning():
    with pytest.warns(UserWarning, match="largest event time"):
        data, _ = pio.parse_events("0.2\n0.9\n0.4\n")
    assert data.horizon == 0.9 and data.n == 1


def test_coal_style_file_gives_48_bins(tmp_path):
    years = np.sort(np.random.default_rng(0).uniform(0.0, 112.0, 191))
    path = _write(tmp_path, "coal.txt", "\n".join(repr(float(y)) for y in years) + "\n")
    data = pio.ingest_events(path, "plain", horizon=112.0)
    assert data.total_events() == 191
    assert rule_of_thumb_bins(data) == 48


@pytest.mark.parametrize("text, line", [
    ("1,0.5\n1,abc\n", 2),
    ("1,0.5\n\n1,0.7,3\n", 3),
    ("0,0.5\n", 1),
])
def test_malformed_rows_name_the_line(text, line):
    with pytest.raises(DataError, match=f"line {line}"):
        pio.parse_events(text, horizon=1.0)


def test_negative_time_is_a_data_error():
    with pytest.raises(DataError, match="negative"):
        pio.parse_events("1,0.5\n1,-0.1\n", horizon=1.0)
    with pytest.raises(DataError):
        pio.parse_events("nan\n", "plain", horizon=1.0)


def test_noncontiguous_labels_are_relabelled():
    with pytest.warns(UserWarning, match="relabelled"):
        data, _ = pio.parse_events("3,0.1\n7,0.2\n3,0.3\n", horizon=1.0)
    assert data.n == 2
    assert [r.tolist() for r in data.replicates] == [[0.1, 0.3], [0.2]]


def test_declared_replicates_keep_empty_ones():
    data, _ = pio.parse_events("# replicates: 3\n1,0.1\n3,0.2\n", horizon=1.0)
    assert [r.size for r in data.replicates] == [1, 0, 1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.floats(0.0, 5.0, allow_nan=False), max_size=6), min_size=1,
                max_size=5))
def test_event_round_trip_is_lossless(reps):
    data = EventSeries(5.0, [np.sort(np.array(r, dtype=float)) for r in reps])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back, _ = pio.parse_events(pio.format_events(data))
    assert back.n == data.n and back.horizon == data.horizon
    for a, b in zip(data.replicates, back.replicates):
        np.testing.assert_array_equal(a, b)


# configuration -------------------------------------------------------------

def test_fit_config_validation():
    with pytest.raises(ConfigurationError):
        pio.FitConfig(method="histogram")
    with pytest.raises(ConfigurationError):
        pio.FitConfig(burn_in_fraction=1.0)
    with pytest.raises(ConfigurationError):
        pio.FitConfig(levels=(0.5, 1.2))
    with pytest.raises(ConfigurationError):
        pio.FitConfig(bins="ebayes:5..2")


def test_bin_spec_parsing():
    assert pio.parse_bins("12") == ("fixed", 12)
    assert pio.parse_bins("rule") == ("rule", 50)
    assert pio.parse_bins("rule:30") == ("rule", 30)
    assert pio.parse_bins("ebayes:1..50") == ("ebayes", range(1, 51))
    assert pio.parse_bins("ebayes") == ("ebayes", None)
    with pytest.raises(ConfigurationError):
        pio.parse_bins("0")


def test_prior_spec_parsing():
    assert parse_alpha_prior("gamma:1,0.1").logpdf(2.0) == pytest.approx(
        parse_alpha_prior("exponential:0.1").logpdf(2.0))
    assert parse_model_prior("uniform:50").nmax == 50
    assert parse_model_prior("shiftpoisson:3:20").nmax == 20
    for bad in ("gamma:1", "weibull:2"):
        with pytest.raises(ConfigurationError):
            parse_alpha_prior(bad)
    with pytest.raises(ConfigurationError):
        parse_model_prior("uniform")


# reports -------------------------------------------------------------------

def _report(N=3, seed=0):
    rng = np.random.default_rng(seed)
    mean = rng.gamma(2.0, 1.0, N)
    lo95, hi95 = mean * 0.5, mean * 1.7
    lo75, hi75 = mean * 0.7, mean * 1.3
    return pio.FitReport(
        config=pio.FitConfig(method="conjugate").to_dict(),
        data={"n": 2, "total_events": 5, "horizon": 1.0, "horizon_source": "config"},
        n_bins=N, edges=np.linspace(0, 1, N + 1).tolist(), mean=mean.tolist(),
        bands=[{"level": 0.75, "lower": lo75.tolist(), "upper": hi75.tolist()},
               {"level": 0.95, "lower": lo95.tolist(), "upper": hi95.tolist()}],
        diagnostics={"ess": [1.5, 2.0]}, warnings=["w"], seed=7)


@pytest.mark.parametrize("fmt", ["json", "csv"])
@pytest.mark.parametrize("N", [1, 4])
def test_report_round_trip(tmp_path, fmt, N):
    rep = _report(N)
    path = tmp_path / f"r.{fmt}"
    pio.write_report(rep, str(path), fmt)
    back = pio.read_report(str(path))
    assert back.to_dict() == json.loads(json.dumps(rep.to_dict()))


def test_report_json_has_every_field():
    doc = json.loads(pio.report_to_json(_report()))
    assert list(doc) == list(pio.REPORT_FIELDS)


def test_csv_report_columns():
    lines = pio.report_to_csv(_report(2)).splitlines()
    assert lines[0].startswith("# report: ")
    assert lines[1] == "bin_index,edge_lo,edge_hi,mean,lo_0.75,hi_0.75,lo_0.95,hi_0.95"
    assert len(lines) == 4


def test_report_missing_fields_rejected():
    with pytest.raises(DataError):
        pio.parse_report('{"config": {}}')


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_band_nesting_survives_csv_round_trip(N, seed):
    rng = np.random.default_rng(seed)
    draws = rng.gamma(rng.uniform(0.5, 5, N), 1.0, size=(200, N))
    bands = []
    for lv in (0.75, 0.95):
        q = np.quantile(draws, [(1 - lv) / 2, (1 + lv) / 2], axis=0)
        bands.append({"level": lv, "lower": q[0].tolist(), "upper": q[1].tolist()})
    rep = _report(N)
    rep.bands = bands
    back = pio.parse_report(pio.report_to_csv(rep))
    inner, outer = back.bands
    assert all(o <= i for o, i in zip(outer["lower"], inner["lower"]))
    assert all(i <= o for o, i in zip(outer["upper"], inner["upper"]))
    assert back.bands == bands


# command line --------------------------------------------------------------

def test_conjugate_ebayes_on_empty_data_selects_one_bin(tmp_path, capsys):
    path = _write(tmp_path, "empty.csv", "# horizon: 1\n")
    code, out, _ = _run(["fit", "--data", path, "--method", "conjugate", "--bins", "ebayes:1..50",
                         "--alpha", "0.1", "--beta", "0.1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["n_bins"] == 1
    assert rep["seed"] is None
    assert any("no events" in w for w in rep["warnings"])


def test_simulate_then_gmc_rule_fit(tmp_path, capsys):
    events = str(tmp_path / "ev.csv")
    assert main(["simulate", "--intensity", "bart_simpson", "--n", "200", "--seed", "7",
                 "--out", events]) == 0
    data = pio.ingest_events(events)
    H = data.total_events()
    code, out, _ = _run(["fit", "--data", events, "--method", "gmc", "--bins", "rule",
                         "--seed", "7", "--iters", "4000"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["n_bins"] == min(50, max(1, int(np.floor(H / 4 + 0.5))))
    d = rep["diagnostics"]
    assert len(d["acf_alpha"]) == 20
    assert 0.0 < d["mwg_acceptance_rate"] < 1.0
    assert rep["data"]["horizon_source"] == "file"


def test_rj_fit_reports_model_frequencies(tmp_path, capsys):
    events = str(tmp_path / "ev.csv")
    main(["simulate", "--intensity", "step_sine", "--n", "20", "--seed", "3", "--out", events])
    code, out, _ = _run(["fit", "--data", events, "--method", "rj", "--model-prior", "uniform:50",
                         "--eta", "0.45", "--iters", "30000", "--seed", "3"], capsys)
    assert code == 0
    d = json.loads(out)["diagnostics"]
    assert sum(d["model_frequencies"].values()) == d["kept"] == 15000


def test_identical_inputs_give_byte_identical_json(tmp_path, capsys):
    events = str(tmp_path / "ev.csv")
    main(["simulate", "--intensity", "linear:1,2", "--n", "30", "--seed", "1", "--out", events])
    argv = ["fit", "--data", events, "--method", "gmc", "--bins", "8", "--seed", "11",
            "--iters", "2000"]
    a = _run(argv, capsys)[1]
    b = _run(argv, capsys)[1]
    assert a == b and len(a) > 0


def test_config_file_with_flag_override(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "1,0.1\n1,0.6\n2,0.65\n")
    cfg = _write(tmp_path, "fit.ini", "method = conjugate\nbins = 4\nhorizon = 1\nlevels = 0.5,0.9\n")
    code, out, _ = _run(["fit", "--data", events, "--config", cfg, "--bins", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["n_bins"] == 2
    assert [b["level"] for b in rep["bands"]] == [0.5, 0.9]
    assert rep["data"]["horizon_source"] == "config"


def test_csv_report_and_chain_diagnostics(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "# horizon: 1\n" + "\n".join(
        f"1,{t:.4f}" for t in np.linspace(0.01, 0.99, 40)))
    chain = str(tmp_path / "chain.npz")
    report = str(tmp_path / "rep.csv")
    assert main(["fit", "--data", events, "--method", "gmc", "--bins", "5", "--seed", "2",
                 "--iters", "1000", "--save-chain", chain, "--report-format", "csv",
                 "--out", report]) == 0
    assert pio.read_report(report).n_bins == 5
    code, out, _ = _run(["diagnostics", chain, "--max-lag", "3"], capsys)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "parameter,statistic,lag,value"
    assert sum(r.startswith("alpha,acf,") for r in rows) == 3
    assert sum(",ess," in r for r in rows) == 6


def test_select_bins_profile(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "# horizon: 1\n1,0.1\n1,0.2\n1,0.3\n1,0.4\n")
    code, out, _ = _run(["select-bins", "--data", events, "--alpha", "1", "--beta", "1",
                         "--candidates", "1..3"], capsys)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "N,log_marginal_likelihood,selected"
    assert [r.split(",")[2] for r in rows[1:]] == ["0", "1", "0"]


def test_experiment_table(capsys):
    code, out, _ = _run(["experiment", "mse", "--intensity", "linear:1,2", "--sizes", "20,40",
                         "--replications", "3", "--seed", "0"], capsys)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "n,N,metric,value,seed"
    assert len(rows) == 5


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--intensity", "constant:1"], 2),  # seed missing
    (["fit", "--method", "gmc", "--seed", "1", "--data", "/nonexistent/file.csv"], 3),
    (["simulate", "--intensity", "nosuch", "--seed", "1"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert "error" in capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--bogus"])
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bad_data_row_exit_code(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "1,0.1\n1,-2\n")
    assert main(["fit", "--data", events, "--method", "conjugate", "--horizon", "1"]) == 3
    assert "line 2" in capsys.readouterr().err


def test_no_seed_records_a_fresh_seed(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "# horizon: 1\n1,0.3\n1,0.7\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code, out, _ = _run(["fit", "--data", events, "--method", "gmc", "--bins", "2",
                             "--iters", "200", "--no-seed"], capsys)
    assert code == 0
    assert isinstance(json.loads(out)["seed"], int)


def test_auto_beta_is_refused_where_undefined(tmp_path, capsys):
    events = _write(tmp_path, "ev.csv", "# horizon: 1\n1,0.3\n1,0.7\n")
    assert main(["fit", "--data", events, "--method", "rj", "--beta", "auto", "--seed", "1"]) == 2
    assert main(["fit", "--data", events, "--method", "conjugate", "--beta", "auto",
                 "--bins", "ebayes"]) == 2
    code, out, _ = _run(["fit", "--data", events, "--method", "conjugate", "--beta", "auto",
                         "--bins", "2"], capsys)
    assert code == 0 and json.loads(out)["diagnostics"]["beta_calibrated"] > 0
