"""Command-line entry point: ``pointintensity <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical error.
"""

import argparse
import configparser
import sys
import time
import warnings

import numpy as np

from . import io as pio
from .conjugate import (IndepGammaPrior, calibrate_beta, credible_band, fit_conjugate,
                        select_bins_empirical_bayes)
from .core import BinGrid, bin_events, fold_periodic
from .diagnostics import autocorrelation, effective_sample_size
from .errors import ConfigurationError, DataError, NumericalError, PointIntensityError
from .gmc import AlphaPrior, ChainOutput, GmcHyperparams, rule_of_thumb_bins, run_gmc, summarize_chain
from .rjmcmc import ModelIndexPrior, RjConfig, rj_posterior_band, run_rj
from .simulate import (contraction_experiment, mse_experiment, named_intensity,
                       simulate_poisson, write_table)

MAX_LAG = 20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


# option-string parsers ------------------------------------------------------

def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse {what} {text!r}") from None


def parse_alpha_prior(spec) -> AlphaPrior:
    """``exponential:0.1``, ``gamma:1,0.1``, ``uniform:10``, ``levy`` or ``levy:2``."""
    kind, _, args = str(spec).partition(":")
    vals = _floats(args, "alpha prior")
    need = {"exponential": 1, "gamma": 2, "uniform": 1, "levy": (0, 1)}
    if kind not in need:
        raise ConfigurationError(f"unknown alpha prior {kind!r}")
    ok = need[kind]
    if len(vals) not in (ok if isinstance(ok, tuple) else (ok,)):
        raise ConfigurationError(f"alpha prior {spec!r} has the wrong number of parameters")
    if kind == "levy":
        return AlphaPrior.levy(*vals)
    return getattr(AlphaPrior, kind)(*vals)


def parse_model_prior(spec) -> ModelIndexPrior:
    """``uniform:NMAX`` or ``shiftpoisson:MEAN[:NMAX]``."""
    parts = str(spec).split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 2:
            return ModelIndexPrior.uniform(int(parts[1]))
        if parts[0] == "shiftpoisson" and len(parts) in (2, 3):
            nmax = int(parts[2]) if len(parts) == 3 else None
            return ModelIndexPrior.shifted_poisson(float(parts[1]), nmax)
    except ValueError:
        pass
    raise ConfigurationError(f"invalid model prior {spec!r}")


def _range(text):
    lo, sep, hi = str(text).partition("..")
    try:
        if sep:
            return range(int(lo), int(hi) + 1)
        return [int(v) for v in str(text).split(",")]
    except ValueError:
        raise ConfigurationError(f"invalid integer range {text!r}") from None


def _resolve_seed(args, stochastic=True):
    if args.seed is not None and args.no_seed:
        raise ConfigurationError("--seed and --no-seed are mutually exclusive")
    if args.seed is not None or not stochastic:
        return args.seed
    if not args.no_seed:
        raise ConfigurationError("--seed is required for stochastic runs (or pass --no-seed)")
    return int(np.random.SeedSequence().entropy % (2**63))


# fit -----------------------------------------------------------------------

FIT_KEYS = {
    "method": str, "bins": str, "alpha": float, "beta": str, "alpha1": float, "beta1": float,
    "alpha_prior": str, "fixed_alpha": float, "iterations": int, "burn_in_fraction": float,
    "seed": int, "levels": str, "period": float, "horizon": float, "model_prior": str,
    "eta": float,
}


def read_config_file(path):
    """Flat ``key = value`` file; a leading ``[fit]`` section header is optional."""
    with open(path) as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[fit]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            k = key.replace("-", "_")
            if k == "iters":
                k = "iterations"
            if k not in FIT_KEYS:
                raise ConfigurationError(f"{path}: unknown key {key!r}")
            out[k] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    if key == "levels":
        return tuple(_floats(value, "levels"))
    if key == "beta":
        return "auto" if str(value).strip() == "auto" else _as(float, key, value)
    return _as(FIT_KEYS[key], key, value)


def _as(typ, key, value):
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"invalid value for {key}: {value!r}") from None


def build_fit_config(args) -> pio.FitConfig:
    merged = read_config_file(args.config) if args.config else {}
    for key in FIT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return pio.FitConfig(**{k: _coerce(k, v) for k, v in merged.items()})


def _load_data(args, cfg):
    src = args.data
    if src is None:
        if sys.stdin.isatty():
            raise ConfigurationError("no --data given and nothing piped on stdin")
        src = "-"
    try:
        text = pio._open_text(src)
    except OSError as exc:
        raise DataError(f"cannot read {src}: {exc}") from None
    data, meta = pio.parse_events(text, args.format, cfg.horizon)
    if cfg.horizon is not None:
        source = "config"
    elif "horizon" in meta:
        source = "file"
    else:
        source = "max_time" if data.total_events() else "default"
    return data, source


def _grid_for(data, cfg, prior, diag):
    mode, arg = pio.parse_bins(cfg.bins)
    if mode == "fixed":
        return BinGrid.uniform(data.horizon, arg)
    if mode == "rule":
        return BinGrid.uniform(data.horizon, rule_of_thumb_bins(data, arg))
    if prior is None:
        raise ConfigurationError("bins=ebayes needs a numeric beta (beta=auto is not supported)")
    N, profile = select_bins_empirical_bayes(data, prior, arg)
    diag["ebayes_profile"] = [[n, v] for n, v in profile]
    return BinGrid.uniform(data.horizon, N)


def _band_dicts(band):
    return [{"level": lv, "lower": lo.tolist(), "upper": hi.tolist()} for lv, lo, hi in band.levels]


def _chain_diagnostics(out: ChainOutput):
    d = {"kept": out.kept, "burn_in": out.burn_in, "iterations": out.iterations}
    lag = min(MAX_LAG, out.kept - 1)
    if out.alpha is not None:
        a = out.alpha
        d["mwg_acceptance_rate"] = out.acceptance_rate
        d["mwg_step"] = out.mwg_step
        q = np.quantile(a, [0.025, 0.5, 0.975])
        d["alpha"] = {"mean": float(a.mean()), "sd": float(a.std()), "q025": float(q[0]),
                      "median": float(q[1]), "q975": float(q[2])}
        if lag >= 1:
            d["acf_alpha"] = autocorrelation(a, lag)[1:].tolist()
        d["ess_alpha"] = effective_sample_size(a)
    mid = out.psi.shape[1] // 2
    if lag >= 1:
        d["acf_psi_mid"] = autocorrelation(out.psi[:, mid], lag)[1:].tolist()
    d["ess_psi"] = [effective_sample_size(out.psi[:, k]) for k in range(out.psi.shape[1])]
    return d


def run_fit(cfg: pio.FitConfig, data, seed, save_chain=None):
    """Run the configured method; returns ``(grid, band, diagnostics)``."""
    diag = {}
    prior = None if cfg.beta == "auto" else IndepGammaPrior(cfg.alpha, cfg.beta)
    if cfg.period is not None:
        data = fold_periodic(data, cfg.period)
    if cfg.method == "conjugate":
        grid = _grid_for(data, cfg, prior, diag)
        counts = bin_events(data, grid)
        if prior is None:
            beta = calibrate_beta(counts, cfg.alpha)
            diag["beta_calibrated"] = beta
            prior = IndepGammaPrior(cfg.alpha, beta)
        band = credible_band(fit_conjugate(counts, prior), cfg.levels)
        return data, grid, band, diag
    if cfg.method == "gmc":
        grid = _grid_for(data, cfg, prior, diag)
        if cfg.fixed_alpha is not None:
            hp = GmcHyperparams.fixed(cfg.fixed_alpha, None, cfg.alpha1, cfg.beta1)
        else:
            hp = GmcHyperparams(cfg.alpha1, cfg.beta1, alpha_prior=parse_alpha_prior(cfg.alpha_prior))
        burn = int(cfg.iterations * cfg.burn_in_fraction)
        out = run_gmc(data, grid, hp, cfg.iterations, burn, rng=seed)
        if save_chain:
            out.save(save_chain)
        diag.update(_chain_diagnostics(out))
        return data, grid, summarize_chain(out, levels=cfg.levels), diag
    if prior is None:
        raise ConfigurationError("method rj needs a numeric beta (beta=auto is not supported)")
    rj = RjConfig(cfg.eta, prior,
                  parse_model_prior(cfg.model_prior), cfg.iterations,
                  int(cfg.iterations * cfg.burn_in_fraction), seed, draw_psi=True)
    out = run_rj(data, rj)
    band = rj_posterior_band(out, levels=cfg.levels)
    diag["model_frequencies"] = {str(k): v for k, v in sorted(out.frequencies.items())}
    diag["kept"] = int(out.chain.size)
    diag["rj_acceptance_rate"] = out.accepted / out.iterations
    diag["map_n"] = max(out.frequencies, key=lambda k: (out.frequencies[k], -k))
    return data, band.grid, band, diag


def cmd_fit(args):
    cfg = build_fit_config(args)
    stochastic = cfg.method != "conjugate"
    args.seed = cfg.seed
    seed = _resolve_seed(args, stochastic)
    cfg.seed = seed
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        raw, source = _load_data(args, cfg)
        data, grid, band, diag = run_fit(cfg, raw, seed, args.save_chain)
    elapsed = time.perf_counter() - t0
    bad = np.flatnonzero(~np.isfinite(band.mean))
    if bad.size:
        raise NumericalError(f"posterior mean is not finite in bin {int(bad[0]) + 1}")
    report = pio.FitReport(
        config=cfg.to_dict(),
        data={"n": data.n, "total_events": data.total_events(), "horizon": data.horizon,
              "horizon_source": source},
        n_bins=grid.N, edges=grid.edges.tolist(), mean=band.mean.tolist(),
        bands=_band_dicts(band), diagnostics=diag,
        warnings=[str(w.message) for w in caught], seed=seed,
        timing={"seconds": elapsed} if args.timing else None)
    pio.write_report(report, args.out, args.report_format)
    return 0


# other subcommands ---------------------------------------------------------

def cmd_select_bins(args):
    data = pio.ingest_events(args.data or "-", args.format, args.horizon)
    cands = _range(args.candidates) if args.candidates else None
    best, profile = select_bins_empirical_bayes(data, IndepGammaPrior(args.alpha, args.beta), cands)
    rows = ["N,log_marginal_likelihood,selected"]
    rows += [f"{n},{v!r},{int(n == best)}" for n, v in profile]
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def cmd_simulate(args):
    seed = _resolve_seed(args)
    intensity = named_intensity(args.intensity)
    data = simulate_poisson(seed, intensity, args.n)
    pio.write_events(data, args.out)
    return 0


def cmd_experiment(args):
    seed = _resolve_seed(args)
    intensity = named_intensity(args.intensity)
    sizes = [int(v) for v in _floats(args.sizes, "sample sizes")]
    prior = IndepGammaPrior(args.alpha, args.beta)
    if args.kind == "mse":
        rows = mse_experiment(intensity, sizes, args.h, args.replications, seed, args.c, prior,
                              args.bins)
    else:
        raw = contraction_experiment(intensity, sizes, args.h, args.M, args.draws, args.datasets,
                                     seed, args.c, prior)
        rows = []
        for n in sizes:
            sub = [r for r in raw if r["n"] == n]
            rows.append(dict(sub[0], metric="mass_mean",
                             value=float(np.mean([r["value"] for r in sub]))))
            rows += [dict(r, metric=f"mass_d{r['dataset']:02d}") for r in sub]
    write_table(rows, args.out)
    return 0


def cmd_diagnostics(args):
    try:
        out = ChainOutput.load(args.chain)
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load chain {args.chain}: {exc}") from None
    lag = min(args.max_lag, out.kept - 1)
    lines = ["parameter,statistic,lag,value"]
    series = [(f"psi[{k + 1}]", out.psi[:, k]) for k in range(out.psi.shape[1])]
    if out.alpha is not None:
        series.insert(0, ("alpha", out.alpha))
        lines.append(f"alpha,acceptance_rate,,{out.acceptance_rate!r}")
    for name, x in series:
        lines.append(f"{name},mean,,{float(x.mean())!r}")
        lines.append(f"{name},ess,,{effective_sample_size(x)!r}")
        if lag >= 1:
            for j, r in enumerate(autocorrelation(x, lag)[1:], start=1):
                lines.append(f"{name},acf,{j},{float(r)!r}")
    if args.trace:
        for name, x in series:
            lines += [f"{name},trace,{i},{float(v)!r}" for i, v in enumerate(x)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


# parser --------------------------------------------------------------------

def _seed_args(p):
    p.add_argument("--seed", type=int, help="RNG seed (required unless --no-seed)")
    p.add_argument("--no-seed", action="store_true", help="draw a fresh seed and record it")


def _data_args(p):
    p.add_argument("--data", help="event file; '-' or omitted reads stdin")
    p.add_argument("--format", choices=("csv", "plain"), help="event format (default: sniffed)")
    p.add_argument("--horizon", type=float, help="observation window length T")


def build_parser():
    parser = _Parser(prog="pointintensity",
                     description="Bayesian piecewise-constant intensity estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit an intensity and write a report")
    _data_args(p)
    _seed_args(p)
    p.add_argument("--config", help="key = value configuration file; flags override it")
    p.add_argument("--method", choices=("conjugate", "gmc", "rj"))
    p.add_argument("--bins", help="N, rule[:cap] or ebayes[:lo..hi]")
    p.add_argument("--alpha", type=float, help="independent gamma prior shape")
    p.add_argument("--beta", help="independent gamma prior rate, or 'auto'")
    p.add_argument("--alpha1", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--alpha-prior", help="exponential:r, gamma:a,b, uniform:b or levy[:s]")
    p.add_argument("--fixed-alpha", type=float, help="fix both couplings instead of sampling alpha")
    p.add_argument("--iters", "--iterations", dest="iterations", type=int)
    p.add_argument("--burn-in-fraction", type=float)
    p.add_argument("--levels", help="comma-separated band levels")
    p.add_argument("--period", type=float, help="fold the data onto [0, period]")
    p.add_argument("--model-prior", help="uniform:NMAX or shiftpoisson:MEAN[:NMAX]")
    p.add_argument("--eta", type=float)
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--report-format", choices=("json", "csv"), default="json")
    p.add_argument("--save-chain", help="store the GMC chain as .npz")
    p.add_argument("--timing", action="store_true", help="record wall time in the report")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select-bins", help="marginal-likelihood profile over N")
    _data_args(p)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--candidates", help="lo..hi or comma list (default 1..min(200, H))")
    p.add_argument("--out")
    p.set_defaults(func=cmd_select_bins)

    p = sub.add_parser("simulate", help="simulate events from a named intensity")
    p.add_argument("--intensity", required=True, help="e.g. bart_simpson or linear:1,2")
    p.add_argument("--n", type=int, default=1, help="number of replicates")
    _seed_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="error-rate and contraction tables")
    p.add_argument("kind", choices=("mse", "contraction"))
    p.add_argument("--intensity", required=True)
    p.add_argument("--sizes", default="50,500,5000")
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--bins", type=int, help="fixed N for the mse table")
    p.add_argument("--M", type=float, default=3.0)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--datasets", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.1)
    _seed_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("diagnostics", help="ACF, ESS and traces from a saved chain")
    p.add_argument("chain", help=".npz file written by fit --save-chain")
    p.add_argument("--max-lag", type=int, default=MAX_LAG)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PointIntensityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
