"""Command line for DCC-X correlation modelling.

Subcommands cover statistics, estimation, forecasting, evaluation, break
tests, impulse responses, rolling analyses and simulation.

Exit codes: 0 success, 1 computational failure, 2 input or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from corrx import data as di
from corrx.dcc import (
    DccOptions,
    DccSpec,
    ModelFit,
    expand_break_spec,
    fit_garch_panel,
    lr_test,
    nested_start,
    two_step_fit,
)
from corrx.diagnostics import ljung_box, rolling_correlation, rolling_dccx
from corrx.evaluation import LOSSES, LossMatrix, mcs
from corrx.exceptions import CorrxError, DataError, SpecError
from corrx.forecast import oos_run, read_forecast_csv, write_manifest
from corrx.irf import impulse_response
from corrx.simulate import SimConfig, default_config, simulate_panel

logger = logging.getLogger("corrx")

SPEC_CHOICES = ("none", "tpu", "dummy", "interaction", "full", "custom")

# Settings that may also come from --config; explicit flags win.
DEFAULTS = {
    "input": None,
    "exog": None,
    "input_kind": "prices",
    "yield_cols": "",
    "bp": False,
    "ffill": False,
    "spec": "none,tpu,dummy,interaction,full",
    "regressors": "",
    "tpu_col": "TPU",
    "break_dates": "",
    "split": None,
    "alpha": 0.05,
    "bootstrap_reps": 5000,
    "block_length": None,
    "losses": ",".join(LOSSES),
    "window": 750,
    "corr_window": 60,
    "step": 1,
    "seed": 0,
    "jobs": 1,
    "out_dir": ".",
    "exog_style": "ones",
    "targeting": "consistent",
    "regressor": None,
    "pair": None,
    "horizon": 100,
    "shock": None,
    "stochastic": False,
    "refit_every": None,
    "sim_config": None,
    "T": 5000,
    "N": 3,
    "theta": "0.05,0.93,0.025",
    "break_index": None,
    "break_delta": 0.0,
}


class ConfigError(CorrxError, ValueError):
    pass


# -- argument handling ------------------------------------------------------------


def _shared(p: argparse.ArgumentParser) -> None:
    a = p.add_argument
    a("--config", help="JSON file of settings; explicit flags take precedence")
    a("--input", help="CSV of prices (or returns with --input-kind returns)")
    a("--exog", help="CSV of regressor levels")
    a("--input-kind", choices=("prices", "returns"))
    a("--yield-cols", help="comma list of yield columns transformed by first differences")
    a("--bp", action="store_const", const=True, help="express yield changes in basis points")
    a("--ffill", action="store_const", const=True, help="forward-fill interior gaps")
    a("--spec", help=f"comma list from {SPEC_CHOICES}")
    a("--regressors", help="comma list of regressor columns for --spec custom")
    a("--tpu-col", help="name of the uncertainty-index column")
    a("--split", help="last in-sample date (YYYY-MM-DD)")
    a("--alpha", type=float)
    a("--bootstrap-reps", type=int)
    a("--block-length", type=int)
    a("--window", type=int)
    a("--step", type=int)
    a("--seed", type=int)
    a("--jobs", type=int)
    a("--out-dir")
    a("--exog-style", choices=("ones", "qbar"))
    a("--targeting", choices=("consistent", "sample"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="descriptive statistics of returns and regressors")
    _shared(p)

    p = sub.add_parser("estimate", help="two-step fits and a coefficient report")
    _shared(p)

    p = sub.add_parser("forecast", help="one-step-ahead out-of-sample covariance forecasts")
    _shared(p)
    p.add_argument("--refit-every", type=int)

    p = sub.add_parser("evaluate", help="losses and Model Confidence Set over saved forecasts")
    _shared(p)
    p.add_argument("--forecast-dir", help="directory holding manifest.json (default --out-dir)")
    p.add_argument("--losses", help=f"comma list from {LOSSES}")

    p = sub.add_parser("irf", help="correlation response to a regressor shock")
    _shared(p)
    p.add_argument("--regressor")
    p.add_argument("--pair", help="two asset names, comma separated")
    p.add_argument("--horizon", type=int)
    p.add_argument("--shock", type=float)
    p.add_argument("--stochastic", action="store_const", const=True)

    p = sub.add_parser("break-test", help="coefficient shift at one or more event dates")
    _shared(p)
    p.add_argument("--break-dates", help="comma list of event dates")

    p = sub.add_parser("roll", help="rolling correlation and rolling re-estimation")
    _shared(p)
    p.add_argument("--pair", help="two asset names for the rolling correlation")
    p.add_argument("--corr-window", type=int)

    p = sub.add_parser("simulate", help="simulate a panel from a DCC-X data-generating process")
    _shared(p)
    p.add_argument("--sim-config", help="JSON simulation configuration")
    p.add_argument("--T", type=int, dest="T")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--theta", help="theta1,theta2[,theta_x...]")
    p.add_argument("--break-index", type=int)
    p.add_argument("--break-delta", type=float)
    return parser


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge flags over the --config file over built-in defaults."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - set(DEFAULTS) - {"forecast_dir"})
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
    out = dict(vars(args))
    for key, default in {**DEFAULTS, "forecast_dir": None}.items():
        if out.get(key) is None:
            out[key] = cfg.get(key, default)
    return argparse.Namespace(**out)


def _csv_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text or "").split(",") if t.strip()]


# -- data and spec assembly -----------------------------------------------------------


def load_dataset(args, need_exog: bool = True) -> di.AlignedDataset:
    if not args.input:
        raise ConfigError("--input is required")
    panel = di.load_raw_panel(args.input)
    if args.ffill:
        panel = di.forward_fill(panel)
    yields = set(_csv_list(args.yield_cols))
    missing = yields - set(panel.columns)
    if missing:
        raise ConfigError(f"yield columns not in input: {sorted(missing)}")
    cols = []
    for name in panel.columns:
        if args.input_kind == "returns":
            lo, hi = di._span(panel.column(name), name)
            cols.append(di.Series(name, panel.dates[lo:hi], panel.column(name)[lo:hi], "return"))
        elif name in yields:
            cols.append(di.yield_changes(panel, name, 100.0 if args.bp else 1.0))
        else:
            cols.append(di.log_returns(panel, name))
    common = di._intersect([c.dates for c in cols])
    if common.size == 0:
        raise DataError("return columns share no dates")
    returns = di.ReturnPanel(common, tuple(c.name for c in cols),
                             np.column_stack([c.values[np.isin(c.dates, common)] for c in cols]))
    exog = []
    if args.exog:
        xp = di.load_raw_panel(args.exog)
        if args.ffill:
            xp = di.forward_fill(xp)
        for name in xp.columns:
            col = xp.column(name)
            lo, hi = di._span(col, name)
            exog.append(di.Series(name, xp.dates[lo:hi], col[lo:hi], "continuous"))
        tpu = next((s for s in exog if s.name == args.tpu_col), None)
        names = {s.name for s in exog}
        if tpu is not None and "Dummy" not in names:
            dummy = di.regime_dummy(tpu.dates, di.DEFAULT_REGIMES, "Dummy")
            if np.ptp(dummy.values) > 0:
                exog.append(dummy)
                if f"{tpu.name}xDummy" not in names:
                    exog.append(di.interaction(tpu, dummy))
            else:
                logger.info("regime dummy is constant over the sample; not added")
    elif need_exog:
        raise ConfigError("--exog is required for specs with regressors")
    return di.align(returns, exog)


def build_specs(args, dataset: di.AlignedDataset | None = None) -> list[DccSpec]:
    tpu = args.tpu_col
    table = {
        "none": DccSpec((), label="DCC"),
        "tpu": DccSpec((tpu,), label=f"DCC-X_{tpu}"),
        "dummy": DccSpec(("Dummy",), label="DCC-X_Dummy"),
        "interaction": DccSpec((f"{tpu}xDummy",), label=f"DCC-X_{tpu}xDummy"),
        "full": DccSpec((tpu, "Dummy", f"{tpu}xDummy"), label="DCC-X_Full"),
    }
    specs = []
    for key in _csv_list(args.spec):
        key = key.lower()
        if key == "custom":
            regs = _csv_list(args.regressors)
            if not regs:
                raise ConfigError("--spec custom needs --regressors")
            specs.append(DccSpec(tuple(regs)))
        elif key in table:
            specs.append(table[key])
        else:
            raise ConfigError(f"unknown spec {key!r}; choose from {SPEC_CHOICES}")
    if not specs:
        raise ConfigError("no specifications selected")
    if dataset is not None:
        if args.spec == DEFAULTS["spec"]:
            specs = [s for s in specs if set(s.regressors) <= set(dataset.exog_names)]
        for s in specs:
            for r in s.regressors:
                if r not in dataset.exog_names:
                    raise ConfigError(f"{s.name}: regressor {r!r} not available "
                                      f"(have {list(dataset.exog_names)})")
    return specs


def dcc_options(args) -> DccOptions:
    return DccOptions(exog_style=args.exog_style, targeting=args.targeting, jobs=args.jobs,
                      strict=False)


def _out(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_+" else "_" for c in name)


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- report formatting --------------------------------------------------------------


def _stars(est: float, se: float) -> str:
    if not np.isfinite(se) or se <= 0:
        return ""
    from scipy.stats import norm

    p = 2 * norm.sf(abs(est / se))
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.10 else ""


def _cell(est: float, se: float) -> tuple[str, str]:
    se_txt = f"({se:.4f})" if np.isfinite(se) else "(-)"
    return f"{est:.4f}{_stars(est, se)}", se_txt


def format_report(fits: dict[str, ModelFit], base: ModelFit | None, lb: dict[str, float]) -> str:
    lines = []
    first = next(iter(fits.values()))
    lines.append("Panel a: GJR-GARCH(1,1) coefficients (robust standard errors)")
    names = first.asset_names
    w = max(12, *(len(n) + 2 for n in names))
    lines.append(f"{'':10}" + "".join(f"{n:>{w}}" for n in names))
    for k, pname in enumerate(("omega", "alpha", "beta", "gamma")):
        ests, ses = [], []
        for g in first.garch_fits:
            e, s = _cell(g.params.as_array()[k], g.se_robust[k])
            ests.append(e)
            ses.append(s)
        lines.append(f"{pname:10}" + "".join(f"{e:>{w}}" for e in ests))
        lines.append(f"{'':10}" + "".join(f"{s:>{w}}" for s in ses))
    lines.append("")

    lines.append("Panel b: correlation dynamics (robust standard errors)")
    cols = list(fits)
    w = max(14, *(len(c) + 2 for c in cols))
    lines.append(f"{'':22}" + "".join(f"{c:>{w}}" for c in cols))
    rows = ["theta1", "theta2"]
    kmax = max(f.dcc_fit.spec.k for f in fits.values())
    rows += [f"theta{3 + j}" for j in range(kmax)]
    for idx, row in enumerate(rows):
        ests, ses = [], []
        for f in fits.values():
            vals = f.dcc_fit.params.as_array()
            if idx < vals.size:
                e, s = _cell(vals[idx], f.dcc_fit.se_robust[idx])
            else:
                e, s = "", ""
            ests.append(e)
            ses.append(s)
        lines.append(f"{row:22}" + "".join(f"{e:>{w}}" for e in ests))
        lines.append(f"{'':22}" + "".join(f"{s:>{w}}" for s in ses))
    for j in range(kmax):
        labels = [f.dcc_fit.spec.regressors[j] if j < f.dcc_fit.spec.k else "" for f in fits.values()]
        lines.append(f"{f'  theta{3 + j} regressor':22}" + "".join(f"{l:>{w}}" for l in labels))
    lines.append(f"{'LogL':22}" + "".join(f"{f.dcc_fit.loglik:>{w}.2f}" for f in fits.values()))
    lines.append(f"{'AIC':22}" + "".join(f"{f.dcc_fit.aic:>{w}.2f}" for f in fits.values()))
    lines.append(f"{'BIC':22}" + "".join(f"{f.dcc_fit.bic:>{w}.2f}" for f in fits.values()))
    if base is not None:
        stats_, pvals = [], []
        for f in fits.values():
            if f.dcc_fit.spec.k == 0:
                stats_.append("")
                pvals.append("")
                continue
            lr = lr_test(base.dcc_fit, f.dcc_fit)
            stats_.append(f"{lr.stat:.3f}")
            pvals.append(f"[{lr.pvalue:.4f}]")
        lines.append(f"{'LR vs DCC':22}" + "".join(f"{s:>{w}}" for s in stats_))
        lines.append(f"{'':22}" + "".join(f"{s:>{w}}" for s in pvals))
    lines.append(f"{'converged':22}" + "".join(f"{str(f.dcc_fit.converged):>{w}}" for f in fits.values()))
    lines.append("")

    lines.append("Panel c: Ljung-Box p-values, first-order autocorrelation of standardized residuals")
    w = max(12, *(len(n) + 2 for n in names))
    lines.append(f"{'':10}" + "".join(f"{n:>{w}}" for n in names))
    lines.append(f"{'Q(1) p':10}" + "".join(f"{lb[n]:>{w}.4f}" for n in names))
    lines.append("")
    lines.append("Significance: *** 1%, ** 5%, * 10% (robust t-statistics).")
    return "\n".join(lines) + "\n"


# -- commands -------------------------------------------------------------------------


def cmd_stats(args) -> int:
    ds = load_dataset(args, need_exog=False)
    rows = {n: di.descriptive_stats(ds.returns.values[:, i])
            for i, n in enumerate(ds.returns.asset_names)}
    for s in ds.exog:
        if s.kind == "continuous":
            rows[s.name] = di.descriptive_stats(s.values)
    path = _out(args) / "stats.csv"
    di.write_stats_csv(path, rows)
    sys.stdout.write(path.read_text())
    return 0


def _fit_all(args, ds, specs):
    """Fit every spec sharing first-step fits; DCC-X fits warm-start from DCC."""
    opts = dcc_options(args)
    garch_fits = fit_garch_panel(ds, opts.garch, opts.jobs)
    base = None
    fits, failures = {}, {}
    base_spec = next((s for s in specs if s.k == 0), DccSpec((), label="DCC"))
    try:
        base = two_step_fit(ds, base_spec, opts, garch_fits=garch_fits)
    except CorrxError as exc:
        logger.error("baseline DCC failed: %s", exc)
    for spec in specs:
        if spec.k == 0 and base is not None:
            fits[spec.name] = base
            continue
        try:
            full = expand_break_spec(spec, ds.date_index)
            starts = [nested_start(base.dcc_fit, full)] if base is not None else []
            fits[spec.name] = two_step_fit(ds, spec, opts, garch_fits=garch_fits, starts=starts)
        except CorrxError as exc:
            logger.error("%s: %s", spec.name, exc)
            failures[spec.name] = str(exc)
    return fits, base, failures, garch_fits


def _write_rpath(path: Path, fit: ModelFit) -> None:
    names = fit.asset_names
    r = fit.dcc_fit.r_path
    n = len(names)
    lines = ["date,asset_i,asset_j,rho"]
    for t, d in enumerate(fit.dates):
        for i in range(n):
            for j in range(i + 1, n):
                lines.append(f"{d},{names[i]},{names[j]},{float(r[t, i, j])!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fit_json(fit: ModelFit) -> dict:
    out = fit.dcc_fit.to_dict()
    out["garch"] = [g.to_dict() for g in fit.garch_fits]
    out["assets"] = list(fit.asset_names)
    out["sample"] = {"start": str(fit.dates[0]), "end": str(fit.dates[-1]), "nobs": int(fit.dates.size)}
    return out


def cmd_estimate(args) -> int:
    ds = load_dataset(args, need_exog=False)
    specs = build_specs(args, ds)
    out = _out(args)
    fits, base, failures, garch_fits = _fit_all(args, ds, specs)
    if not fits:
        for name, msg in failures.items():
            sys.stderr.write(f"corrx: {name}: {msg}\n")
        return 1
    for name, fit in fits.items():
        slug = _slug(name)
        _write_json(out / f"fit_{slug}.json", _fit_json(fit))
        _write_rpath(out / f"rpath_{slug}.csv", fit)
    lb = {g.asset: ljung_box(g.residuals, 1).pvalue for g in garch_fits}
    report = format_report(fits, base, lb)
    if failures:
        report += "".join(f"FAILED {n}: {m}\n" for n, m in failures.items())
    (out / "report.txt").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return 0


def cmd_forecast(args) -> int:
    if not args.split:
        raise ConfigError("--split is required")
    ds = load_dataset(args, need_exog=False)
    specs = build_specs(args, ds)
    out = _out(args)
    sets = oos_run(ds, args.split, specs, dcc_options(args), refit_every=args.refit_every)
    files = {}
    for s in sets:
        if s.error:
            continue
        fname = f"forecast_{_slug(s.model_name)}.csv"
        s.write_csv(out / fname)
        files[s.model_name] = fname
    write_manifest(out / "manifest.json", sets, args.split, files)
    for s in sets:
        status = f"FAILED: {s.error}" if s.error else f"{len(s)} forecasts"
        sys.stdout.write(f"{s.model_name}: {status}\n")
    return 0 if files else 1


def cmd_evaluate(args) -> int:
    fdir = Path(args.forecast_dir or args.out_dir)
    try:
        manifest = json.loads((fdir / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"no readable forecast manifest in {fdir}: {exc}") from exc
    files = manifest.get("files") or {}
    if len(files) < 2:
        raise ConfigError("evaluation needs forecasts from at least two models")
    ds = load_dataset(args, need_exog=False)
    forecasts = {}
    dates = None
    for model in manifest["models"]:
        if model not in files:
            continue
        d, names, H = read_forecast_csv(fdir / files[model])
        if names != ds.returns.asset_names:
            raise DataError(f"{model}: forecast assets {names} differ from input {ds.returns.asset_names}")
        if dates is not None and not np.array_equal(d, dates):
            raise DataError(f"{model}: forecast dates differ across models")
        dates = d
        forecasts[model] = H
    idx = np.searchsorted(ds.date_index, dates)
    if np.any(idx >= ds.nobs) or not np.array_equal(ds.date_index[np.minimum(idx, ds.nobs - 1)], dates):
        raise DataError("forecast dates not found in the input returns")
    realized = ds.returns.values[idx]
    out = _out(args)
    summary = {}
    for loss in _csv_list(args.losses):
        if loss not in LOSSES:
            raise ConfigError(f"unknown loss {loss!r}; choose from {LOSSES}")
        lm = LossMatrix.from_forecasts(loss, forecasts, realized, dates)
        lm.write_csv(out / f"losses_{loss}.csv")
        res = mcs(lm, args.alpha, args.bootstrap_reps, args.block_length, args.seed)
        res.write_json(out / f"mcs_{loss}.json")
        summary[loss] = res
    names = list(forecasts)
    w = max(10, *(len(n) + 2 for n in names))
    lines = [f"MCS p-values (T_R, alpha={args.alpha}, reps={args.bootstrap_reps})",
             f"{'':12}" + "".join(f"{n:>{w}}" for n in names)]
    for loss, res in summary.items():
        lines.append(f"{loss:12}" + "".join(f"{res.pvalue(n):>{w}.4f}" for n in names))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_irf(args) -> int:
    ds = load_dataset(args, need_exog=True)
    if args.spec == DEFAULTS["spec"]:
        # no explicit spec: the single-regressor model of the shocked variable
        name = args.regressor or args.tpu_col
        if name not in ds.exog_names:
            raise ConfigError(f"regressor {name!r} not available (have {list(ds.exog_names)})")
        specs = [DccSpec((name,), label=f"DCC-X_{name}")]
    else:
        specs = build_specs(args, ds)
    if len(specs) != 1 or specs[0].k == 0:
        raise ConfigError("irf needs exactly one specification with regressors")
    spec = specs[0]
    regressor = args.regressor or spec.regressors[0]
    if regressor not in spec.regressors:
        raise ConfigError(f"regressor {regressor!r} not in {spec.name}")
    pair = _csv_list(args.pair) or list(ds.returns.asset_names[:2])
    if len(pair) != 2:
        raise ConfigError("--pair needs two asset names")
    for p in pair:
        if p not in ds.returns.asset_names:
            raise ConfigError(f"asset {p!r} not in input")
    fit = two_step_fit(ds, spec, dcc_options(args))
    res = impulse_response(fit, regressor, tuple(pair), args.horizon, args.shock,
                           stochastic=bool(args.stochastic), seed=args.seed)
    out = _out(args)
    res.write_csv(out / "irf.csv")
    res.write_json(out / "irf.json")
    d = res.to_dict()
    sys.stdout.write(f"{spec.name}: {regressor} shock {d['shock']:.6g} on {pair[0]}/{pair[1]}: "
                     f"peak {d['peak']:.4f} pp at h={d['peak_horizon']}, "
                     f"half-life {d['half_life_days']} days\n")
    return 0


def cmd_break(args) -> int:
    dates = _csv_list(args.break_dates)
    if not dates:
        raise ConfigError("--break-dates is required")
    ds = load_dataset(args, need_exog=True)
    specs = build_specs(args, ds) if args.spec != DEFAULTS["spec"] else build_specs(
        argparse.Namespace(**{**vars(args), "spec": "tpu"}), ds)
    opts = dcc_options(args)
    garch_fits = fit_garch_panel(ds, opts.garch, opts.jobs)
    results, lines, failed = [], [], 0
    for spec in specs:
        if spec.k == 0:
            raise ConfigError("break tests need a specification with regressors")
        try:
            plain = two_step_fit(ds, spec, opts, garch_fits=garch_fits)
        except CorrxError as exc:
            logger.error("%s: %s", spec.name, exc)
            failed += len(dates)
            continue
        for d in dates:
            brk = DccSpec(spec.regressors, break_date=d, break_target=spec.regressors[0],
                          label=f"{spec.name}_break{d.replace('-', '')}")
            try:
                full = expand_break_spec(brk, ds.date_index)
                fit = two_step_fit(ds, brk, opts, garch_fits=garch_fits,
                                   starts=[nested_start(plain.dcc_fit, full)])
            except CorrxError as exc:
                logger.error("%s at %s: %s", spec.name, d, exc)
                failed += 1
                continue
            f = fit.dcc_fit
            k = spec.k
            theta3, delta = float(f.params.theta_x[0]), float(f.params.theta_x[k])
            se3, sed = float(f.se_robust[2]), float(f.se_robust[2 + k])
            lr = lr_test(plain.dcc_fit, f)
            results.append({
                "spec": spec.name, "date": d, "theta3": theta3, "se_theta3": se3,
                "delta": delta, "se_delta": sed, "lr": lr.stat, "lr_pvalue": lr.pvalue,
                "theta1": f.params.theta1, "theta2": f.params.theta2,
                "aic": f.aic, "bic": f.bic, "converged": f.converged,
            })
            e3, s3 = _cell(theta3, se3)
            ed, sd = _cell(delta, sed)
            lines.append(f"{spec.name:18} {d:>11} theta3 {e3:>10} {s3:>9}  delta {ed:>10} {sd:>9}"
                         f"  LR {lr.stat:8.3f} [{lr.pvalue:.4f}]")
    out = _out(args)
    clean = [{k: (float(f"{v:.12g}") if isinstance(v, float) and np.isfinite(v) else
                  (None if isinstance(v, float) else v)) for k, v in r.items()} for r in results]
    _write_json(out / "break.json", {"results": clean})
    sys.stdout.write("\n".join(lines) + ("\n" if lines else ""))
    return 0 if results else 1


def cmd_roll(args) -> int:
    ds = load_dataset(args, need_exog=False)
    out = _out(args)
    names = ds.returns.asset_names
    pair = _csv_list(args.pair) or list(names[:2])
    if len(pair) != 2 or any(p not in names for p in pair):
        raise ConfigError(f"--pair must name two of {list(names)}")
    i, j = names.index(pair[0]), names.index(pair[1])
    rc = rolling_correlation(ds.returns.values[:, i], ds.returns.values[:, j],
                             args.corr_window, ds.date_index)
    rc.write_csv(out / "rolling_corr.csv")
    sys.stdout.write(f"rolling correlation {pair[0]}/{pair[1]}: {rc.values.size} windows, "
                     f"threshold {rc.threshold:.4f}\n")
    specs = [s for s in build_specs(args, ds) if s.k > 0] if ds.exog else []
    for spec in specs[:1]:
        re = rolling_dccx(ds, spec, args.window, args.step, dcc_options(args), args.jobs)
        re.write_csv(out / "rolling_theta.csv")
        sys.stdout.write(f"{spec.name}: {re.theta3.size} windows, "
                         f"{int(re.converged.sum())} converged\n")
    return 0


def cmd_simulate(args) -> int:
    if args.sim_config:
        try:
            config = SimConfig.from_json(args.sim_config)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read simulation config: {exc}") from exc
        if args.seed != DEFAULTS["seed"]:
            config.seed = args.seed
    else:
        theta = tuple(float(v) for v in _csv_list(args.theta))
        if len(theta) < 2:
            raise ConfigError("--theta needs at least theta1,theta2")
        config = default_config(T=args.T, N=args.N, theta=theta, seed=args.seed,
                                break_index=args.break_index, break_delta=args.break_delta,
                                exog_style=args.exog_style)
    res = simulate_panel(config)
    out = _out(args)
    di.write_panel_csv(out / "returns.csv", res.returns.dates, res.returns.asset_names,
                       res.returns.values)
    if res.exog:
        di.write_panel_csv(out / "exog.csv", res.returns.dates, [s.name for s in res.exog],
                           np.column_stack([s.values for s in res.exog]))
    _write_json(out / "sim_config.json", config.to_dict())
    sys.stdout.write(f"simulated T={config.T} N={config.N} seed={config.seed} -> {out}\n")
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "estimate": cmd_estimate,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "irf": cmd_irf,
    "break-test": cmd_break,
    "roll": cmd_roll,
    "simulate": cmd_simulate,
}


def _setup_logging() -> None:
    level = os.environ.get("CORRX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve(args)
        return COMMANDS[args.command](args)
    except (ConfigError, DataError, SpecError, ValueError, OSError) as exc:
        sys.stderr.write(f"corrx {args.command}: error: {exc}\n")
        return 2
    except CorrxError as exc:
        sys.stderr.write(f"corrx {args.command}: failed: {exc}\n")
        return 1
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"corrx {args.command}: failed: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
