"""Command-line entry point.

Subcommands: validate, rules-scan, forecast, train-gate, backtest, prompt,
report.  Options may also come from a JSON config file (--config); explicit
flags override file values.  Exit codes: 0 success, 1 validation or domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluation import (
    EvalConfig,
    emit_forecast_trace,
    parse_report_csv,
    parse_report_json,
    report,
    summarize,
    train_gate_on_series,
    walk_forward,
)
from .forecaster import (
    BASELINES,
    load_external_forecasts,
    save_external_forecasts,
)
from .market_data import Series, Window, format_timestamp, parse_csv
from .indicators import fit_resistance_line, fit_support_line, resample_line
from .prompt_prefix import BITCOIN_DOMAIN, PromptConfig, build_prompt
from .reliability_gate import model_from_json, model_to_json
from .rule_engine import bottoming_tail_rule, evaluate_rule, explain

DEFAULTS = {
    "symbol": "",
    "model": "drift",
    "lookback": 110,
    "horizon": 7,
    "stride": 1,
    "train_fraction": 0.7,
    "threshold": 0.5,
    "epochs": 500,
    "learning_rate": 0.1,
    "seed": 0,
    "coverage": 0.68,
    "samples": 6,
    "asset": "Bitcoin",
    "domain": BITCOIN_DOMAIN,
    "format": "table",
    "required_rules": [],
}

CONFIG_KEYS = tuple(DEFAULTS)


def _merge_config(args: argparse.Namespace) -> dict:
    """Layer defaults, then the JSON config file, then explicit flags."""
    merged = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        file_config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        unknown = set(file_config) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config file keys: {sorted(unknown)}")
        merged.update(file_config)
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None and value != []:
            merged[key] = value
    return merged


def _load_series(path: str, symbol: str) -> Series:
    return parse_csv(Path(path).read_bytes(), symbol=symbol or Path(path).stem)


def _trailing_window(series: Series, lookback: int) -> Window:
    if len(series) < lookback:
        raise ValueError(
            f"insufficient history: need {lookback} candles, have {len(series)}"
        )
    return series.window(len(series) - lookback, len(series))


def _resolve_forecaster(name: str, coverage: float, series: Series):
    if name in BASELINES:
        baseline = BASELINES[name]
        return lambda w, horizon: baseline(w, horizon, coverage=coverage)
    if name.startswith("external:"):
        path = name.split(":", 1)[1]
        loaded = load_external_forecasts(Path(path).read_bytes(), series=series)
        by_ts = {ts: f for ts, f in loaded}

        def external(w: Window, horizon: int):
            ts = w.series.candles[w.end - 1].timestamp
            forecast = by_ts.get(ts)
            if forecast is None:
                label = format_timestamp(ts, series.timestamp_format)
                raise ValueError(f"no external forecast for origin {label}")
            if forecast.horizon != horizon:
                raise ValueError(
                    f"external forecast horizon {forecast.horizon} != configured {horizon}"
                )
            return forecast

        return external
    raise ValueError(f"unknown forecaster {name!r} (naive|drift|linreg|external:PATH)")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit(text: str, out: str | None) -> None:
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    print(f"OK {len(series)} candles")
    return 0


def cmd_rules_scan(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    rule = bottoming_tail_rule()
    lookback = rule.max_lookback
    if len(series) < lookback:
        raise ValueError(
            f"insufficient history: rule needs {lookback} candles, have {len(series)}"
        )
    matches = 0
    for end in range(lookback, len(series) + 1):
        verdict = evaluate_rule(rule, series.window(end - lookback, end))
        if verdict.passed:
            matches += 1
        if verdict.passed or args.all:
            index = end - 1
            ts = format_timestamp(series.candles[index].timestamp, series.timestamp_format)
            print(f"candle {index} ({ts})")
            for line in explain(verdict):
                print(f"  {line}")
            print()
    print(f"{matches} matches")
    return 0


def cmd_forecast(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    forecaster = _resolve_forecaster(cfg["model"], cfg["coverage"], series)
    w = _trailing_window(series, cfg["lookback"])
    forecast = forecaster(w, cfg["horizon"])
    ts = series.candles[w.end - 1].timestamp
    _emit(save_external_forecasts([(ts, forecast)], series.timestamp_format), args.out)
    return 0


def _eval_config(cfg: dict) -> EvalConfig:
    return EvalConfig(
        lookback=cfg["lookback"],
        horizon=cfg["horizon"],
        stride=cfg["stride"],
        train_fraction=cfg["train_fraction"],
        threshold=cfg["threshold"],
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        seed=cfg["seed"],
        required_rules=tuple(cfg["required_rules"]),
    )


def cmd_train_gate(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    forecaster = _resolve_forecaster(cfg["model"], cfg["coverage"], series)
    gate = train_gate_on_series(series, forecaster, [bottoming_tail_rule()], _eval_config(cfg))
    _write_text(args.out, model_to_json(gate))
    print(f"gate trained: {gate.dim} features, threshold {gate.threshold}, saved to {args.out}")
    return 0


def cmd_backtest(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    forecaster = _resolve_forecaster(cfg["model"], cfg["coverage"], series)
    rules = [bottoming_tail_rule()]
    eval_cfg = _eval_config(cfg)
    if args.gate_model:
        gate = model_from_json(Path(args.gate_model).read_text(encoding="utf-8"))
    else:
        gate = train_gate_on_series(series, forecaster, rules, eval_cfg)
    records = walk_forward(series, forecaster, gate, rules, eval_cfg)
    rows = summarize(records, model_label=cfg["model"])
    print(report(rows, "table"), end="")
    if args.report_out:
        _write_text(args.report_out, report(rows, cfg["format"]))
    if args.trace_out:
        _write_text(args.trace_out, emit_forecast_trace(records, series))
    return 0


def cmd_prompt(args) -> int:
    cfg = _merge_config(args)
    series = _load_series(args.data, cfg["symbol"])
    w = _trailing_window(series, cfg["lookback"])
    support = resample_line(fit_support_line(w), len(w), cfg["samples"])
    resistance = resample_line(fit_resistance_line(w), len(w), cfg["samples"])
    prompt_cfg = PromptConfig(
        asset=cfg["asset"],
        domain=cfg["domain"],
        lookback=cfg["lookback"],
        horizon=cfg["horizon"],
        line_samples=cfg["samples"],
    )
    text = build_prompt(w, support, resistance, prompt_cfg)
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    return 0


def cmd_report(args) -> int:
    cfg = _merge_config(args)
    text = Path(args.rows).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        rows = parse_report_json(text)
    else:
        rows = parse_report_csv(text)
    _emit(report(rows, cfg["format"]), args.out)
    return 0


def _add_config_flags(parser: argparse.ArgumentParser, *, gate: bool = False) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--symbol", help="symbol label (default: file stem)")
    parser.add_argument("--model", help="forecaster: naive|drift|linreg|external:PATH")
    parser.add_argument("--lookback", type=int, help="window length (default 110)")
    parser.add_argument("--horizon", type=int, help="forecast steps (default 7)")
    parser.add_argument("--coverage", type=float, help="central interval coverage (default 0.68)")
    if gate:
        parser.add_argument("--stride", type=int, help="evaluation origin step (default 1)")
        parser.add_argument("--train-fraction", dest="train_fraction", type=float,
                            help="fraction of origins used to train the gate (default 0.7)")
        parser.add_argument("--threshold", type=float, help="gate score threshold (default 0.5)")
        parser.add_argument("--epochs", type=int, help="gate training epochs (default 500)")
        parser.add_argument("--learning-rate", dest="learning_rate", type=float,
                            help="gate learning rate (default 0.1)")
        parser.add_argument("--seed", type=int, help="training seed (default 0)")
        parser.add_argument("--require-rule", dest="required_rules", action="append",
                            help="rule that must pass for execution (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="candlegate",
        description="Selective-execution OHLCV forecasting with an explainable gate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate an OHLCV CSV file")
    p.add_argument("data")
    p.add_argument("--config")
    p.add_argument("--symbol")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("rules-scan", help="scan a series for bottoming-tail candles")
    p.add_argument("data")
    p.add_argument("--config")
    p.add_argument("--symbol")
    p.add_argument("--all", action="store_true", help="print a block for every candle")
    p.set_defaults(func=cmd_rules_scan)

    p = sub.add_parser("forecast", help="forecast from the trailing window")
    p.add_argument("data")
    p.add_argument("--out", help="write forecast CSV here instead of stdout")
    _add_config_flags(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("train-gate", help="train the reliability gate and save it")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="output path for the gate model JSON")
    _add_config_flags(p, gate=True)
    p.set_defaults(func=cmd_train_gate)

    p = sub.add_parser("backtest", help="walk-forward backtest with metric report")
    p.add_argument("data")
    p.add_argument("--gate-model", dest="gate_model", help="pre-trained gate model JSON")
    p.add_argument("--report-out", dest="report_out", help="write the metrics report here")
    p.add_argument("--trace-out", dest="trace_out", help="write the forecast trace CSV here")
    p.add_argument("--format", choices=("table", "json", "csv"), help="report file format")
    _add_config_flags(p, gate=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("prompt", help="emit the structured prompt prefix text")
    p.add_argument("data")
    p.add_argument("--out", help="also write the prompt to this file")
    p.add_argument("--asset", help="asset name used in the template (default Bitcoin)")
    p.add_argument("--domain", help="domain paragraph override")
    p.add_argument("--samples", type=int, help="points per trend-line sequence (default 6)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("report", help="re-render a saved report (JSON or CSV)")
    p.add_argument("rows", help="report file produced by backtest")
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--format", choices=("table", "json", "csv"))
    p.add_argument("--config")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
