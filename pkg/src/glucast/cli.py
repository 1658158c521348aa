"""Command-line surface: stats, fit, forecast, evaluate, compare, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fit/model error.
Every run writes exactly one JSON manifest recording the command, resolved
configuration, input digests and seed; reruns with an equal manifest (minus
timestamps) produce byte-equal outputs.  Wall-clock timings go to stdout and
the manifest, never into report files, so reports stay byte-reproducible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import ForecasterConfig, ModelId, TimeSeries
from .eval import (
    BacktestProtocol,
    RefitPolicy,
    assemble_report,
    backtest_detail,
    range_stats,
    with_persistence,
)
from .forecasters import (
    ArimaParams,
    DesParams,
    TimeGluSettings,
    ablation_configs,
    config_to_dict,
    fit as fit_forecaster,
    load_model,
    save_model,
)
from .ingest import (
    SCHEMA_PRESETS,
    CsvSchema,
    GapAction,
    GapPolicy,
    IngestError,
    parse_csv,
    regularize,
)
from .neural import TimeGluConfig, TrainConfig, gradient_check
from .statespace import BatsConfig
from .svg import line_plot

USAGE_ERROR = 1
DATA_ERROR = 2
FIT_ERROR = 3

_MODEL_NAMES = {
    "persistence": ModelId.Persistence,
    "des": ModelId.DFS,
    "dfs": ModelId.DFS,
    "auto-arima": ModelId.AutoARIMA,
    "bats": ModelId.BATS,
    "tbats": ModelId.TBATS,
    "timeglu": ModelId.TimeGlu,
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise CliError(f"{self.prog}: {message}", USAGE_ERROR)


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """One per run: command, resolved options, input digests, timestamps."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.started_at = datetime.now(timezone.utc).isoformat()
        self.resolved = {
            k: v for k, v in sorted(vars(args).items())
            if k not in {"func", "manifest"} and not k.startswith("_")
        }
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.extra: dict = {}

    def add_input(self, path: Path) -> None:
        self.inputs[str(path)] = _sha256(path)

    def add_output(self, path: Path) -> None:
        self.outputs.append(str(path))

    def write(self, path: Path) -> None:
        doc = {
            "format": "glucast-manifest",
            "version": 1,
            "tool_version": __version__,
            "command": self.command,
            "resolved": self.resolved,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "extra": self.extra,
            "started_at": self.started_at,
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Shared argument groups
# ---------------------------------------------------------------------------

def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="CGM CSV file")
    p.add_argument("--preset", choices=sorted(SCHEMA_PRESETS), default="cgm-glucose")
    p.add_argument("--timestamp-column", default=None)
    p.add_argument("--value-column", default=None)
    p.add_argument("--timestamp-format", default=None,
                   help="iso8601, epoch, or a strptime pattern")
    p.add_argument("--subject", default=None, help="subject id for multi-subject files")
    p.add_argument("--interval", type=int, default=300, help="grid interval, seconds")
    p.add_argument("--max-gap", type=int, default=900,
                   help="largest gap (seconds) bridged by interpolation")
    p.add_argument("--gap-policy", choices=["split-segments", "error"],
                   default="split-segments")


def _add_protocol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, default=6, help="forecast steps per origin")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--refit", choices=["once", "every-origin"], default="once")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings in the report file")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    # smoothing
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    # arima
    p.add_argument("--order", default=None, help="fixed p,d,q (e.g. 2,1,1)")
    p.add_argument("--max-p", type=int, default=5)
    p.add_argument("--max-d", type=int, default=2)
    p.add_argument("--max-q", type=int, default=5)
    # bats / tbats
    p.add_argument("--seasonal-period", type=int, action="append", default=None)
    p.add_argument("--harmonics", type=int, action="append", default=None)
    p.add_argument("--no-box-cox", action="store_true")
    p.add_argument("--box-cox-lambda", type=float, default=None)
    p.add_argument("--no-trend", action="store_true")
    p.add_argument("--damping", action="store_true")
    p.add_argument("--arma-p", type=int, default=0)
    p.add_argument("--arma-q", type=int, default=0)
    # timeglu
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--noise-sigma", type=float, default=0.05)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--hidden", type=int, default=32, help="encoder hidden size")
    p.add_argument("--encoder-layers", type=int, default=2)
    p.add_argument("--attn-dim", type=int, default=32)
    p.add_argument("--decoder-hidden", type=int, default=32)
    p.add_argument("--encoder-uni", action="store_true",
                   help="unidirectional LSTM encoder (ablation)")
    p.add_argument("--decoder-uni", action="store_true",
                   help="unidirectional LSTM decoder (ablation)")
    p.add_argument("--no-attention", action="store_true", help="ablation")


def _schema_from_args(args) -> CsvSchema:
    schema = SCHEMA_PRESETS[args.preset]
    if args.timestamp_column or args.value_column or args.timestamp_format:
        schema = CsvSchema(
            timestamp_column=args.timestamp_column or schema.timestamp_column,
            value_column=args.value_column or schema.value_column,
            timestamp_format=args.timestamp_format or schema.timestamp_format,
            subject_column=schema.subject_column,
        )
    return schema


def _load_samples(args, manifest: Manifest):
    path = Path(args.input)
    if not path.exists():
        raise CliError(f"input file not found: {path}", DATA_ERROR)
    manifest.add_input(path)
    try:
        return parse_csv(path.read_bytes(), _schema_from_args(args), subject=args.subject)
    except IngestError as exc:
        raise CliError(f"{path}: {exc}", DATA_ERROR) from exc


def _load_series(args, manifest: Manifest) -> TimeSeries:
    samples = _load_samples(args, manifest)
    policy = GapPolicy(max_gap_s=args.max_gap, on_larger=GapAction(args.gap_policy))
    try:
        segments = regularize(
            samples, interval_s=args.interval, policy=policy,
            subject_id=args.subject or "",
        )
    except IngestError as exc:
        raise CliError(str(exc), DATA_ERROR) from exc
    if len(segments) > 1:
        longest = max(segments, key=len)
        print(
            f"note: {len(segments)} segments after gap splitting; "
            f"using the longest ({len(longest)} points)",
            file=sys.stderr,
        )
        return longest
    return segments[0]


def _model_config(args, model_name: str, interval_s: int, horizon: int) -> ForecasterConfig:
    try:
        model_id = _MODEL_NAMES[model_name]
    except KeyError:
        raise CliError(f"unknown model {model_name!r}", USAGE_ERROR) from None
    if model_id is ModelId.Persistence:
        params = None
    elif model_id is ModelId.DFS:
        params = DesParams(alpha=args.alpha, beta=args.beta)
    elif model_id is ModelId.AutoARIMA:
        order = None
        if args.order:
            try:
                p, d, q = (int(v) for v in args.order.split(","))
            except ValueError:
                raise CliError("--order must be p,d,q integers", USAGE_ERROR) from None
            order = (p, d, q)
        params = ArimaParams(order=order, max_p=args.max_p, max_d=args.max_d, max_q=args.max_q)
    elif model_id in (ModelId.BATS, ModelId.TBATS):
        periods = args.seasonal_period or [max(2, 86400 // interval_s)]
        harmonics = None
        if model_id is ModelId.TBATS:
            harmonics = args.harmonics or [3] * len(periods)
        try:
            params = BatsConfig(
                use_box_cox=not args.no_box_cox,
                use_trend=not args.no_trend,
                use_damping=args.damping,
                arma_p=args.arma_p,
                arma_q=args.arma_q,
                seasonal_periods=tuple(periods),
                harmonics=None if harmonics is None else tuple(harmonics),
                box_cox_lambda=args.box_cox_lambda,
            )
        except ValueError as exc:
            raise CliError(str(exc), USAGE_ERROR) from exc
    else:
        params = TimeGluSettings(
            arch=TimeGluConfig(
                encoder_hidden=args.hidden,
                encoder_layers=args.encoder_layers,
                attn_dim=args.attn_dim,
                decoder_hidden=args.decoder_hidden,
                encoder_bidirectional=not args.encoder_uni,
                decoder_bidirectional=not args.decoder_uni,
                use_attention=not args.no_attention,
            ),
            train=TrainConfig(
                window=args.window,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.learning_rate,
                noise_sigma=args.noise_sigma,
                seed=args.seed,
                patience=args.patience,
            ),
        )
    return ForecasterConfig(model_id=model_id, horizon=horizon, seed=args.seed, params=params)


def _write(path: Path, text: str, manifest: Manifest) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    manifest.add_output(path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_stats(args) -> int:
    manifest = Manifest("stats", args)
    samples = _load_samples(args, manifest)
    values = np.array([s.value for s in samples])
    ts = np.array([s.timestamp for s in samples])
    span_days = (ts.max() - ts.min()) / 86400.0 if len(ts) > 1 else 0.0
    lo, hi = args.lo, args.hi
    if lo >= hi:
        raise CliError("--lo must be below --hi", USAGE_ERROR)
    below = float(np.sum(values < lo)) / len(values)
    above = float(np.sum(values > hi)) / len(values)
    within = 1.0 - below - above

    print(f"n               {len(values)}")
    print(f"time range      {span_days:.1f} days")
    print(f"glucose (mg/dL) {values.mean():.1f} ± {values.std():.1f}")
    print(f"min - max       {values.min():.1f} - {values.max():.1f}")
    print(f"TIR [{lo:g}, {hi:g}]   {within:.3f}")
    print(f"TAR > {hi:g}       {above:.3f}")
    print(f"TBR < {lo:g}        {below:.3f}")

    if args.svg:
        # Daily profile: mean value per time-of-day bucket, one polyline per day.
        policy = GapPolicy(max_gap_s=args.max_gap, on_larger=GapAction(args.gap_policy))
        segments = regularize(samples, interval_s=args.interval, policy=policy)
        plots = []
        for seg in segments:
            stats = range_stats(seg, lo=lo, hi=hi)
            for day in stats.days:
                sel = [
                    (s.timestamp % 86400) / 3600.0
                    for s in seg.samples
                    if datetime.fromtimestamp(s.timestamp, tz=timezone.utc).date().isoformat()
                    == day.date
                ]
                vals = [
                    s.value
                    for s in seg.samples
                    if datetime.fromtimestamp(s.timestamp, tz=timezone.utc).date().isoformat()
                    == day.date
                ]
                plots.append((day.date, sel, vals))
        svg = line_plot(
            plots, title="Daily glucose profiles", x_label="hour of day (UTC)",
            y_label="glucose (mg/dL)",
        )
        _write(Path(args.svg), svg, manifest)
        print(f"wrote {args.svg}")

    manifest.write(Path(args.manifest))
    return 0


def _cmd_fit(args) -> int:
    manifest = Manifest("fit", args)
    series = _load_series(args, manifest)
    config = _model_config(args, args.model, series.interval_s, args.horizon)
    if config.model_id is ModelId.AutoARIMA and (config.params.order is None):
        manifest.extra["search_grid_size"] = (args.max_p + 1) * (args.max_q + 1)
        manifest.extra["d_candidates"] = args.max_d + 1
    try:
        t0 = time.perf_counter()
        fitted = fit_forecaster(series, config)
        elapsed = time.perf_counter() - t0
    except ValueError as exc:
        raise CliError(f"fit failed: {exc}", FIT_ERROR) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(fitted, out)
    manifest.add_output(out)
    manifest.extra["fit_seconds"] = elapsed
    print(f"fitted {config.model_id.value} on {len(series)} points "
          f"({elapsed:.2f}s) -> {out}")
    if args.loss_log and fitted.training_log is not None:
        _write(Path(args.loss_log), fitted.training_log.to_csv(), manifest)
        print(f"wrote {args.loss_log}")
    manifest.write(Path(args.manifest))
    return 0


def _cmd_forecast(args) -> int:
    manifest = Manifest("forecast", args)
    model_path = Path(args.model_file)
    if not model_path.exists():
        raise CliError(f"model file not found: {model_path}", DATA_ERROR)
    manifest.add_input(model_path)
    try:
        fitted = load_model(model_path)
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad model file: {exc}", DATA_ERROR) from exc
    series = _load_series(args, manifest)
    try:
        forecast = fitted.forecast_from(series, args.horizon)
    except ValueError as exc:
        raise CliError(f"forecast failed: {exc}", FIT_ERROR) from exc

    doc = {
        "model": config_to_dict(fitted.config),
        "forecast": forecast.to_dict(),
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(Path(args.out), text, manifest)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    if any(v < 0 for v in forecast.values):
        print("warning: negative forecast values (reported as-is)", file=sys.stderr)

    if args.svg:
        n_ctx = min(len(series), 4 * args.horizon)
        ctx = series.samples[-n_ctx:]
        xs_hist = [s.timestamp / 3600.0 for s in ctx]
        ys_hist = [s.value for s in ctx]
        xs_fc = [
            (forecast.origin_timestamp + (i + 1) * series.interval_s) / 3600.0
            for i in range(args.horizon)
        ]
        svg = line_plot(
            [("observed", xs_hist, ys_hist), (fitted.config.label, xs_fc, list(forecast.values))],
            title=f"{fitted.config.label} forecast",
            x_label="hours since epoch", y_label="glucose (mg/dL)",
        )
        _write(Path(args.svg), svg, manifest)
        print(f"wrote {args.svg}")
    manifest.write(Path(args.manifest))
    return 0


def _protocol_from_args(args) -> BacktestProtocol:
    try:
        return BacktestProtocol(
            train_fraction=args.train_fraction,
            horizon=args.horizon,
            stride=args.stride,
            refit=RefitPolicy(args.refit),
        )
    except ValueError as exc:
        raise CliError(str(exc), USAGE_ERROR) from exc


def _emit_report(args, manifest, series, protocol, configs) -> int:
    rows = []
    details = {}
    for config in configs:
        row, records = backtest_detail(config, series, protocol)
        rows.append(row)
        details[config.label] = records
    report = assemble_report(rows, series, protocol)

    print(report.to_table(include_timings=True))
    if args.report:
        _write(Path(args.report), report.to_json(include_timings=args.timings), manifest)
        print(f"wrote {args.report}")

    if args.svg:
        svg_dir = Path(args.svg)
        svg_dir.mkdir(parents=True, exist_ok=True)
        hours = series.timestamps / 3600.0
        for config in configs:
            records = details[config.label]
            if not records:
                continue
            firsts = [r for r in records if r.step == 1]
            xs = [hours[r.target_index] for r in firsts]
            svg = line_plot(
                [
                    ("actual", list(xs), [r.actual for r in firsts]),
                    ("predicted", list(xs), [r.predicted for r in firsts]),
                ],
                title=f"{config.label}: one-step-ahead vs actual",
                x_label="hours since epoch", y_label="glucose (mg/dL)",
            )
            name = config.label.lower().replace("[", "-").replace("]", "").replace(" ", "")
            out = svg_dir / f"{name}.svg"
            _write(out, svg, manifest)
        print(f"wrote plots to {svg_dir}")

    manifest.write(Path(args.manifest))
    failed = [r for r in report.rows if r.error is not None]
    if len(failed) == len(report.rows):
        return FIT_ERROR
    return 0


def _cmd_evaluate(args) -> int:
    manifest = Manifest("evaluate", args)
    series = _load_series(args, manifest)
    protocol = _protocol_from_args(args)
    config = _model_config(args, args.model, series.interval_s, protocol.horizon)
    configs = with_persistence([config], protocol.horizon)
    return _emit_report(args, manifest, series, protocol, configs)


def _cmd_compare(args) -> int:
    manifest = Manifest("compare", args)
    series = _load_series(args, manifest)
    protocol = _protocol_from_args(args)
    if args.ablate:
        if args.ablate != "timeglu":
            raise CliError("--ablate supports only: timeglu", USAGE_ERROR)
        base = _model_config(args, "timeglu", series.interval_s, protocol.horizon)
        configs = ablation_configs(base)
    else:
        names = [m.strip() for m in args.models.split(",") if m.strip()]
        if not names:
            raise CliError("--models must list at least one model", USAGE_ERROR)
        configs = [
            _model_config(args, name, series.interval_s, protocol.horizon)
            for name in names
        ]
        configs = with_persistence(configs, protocol.horizon)
    return _emit_report(args, manifest, series, protocol, configs)


def _cmd_gradcheck(args) -> int:
    manifest = Manifest("gradcheck", args)
    worst = 0.0
    for i in range(args.seeds):
        errors = gradient_check(seed=args.seed + i, step=args.step)
        seed_worst = max(errors.values())
        worst = max(worst, seed_worst)
        print(f"seed {args.seed + i}: max relative error {seed_worst:.3e}")
        if args.verbose:
            for name, err in sorted(errors.items()):
                print(f"  {name:<24} {err:.3e}")
    ok = worst <= args.tolerance
    print(f"overall max relative error {worst:.3e} "
          f"({'PASS' if ok else 'FAIL'} at tolerance {args.tolerance:g})")
    manifest.extra["max_relative_error"] = worst
    manifest.write(Path(args.manifest))
    return 0 if ok else FIT_ERROR


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="glucast", description=__doc__)
    parser.add_argument("--version", action="version", version=f"glucast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset summary and glycemic ranges")
    _add_input_args(p)
    p.add_argument("--lo", type=float, default=70.0)
    p.add_argument("--hi", type=float, default=180.0)
    p.add_argument("--svg", default=None, help="write a daily-profile plot here")
    p.add_argument("--manifest", default="stats-manifest.json")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("fit", help="fit one model and write a model file")
    _add_input_args(p)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_NAMES))
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--loss-log", default=None, help="epoch loss CSV (timeglu only)")
    _add_model_args(p)
    p.add_argument("--manifest", default="fit-manifest.json")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("forecast", help="forecast from a saved model over a history file")
    _add_input_args(p)
    p.add_argument("--model-file", required=True)
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--out", default=None, help="write forecast JSON here (default stdout)")
    p.add_argument("--svg", default=None)
    p.add_argument("--manifest", default="forecast-manifest.json")
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("evaluate", help="rolling-origin backtest of one model")
    _add_input_args(p)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_NAMES))
    _add_protocol_args(p)
    _add_model_args(p)
    p.add_argument("--report", default=None, help="report JSON path")
    p.add_argument("--svg", default=None, help="directory for overlay plots")
    p.add_argument("--manifest", default="evaluate-manifest.json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="backtest several models on identical folds")
    _add_input_args(p)
    p.add_argument("--models", default="persistence,des,auto-arima,bats,tbats,timeglu")
    p.add_argument("--ablate", default=None,
                   help="run the structure-ablation grid for a model (timeglu)")
    _add_protocol_args(p)
    _add_model_args(p)
    p.add_argument("--report", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--manifest", default="compare-manifest.json")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference check of the neural gradients")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--manifest", default="gradcheck-manifest.json")
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except IngestError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
