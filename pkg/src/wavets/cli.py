"""Command-line entry point.

Subcommands: train, eval, ablate, decompose, benchmark, sweep, synth,
table. Every failure exits nonzero with a one-line machine-parsable
reason on stderr (``error <reason>: ...``).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import evaluation as ev
from . import model as model_mod
from . import wavelet
from .config import RunConfig, add_config_arguments, config_hash, resolve_config, write_config
from .exceptions import InvalidConfigError, ReconstructionError, WavetsError
from .training import evaluate_model, train_model

PROG = "wavets"


# ---------------------------------------------------------------------------
# shared pipeline pieces


def load_series(cfg: RunConfig) -> tuple[data_mod.Series, str]:
    """Resolve the data source: a CSV path or a synth:<kind> spec."""
    if not cfg.data:
        raise InvalidConfigError("no data source configured (set --data)")
    if cfg.data.startswith("synth:"):
        kind = cfg.data.split(":", 1)[1]
        series = data_mod.synth(kind, cfg.synth_length, cfg.synth_channels, cfg.synth_seed)
        return series, cfg.data
    path = Path(cfg.data)
    if not path.exists():
        raise data_mod.ParseError(f"dataset file not found: {path}")
    return data_mod.load_csv(path), path.stem


def prepare_splits(cfg: RunConfig, series: data_mod.Series):
    spec = data_mod.SplitSpec(scheme=cfg.split, train_frac=cfg.train_frac, val_frac=cfg.val_frac)
    train_v, val_v, test_v = data_mod.split(series, spec, lookback=cfg.lookback)
    if cfg.standardize:
        _, (train_v, val_v, test_v) = data_mod.standardize(train_v, val_v, test_v)
    return train_v, val_v, test_v


def run_one_seed(cfg: RunConfig, seed: int, measure_infer: bool = True) -> tuple[ev.RunReport, dict, model_mod.ModelConfig, dict]:
    """Train + evaluate one seed; returns (report, details, model cfg, params)."""
    series, dataset_name = load_series(cfg)
    train_v, val_v, test_v = prepare_splits(cfg, series)
    mcfg = cfg.model_config(series.channels)
    result = train_model(mcfg, train_v, val_v, cfg.train_settings(), seed)
    metrics = evaluate_model(mcfg, result.params, test_v, cfg.batch_size)

    macs = ev.count_macs(mcfg, cfg.batch_size)
    report = ev.RunReport(
        dataset=dataset_name,
        variant=cfg.variant,
        lookback=cfg.lookback,
        horizon=cfg.horizon,
        channels=series.channels,
        bank=cfg.bank,
        seed=seed,
        mse=metrics["mse"],
        mae=metrics["mae"],
        param_count=ev.count_params(mcfg).total,
        macs_per_sample=macs.linear_per_sample,
        macs_per_batch=macs.linear_per_batch,
        transform_macs_per_sample=macs.transform_per_sample,
        epochs_trained=result.epochs_trained,
        epoch_time_s=result.mean_epoch_seconds,
        per_horizon_mse=metrics["per_horizon_mse"],
        per_horizon_mae=metrics["per_horizon_mae"],
        hardware=ev.hardware_note(),
    )
    if measure_infer and len(test_v.values) >= cfg.lookback + cfg.horizon:
        sampler = data_mod.WindowSampler(test_v, cfg.lookback, cfg.horizon)
        batch = sampler.gather(sampler.origins[:1])
        report.infer_time_ms = 1000.0 * ev.time_mean(
            lambda: model_mod.predict(mcfg, result.params, batch.x), repeats=100
        )

    persistence = _persistence_metrics(test_v, cfg)
    details = {
        "seed": seed,
        "history": [asdict(h) for h in result.history],
        "best_epoch": result.best_epoch,
        "metrics": metrics,
        "persistence": persistence,
        "macs": {
            "linear_per_sample": macs.linear_per_sample,
            "transform_per_sample": macs.transform_per_sample,
            "total_per_sample": macs.total_per_sample,
            "batch_size": macs.batch_size,
        },
        "param_breakdown": ev.count_params(mcfg).breakdown,
    }
    return report, details, mcfg, result.params


def _persistence_metrics(test_v: data_mod.Series, cfg: RunConfig) -> dict:
    sampler = data_mod.WindowSampler(test_v, cfg.lookback, cfg.horizon)
    total_sq = total_abs = 0.0
    count = 0
    for batch in sampler.batches(cfg.batch_size):
        pred = ev.persistence_baseline(batch)
        total_sq += float(((pred - batch.y) ** 2).sum())
        total_abs += float(np.abs(pred - batch.y).sum())
        count += batch.y.size
    return {"mse": total_sq / count, "mae": total_abs / count}


def _write_gate_report(cfg: RunConfig, mcfg, params, path: Path) -> None:
    """Channel-to-expert assignment diagnostics on the first test batch."""
    from . import moe as moe_mod

    series, _ = load_series(cfg)
    _, _, test_v = prepare_splits(cfg, series)
    sampler = data_mod.WindowSampler(test_v, cfg.lookback, cfg.horizon)
    batch = sampler.gather(sampler.origins[: cfg.batch_size])
    band = model_mod.low_frequency_band(mcfg, params, batch.x)
    rows = moe_mod.gate_report(params, mcfg.moe, band, series.channel_names, prefix="moe.")
    moe_mod.write_gate_report_csv(rows, path, mcfg.moe.num_experts)


def make_run_dir(cfg: RunConfig) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = Path(cfg.out) / f"{stamp}-{config_hash(cfg)}"
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    seeds = cfg.seed_list()
    run_dir = make_run_dir(cfg)
    write_config(cfg, run_dir / "config.json")

    reports, all_details = [], []
    for seed in seeds:
        report, details, mcfg, params = run_one_seed(cfg, seed)
        suffix = "" if len(seeds) == 1 else f"_seed{seed}"
        model_mod.save_model(mcfg, params, run_dir / f"checkpoint{suffix}.json")
        if mcfg.moe is not None:
            _write_gate_report(cfg, mcfg, params, run_dir / f"gates{suffix}.csv")
        reports.append(report)
        all_details.append(details)
        print(
            f"seed {seed}: test mse {report.mse:.6f} mae {report.mae:.6f} "
            f"({report.epochs_trained} epochs, best {details['best_epoch']})"
        )

    ev.write_reports_csv(reports, run_dir / "report.csv")
    summary = {}
    if len(reports) > 1:
        mses = [r.mse for r in reports]
        maes = [r.mae for r in reports]
        summary = {
            "mse_mean": float(np.mean(mses)),
            "mse_std": float(np.std(mses)),
            "mae_mean": float(np.mean(maes)),
            "mae_std": float(np.std(maes)),
        }
        print(
            f"{len(reports)} seeds: mse {summary['mse_mean']:.6f}±{summary['mse_std']:.6f} "
            f"mae {summary['mae_mean']:.6f}±{summary['mae_std']:.6f}"
        )
    (run_dir / "details.json").write_text(
        json.dumps({"runs": all_details, "summary": summary}, indent=1, sort_keys=True) + "\n"
    )
    print(f"artifacts: {run_dir}")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    mcfg, params = model_mod.load_model(args.checkpoint)
    series, dataset_name = load_series(cfg)
    if series.channels != mcfg.channels:
        raise InvalidConfigError(
            f"checkpoint expects {mcfg.channels} channels, data has {series.channels}"
        )
    # Window geometry comes from the checkpoint, not the flags.
    cfg_eval = RunConfig(**{**cfg.to_dict(), "lookback": mcfg.lookback, "horizon": mcfg.horizon})
    _, _, test_v = prepare_splits(cfg_eval, series)
    metrics = evaluate_model(mcfg, params, test_v, cfg.batch_size)
    print(f"{dataset_name}: test mse {metrics['mse']:.6f} mae {metrics['mae']:.6f} "
          f"({metrics['windows']} windows)")
    return 0


GRID_DELTA_FIXED = ("delta-fixed", "dfix")


def _grid_cell_config(cfg: RunConfig, token: str) -> RunConfig:
    token = token.strip()
    if token.upper() in model_mod.VARIANTS:
        return replace(cfg, variant=token.upper())
    if token.lower() in wavelet.BANK_NAMES:
        return replace(cfg, bank=token.lower())
    if token.lower() in GRID_DELTA_FIXED:
        return replace(cfg, delta_mode="fixed")
    raise InvalidConfigError(
        f"unknown grid cell {token!r}: use a variant, a filter bank, or delta-fixed"
    )


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    tokens = [t for t in (args.grid or "").split(",") if t.strip()]
    run_dir = make_run_dir(cfg)
    write_config(cfg, run_dir / "config.json")
    rows = []
    for token in tokens:
        try:
            cell_cfg = _grid_cell_config(cfg, token)
            report, details, _, _ = run_one_seed(cell_cfg, cell_cfg.seed)
            rows.append(
                {"cell": token, "status": "ok", **dict(zip(ev.RunReport.CSV_FIELDS, report.csv_row()))}
            )
            print(f"cell {token}: mse {report.mse:.6f} mae {report.mae:.6f}")
        except WavetsError as exc:
            rows.append({"cell": token, "status": f"error:{exc.reason}"})
            print(f"cell {token}: failed ({exc.reason}: {exc})", file=sys.stderr)
    header = ["cell", "status", *ev.RunReport.CSV_FIELDS]
    with open(run_dir / "ablation.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, restval="")
        writer.writeheader()
        writer.writerows(rows)
    print(f"artifacts: {run_dir}")
    return 0


_BAND_LABEL_APPROX = "approx"


def cmd_decompose(args) -> int:
    series = data_mod.load_csv(args.input)
    bank = wavelet.get_bank(args.bank)
    bands = wavelet.dwt_multi(series.values.T, bank, args.levels)  # channels on rows
    out_path = Path(args.output)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "band", "index", "value"])
        for level, pair in enumerate(bands, start=1):
            for c, name in enumerate(series.channel_names):
                for i, value in enumerate(pair.detail[c]):
                    writer.writerow([name, f"detail{level}", i, repr(float(value))])
        deepest = bands[-1]
        for c, name in enumerate(series.channel_names):
            for i, value in enumerate(deepest.approx[c]):
                writer.writerow([name, _BAND_LABEL_APPROX, i, repr(float(value))])
    print(f"wrote {out_path}")
    if args.reconstruct:
        recon = wavelet.idwt_multi(bands, bank).T
        err = float(np.max(np.abs(recon - series.values)))
        data_mod.save_csv(
            data_mod.Series(values=recon, channel_names=series.channel_names), args.reconstruct
        )
        print(f"reconstruction max abs error: {err:.3e}")
        if err > 1e-8:
            raise ReconstructionError(f"reconstruction error {err:.3e} exceeds 1e-8")
    return 0


def cmd_benchmark(args) -> int:
    cfg = resolve_config(args)
    variants = [v.strip().upper() for v in args.variants.split(",") if v.strip()]
    channels = args.channels
    header = [
        "variant",
        "param_count",
        "macs_per_sample",
        "macs_per_batch",
        "transform_macs_per_sample",
        "total_macs_per_batch",
        "epoch_time_s",
        "infer_time_ms",
    ]
    rows = []
    for variant in variants:
        vcfg = RunConfig(**{**cfg.to_dict(), "variant": variant})
        mcfg = vcfg.model_config(channels)
        params_total = ev.count_params(mcfg).total
        macs = ev.count_macs(mcfg, cfg.batch_size)
        row = {
            "variant": variant,
            "param_count": params_total,
            "macs_per_sample": macs.linear_per_sample,
            "macs_per_batch": macs.linear_per_batch,
            "transform_macs_per_sample": macs.transform_per_sample,
            "total_macs_per_batch": macs.total_per_batch,
            "epoch_time_s": "",
            "infer_time_ms": "",
        }
        if args.measure:
            row["epoch_time_s"], row["infer_time_ms"] = _measure_speed(
                mcfg, vcfg, args.bench_windows
            )
        rows.append(row)
    writer = csv.DictWriter(sys.stdout, fieldnames=header)
    writer.writeheader()
    writer.writerows(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            file_writer = csv.DictWriter(fh, fieldnames=header)
            file_writer.writeheader()
            file_writer.writerows(rows)
        write_config(cfg, Path(args.output).with_suffix(".config.json"))
    return 0


def _measure_speed(mcfg: model_mod.ModelConfig, cfg: RunConfig, bench_windows: int):
    from .autodiff import constant, mse_loss
    from .model import forward, init_params
    from .optim import Adam

    rng = np.random.default_rng(0)
    length = mcfg.lookback + mcfg.horizon + bench_windows
    series = data_mod.Series(
        values=rng.normal(size=(length, mcfg.channels)),
        channel_names=[f"ch{i}" for i in range(mcfg.channels)],
    )
    sampler = data_mod.WindowSampler(series, mcfg.lookback, mcfg.horizon)
    params = init_params(mcfg, 0)
    optimizer = Adam(params, lr=cfg.lr)

    def one_epoch():
        for batch in sampler.batches(cfg.batch_size):
            optimizer.zero_grad()
            loss = mse_loss(forward(mcfg, params, batch.x), constant(batch.y))
            loss.backward()
            optimizer.step()

    epoch_s = ev.time_mean(one_epoch, repeats=3)
    single = sampler.gather(sampler.origins[:1])
    infer_ms = 1000.0 * ev.time_mean(lambda: model_mod.predict(mcfg, params, single.x), repeats=100)
    return repr(epoch_s), repr(infer_ms)


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    lengths = [int(tok) for tok in args.lengths.split(",") if tok.strip()]
    run_dir = make_run_dir(cfg)
    write_config(cfg, run_dir / "config.json")
    rows = []
    for length in lengths:
        try:
            cell_cfg = replace(cfg, lookback=length)
            report, _, _, _ = run_one_seed(cell_cfg, cell_cfg.seed, measure_infer=False)
            rows.append({"L": length, "mse": repr(report.mse), "mae": repr(report.mae), "status": "ok"})
            print(f"L={length}: mse {report.mse:.6f} mae {report.mae:.6f}")
        except WavetsError as exc:
            rows.append({"L": length, "mse": "", "mae": "", "status": f"error:{exc.reason}"})
            print(f"L={length}: failed ({exc.reason}: {exc})", file=sys.stderr)
    with open(run_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["L", "mse", "mae", "status"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"artifacts: {run_dir}")
    return 0


def cmd_synth(args) -> int:
    series = data_mod.synth(args.kind, args.length, args.channels, args.seed)
    data_mod.save_csv(series, args.output)
    print(f"wrote {args.output} ({series.length} rows x {series.channels} channels)")
    return 0


def cmd_table(args) -> int:
    reports = []
    root = Path(args.runs)
    for path in sorted(root.rglob("report.csv")):
        reports.extend(ev.read_reports_csv(path))
    if not reports:
        print(f"no report.csv files under {root}")
        return 0
    # dataset -> horizon -> variant -> list of (mse, mae)
    cells: dict[str, dict[int, dict[str, list[tuple[float, float]]]]] = {}
    for row in reports:
        cells.setdefault(row["dataset"], {}).setdefault(int(row["horizon"]), {}).setdefault(
            row["variant"], []
        ).append((float(row["mse"]), float(row["mae"])))
    lines = []
    for dataset in sorted(cells):
        by_horizon = cells[dataset]
        variants = sorted({v for grid in by_horizon.values() for v in grid})
        lines.append(f"# {dataset} (cells: mse/mae, mean over seeds)")
        lines.append(",".join(["horizon", *variants]))
        for horizon in sorted(by_horizon):
            row = [str(horizon)]
            for variant in variants:
                pairs = by_horizon[horizon].get(variant)
                if pairs:
                    mean_mse = float(np.mean([p[0] for p in pairs]))
                    mean_mae = float(np.mean([p[1] for p in pairs]))
                    row.append(f"{mean_mse:.3f}/{mean_mae:.3f}")
                else:
                    row.append("")
            lines.append(",".join(row))
        lines.append("")
    text = "\n".join(lines)
    print(text, end="")
    if args.output:
        Path(args.output).write_text(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model (or several seeds) and evaluate it")
    add_config_arguments(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint on a dataset's test split")
    p_eval.add_argument("--checkpoint", required=True)
    add_config_arguments(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="run a grid of variants / banks / delta modes")
    p_ablate.add_argument("--grid", default="", help="comma list, e.g. B,LF,HF or haar,d4,sym4,coif1")
    add_config_arguments(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_dec = sub.add_parser("decompose", help="dump wavelet bands of a CSV")
    p_dec.add_argument("--input", required=True)
    p_dec.add_argument("--output", required=True)
    p_dec.add_argument("--bank", default="haar")
    p_dec.add_argument("--levels", type=int, default=1)
    p_dec.add_argument("--reconstruct", default=None, help="also invert and write this CSV")
    p_dec.set_defaults(func=cmd_decompose)

    p_bench = sub.add_parser("benchmark", help="parameter/MAC accounting (optionally timed)")
    p_bench.add_argument("--variants", default="B,S,M")
    p_bench.add_argument("--channels", type=int, required=True)
    p_bench.add_argument("--measure", action="store_true", help="also time epochs and inference")
    p_bench.add_argument("--bench-windows", type=int, default=128)
    p_bench.add_argument("--output", default=None)
    add_config_arguments(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)

    p_sweep = sub.add_parser("sweep", help="train across input lengths at fixed horizon")
    p_sweep.add_argument("--lengths", required=True, help="comma list of lookback lengths")
    add_config_arguments(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_synth = sub.add_parser("synth", help="generate a synthetic CSV")
    p_synth.add_argument("--kind", default="sine_mix", choices=data_mod.SYNTH_KINDS)
    p_synth.add_argument("--length", type=int, default=4000)
    p_synth.add_argument("--channels", type=int, default=4)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--output", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_table = sub.add_parser("table", help="aggregate run reports into a horizon x variant grid")
    p_table.add_argument("--runs", required=True, help="directory to scan for report.csv files")
    p_table.add_argument("--output", default=None)
    p_table.set_defaults(func=cmd_table)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WavetsError as exc:
        print(f"error {exc.reason}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error data: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
