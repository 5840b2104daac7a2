"""Command-line entry point: echogeo <subcommand> ..."""
import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysis.change_points import detect_change_points
from src.analysis.reconstruction import reconstruct, sliding_estimate, write_trace_csv
from src.cochlea.dechirp import ThresholdMode
from src.cochlea.spectrogram import Cochleagram, cochleagram_from_timeseries, crop_bins
from src.datasets.generators import GENERATORS
from src.datasets.records import DatasetManifest, glint_count_targets, gs_windows
from src.networks.architectures import TIMESTEP_SWEEP, build_cnn, build_gs_net, build_rnn
from src.networks.checkpoint import load_checkpoint, save_checkpoint
from src.networks.network import Network
from src.networks.training import OptimizerKind, TrainConfig, accuracy, default_epochs, train
from src.sonar.broadcast import Window
from src.sonar.scene import TimeSeries, simulate_from_spec
from src.utils.config import Settings, configure_logging
from src.utils.errors import DataError, EchoGeometryError, ParameterError
from src.utils.helpers import parse_quantity, parse_quantity_list, read_json, sidecar_path, write_json

logger = logging.getLogger(__name__)

# Published headline numbers, reported beside measured values.
REFERENCE = {
    "cnn": {"val_acc": 0.997, "eval_acc": 0.869},
    "rnn": {"val_acc": 0.985, "eval_acc": 0.828},
    "gs": {"train_acc": 0.996, "train_loss": 0.029},
}


def write_run_config(args: argparse.Namespace, path: Path, extra: Optional[Dict] = None) -> Path:
    """Resolved arguments of this run, written next to its outputs."""
    config = {k: v for k, v in vars(args).items() if k != "func"}
    config.update(extra or {})
    return write_json(config, path)


def _config_path(out: Path) -> Path:
    out = Path(out)
    return out / "run_config.json" if out.suffix == "" else out.with_name(f"{out.stem}.config.json")


def load_input_cochleagram(path: Path, n_bins: Optional[int] = 250) -> Cochleagram:
    """Accept either a cochleagram or a time-series file."""
    kind = read_json(sidecar_path(path)).get("kind", "timeseries")
    if kind == "cochleagram":
        return Cochleagram.load(path)
    if kind == "timeseries":
        return cochleagram_from_timeseries(TimeSeries.load(path), n_bins=n_bins)
    raise DataError(f"{path}: unsupported file kind {kind!r}")


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    offsets = parse_quantity_list(args.glints, "mm")
    duration = parse_quantity(args.duration, "ms")
    snr_db = None if args.noise == "off" else args.snr
    ts = simulate_from_spec(offsets, duration, snr_db=snr_db, seed=args.seed, window=Window(args.window))
    out = Path(args.out or settings.data_dir / "simulate" / "echo.f32")
    ts.save(out)
    write_run_config(args, _config_path(out), {"glint_offsets_m": offsets, "duration_s": duration})
    print(f"Wrote {len(ts)} samples ({len(offsets)} glints, {duration * 1e3:g} ms) to {out}")
    return 0


def cmd_cochleagram(args: argparse.Namespace, settings: Settings) -> int:
    ts = TimeSeries.load(Path(args.input))
    cochleagram = cochleagram_from_timeseries(ts, n_bins=args.bins, threshold=args.threshold,
                                              mode=ThresholdMode(args.threshold_mode))
    if args.crop:
        cochleagram = crop_bins(cochleagram)
    out = Path(args.out)
    cochleagram.save(out)
    write_run_config(args, _config_path(out))
    print(f"Wrote {cochleagram.values.shape[0]}x{cochleagram.n_bins} cochleagram to {out}")
    return 0


def cmd_gen_dataset(args: argparse.Namespace, settings: Settings) -> int:
    out = Path(args.out or settings.data_dir / args.kind)
    generator = GENERATORS[args.kind](out, seed=args.seed, settings=settings)
    manifest = generator.generate()
    write_run_config(args, out / "run_config.json")
    print(f"{args.kind} corpus: {manifest.counts()} samples in {out}")
    return 0


def make_network(arch: str, seed: int, timesteps: int = 250) -> Network:
    if arch == "cnn":
        return build_cnn(seed=seed)
    if arch == "rnn":
        return build_rnn(timesteps=timesteps, seed=seed)
    if arch == "gs":
        return build_gs_net(seed=seed)
    raise ParameterError(f"Unknown architecture {arch!r}")


def training_arrays(arch: str, data_dir: Path):
    """(x, y, x_val, y_val) for the chosen architecture."""
    manifest = DatasetManifest.load(data_dir)
    if arch == "gs":
        if manifest.kind != "gs":
            raise DataError(f"{data_dir} holds a {manifest.kind!r} corpus; the gs net needs a gs corpus")
        x, y = gs_windows(manifest)
        return x, y, None, None
    if manifest.kind != "classify":
        raise DataError(f"{data_dir} holds a {manifest.kind!r} corpus; {arch} needs a classify corpus")
    x, records = manifest.arrays("train")
    x_val, val_records = manifest.arrays("val")
    return x, glint_count_targets(records), x_val, glint_count_targets(val_records)


def train_config_from_args(args: argparse.Namespace, network: Network, seed: int) -> TrainConfig:
    epochs = default_epochs(args.arch) if args.epochs is None else args.epochs
    return TrainConfig(epochs=epochs, batch_size=args.batch, learning_rate=args.lr,
                       optimizer=OptimizerKind(args.optimizer), seed=seed,
                       loss=network.architecture["loss"])


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    network = make_network(args.arch, args.seed, args.timesteps)
    x, y, x_val, y_val = training_arrays(args.arch, Path(args.data))
    config = train_config_from_args(args, network, args.seed)
    result = train(network, x, y, config, x_val, y_val)

    out = Path(args.out or settings.data_dir / "models" / f"{args.arch}.ckpt")
    save_checkpoint(network, out, config.to_dict())
    result.history.to_csv(out.with_name(f"{out.stem}_history.csv"), index=False)
    write_run_config(args, _config_path(out), {"train_config": config.to_dict()})
    final = result.history.iloc[-1]
    print(f"{args.arch}: initial loss {result.history.iloc[0]['train_loss']:.4f}, "
          f"final loss {final['train_loss']:.4f}, train acc {final['train_acc']:.3f}, "
          f"val acc {final['val_acc']:.3f}")
    return 0


def cmd_classify(args: argparse.Namespace, settings: Settings) -> int:
    network, _ = load_checkpoint(Path(args.model))
    if network.architecture.get("name") == "gs":
        raise DataError("classify needs a glint-count model (cnn or rnn), got a gs model")
    cochleagram = load_input_cochleagram(Path(args.input))
    scores = network.predict(cochleagram.values[None])[0]
    count = int(np.argmax(scores)) + 1
    result = {"input": args.input, "glint_count": count, "scores": scores.tolist()}
    if args.out:
        write_json(result, Path(args.out))
    print(f"{args.input}: {count} glint(s)")
    return 0


def cmd_reconstruct(args: argparse.Namespace, settings: Settings) -> int:
    network, _ = load_checkpoint(Path(args.model), expected_architecture="gs")
    cochleagram = load_input_cochleagram(Path(args.input))
    if cochleagram.n_bins != 100:
        cochleagram = crop_bins(cochleagram)
    trace = sliding_estimate(cochleagram, network)
    report = reconstruct(trace, detect_change_points(trace.classes))
    out = Path(args.out)
    write_json(report.to_dict(), out)
    if args.trace_csv:
        write_trace_csv(trace, Path(args.trace_csv))
    write_run_config(args, _config_path(out))
    print(f"{report.glint_count} glints at offsets "
          f"{', '.join(f'{o * 1e3:.1f}' for o in report.offsets)} mm; change points {report.change_points}")
    return 0


def evaluate_network(network: Network, manifest: DatasetManifest, split: str) -> Dict:
    x, records = manifest.arrays(split)
    y = glint_count_targets(records)
    scores = network.predict(x)
    truth = np.argmax(y, axis=1) + 1
    predicted = np.argmax(scores, axis=1) + 1
    confusion = (pd.crosstab(pd.Series(truth, name="true"), pd.Series(predicted, name="predicted"))
                 .reindex(index=range(1, 5), columns=range(1, 5), fill_value=0))
    return {"accuracy": accuracy(scores, y), "n_samples": len(records), "confusion": confusion}


def _repeat_job(job: Dict) -> Dict:
    """Train and evaluate one seeded network; runs in worker processes."""
    network = make_network(job["arch"], job["seed"], job["timesteps"])
    x, y, x_val, y_val = training_arrays(job["arch"], Path(job["train_data"]))
    config = TrainConfig(**{**job["train_config"], "seed": job["seed"]})
    result = train(network, x, y, config, x_val, y_val)
    final = result.history.iloc[-1]
    metrics = {"seed": job["seed"], "train_loss": float(final["train_loss"]),
               "train_acc": float(final["train_acc"]), "val_acc": float(final["val_acc"]),
               "initial_loss": float(result.history.iloc[0]["train_loss"])}
    if job.get("eval_data"):
        metrics["eval_acc"] = evaluate_network(network, DatasetManifest.load(Path(job["eval_data"])),
                                               "eval")["accuracy"]
    return metrics


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    out = Path(args.out or settings.data_dir / "eval")
    out.mkdir(parents=True, exist_ok=True)

    if args.repeat:
        if not args.train_data:
            raise ParameterError("--repeat needs --train-data")
        template = make_network(args.arch, 0, args.timesteps)
        train_config = train_config_from_args(args, template, 0).to_dict()
        # the gs net has no glint-count eval split; its runs report training metrics only
        eval_data = None if args.arch == "gs" else args.data
        jobs = [{"arch": args.arch, "seed": args.seed + i, "timesteps": args.timesteps,
                 "train_data": args.train_data, "eval_data": eval_data, "train_config": train_config}
                for i in range(args.repeat)]
        workers = min(settings.threads, args.repeat)
        if workers == 1:
            rows = [_repeat_job(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_repeat_job, jobs))
        runs = pd.DataFrame(rows)
        runs.to_csv(out / "runs.csv", index=False)
        summary = runs.drop(columns="seed").agg(["mean", "median", "min", "max"])
        summary.to_csv(out / "summary.csv")
        write_json({"arch": args.arch, "repeat": args.repeat, "summary": summary.to_dict(),
                    "reference": REFERENCE.get(args.arch, {})}, out / "metrics.json")
        write_run_config(args, out / "run_config.json")
        print(summary.to_string())
        print(f"Reference: {REFERENCE.get(args.arch, {})}")
        return 0

    if not args.model:
        raise ParameterError("eval needs --model (or --repeat with --train-data)")
    network, _ = load_checkpoint(Path(args.model))
    arch = network.architecture.get("name")
    if arch == "gs":
        raise DataError("eval reports glint-count accuracy; got a gs model")
    manifest = DatasetManifest.load(Path(args.data))
    split = "eval" if manifest.kind == "eval" else "val"
    result = evaluate_network(network, manifest, split)
    result["confusion"].to_csv(out / "confusion.csv")
    history = Path(args.model).with_name(f"{Path(args.model).stem}_history.csv")
    if history.exists():
        pd.read_csv(history).to_csv(out / "loss_curve.csv", index=False)
    write_json({"arch": arch, "split": split, "accuracy": result["accuracy"],
                "n_samples": result["n_samples"], "reference": REFERENCE.get(arch, {})},
               out / "metrics.json")
    write_run_config(args, out / "run_config.json")
    print(f"{arch} accuracy on {result['n_samples']} {split} samples: {result['accuracy']:.3f} "
          f"(reference {REFERENCE.get(arch, {}).get('eval_acc', float('nan')):.3f})")
    print(result["confusion"].to_string())
    return 0


def _add_training_args(p: argparse.ArgumentParser):
    p.add_argument("--arch", choices=["cnn", "rnn", "gs"], default="cnn")
    p.add_argument("--epochs", type=int, default=None,
                   help="Training epochs; default 100 for cnn and rnn, 200 for gs")
    p.add_argument("--batch", type=int, default=100, help="Mini-batch size")
    p.add_argument("--lr", type=float, default=1e-3, help="Learning rate")
    p.add_argument("--optimizer", choices=[k.value for k in OptimizerKind], default="adam")
    p.add_argument("--timesteps", type=int, choices=TIMESTEP_SWEEP, default=250,
                   help="RNN timesteps; each step carries 250/T time bins")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echogeo",
                                     description="Multi-glint echo simulation, cochleagrams and glint geometry")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Simulate broadcast + multi-glint echo")
    p.add_argument("--glints", default="0", help="Glint offsets, e.g. 0,11.1,48.1mm")
    p.add_argument("--duration", default="3ms", help="Broadcast duration, e.g. 3ms")
    p.add_argument("--snr", type=float, default=20.0, help="Echo SNR in dB")
    p.add_argument("--noise", choices=["on", "off"], default="on")
    p.add_argument("--window", choices=[w.value for w in Window], default="welch")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="Output .f32 path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cochleagram", help="Time series file -> cochleagram file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=250)
    p.add_argument("--threshold", type=float, default=None,
                   help="Crossing amplitude; default 10%% of the bank peak envelope")
    p.add_argument("--threshold-mode", choices=[m.value for m in ThresholdMode], default="bank",
                   help="One threshold for the whole bank, or relative to each channel peak")
    p.add_argument("--crop", action="store_true", help="Keep bins 50-150 only")
    p.set_defaults(func=cmd_cochleagram)

    p = sub.add_parser("gen-dataset", help="Generate a training or evaluation corpus")
    p.add_argument("--kind", choices=sorted(GENERATORS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="Train a network on a generated corpus")
    _add_training_args(p)
    p.add_argument("--data", required=True, help="Corpus directory")
    p.add_argument("--out", help="Checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="Predict the glint count of one echo")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="Optional JSON result path")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reconstruct", help="Sliding glint-spacing estimates and change points")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace-csv", help="Write the per-window estimate curve")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="Accuracy and confusion matrix on a held-out corpus")
    _add_training_args(p)
    p.add_argument("--model", help="Checkpoint to evaluate")
    p.add_argument("--data", required=True, help="Evaluation corpus directory")
    p.add_argument("--train-data", help="Training corpus, for --repeat")
    p.add_argument("--repeat", type=int, default=0, help="Train and evaluate N seeded networks")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
        configure_logging(settings)
        return args.func(args, settings)
    except EchoGeometryError as e:
        logger.error(f"{args.command}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
