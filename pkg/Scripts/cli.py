"""
Command-line front end:

    python -m Scripts train      --data <dir> --out <dir> [flags]
    python -m Scripts add-class  <class dir> --model <file> [--label <name>]
    python -m Scripts evaluate   --data <dir> --out <dir> [--model <file>] [flags]
    python -m Scripts recognize  <image> --model <file> [--top n]

Exit codes: 0 on success, 2 on input errors, 3 on I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

from Scripts.config import CLASSIFIERS, RunConfig, load_config, parse_size, save_config
from Scripts.errors import ConfigError, IoFailure, ToolkitError
from Scripts.evaluation import evaluate_index, evaluate_pipeline, write_report
from Scripts.features import FIXED_MASK, PER_IMAGE_SORT
from Scripts.ingest import dataset_hash, list_class_images, load_image, scan_dataset
from Scripts.model_file import load_model, save_model
from Scripts.pipeline import load_items
from Scripts.preprocess import GRAYSCALE, YCBCR
from Scripts.recognizer import enroll_class, rank_classes, score_image, train_model

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.txt"
TRAIN_LOG = "train.log"

COLOR_FLAGS = {"gray": GRAYSCALE, "ycbcr": YCBCR}
SELECT_FLAGS = {"sort": PER_IMAGE_SORT, "mask": FIXED_MASK}


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value config file; flags override it")
    shared.add_argument("--data", help="dataset root, one directory per class")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--model", help="model file (default <out>/model.mapf)")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--k", type=int, help="DCT coefficients per channel (1..99)")
    shared.add_argument("--color", choices=sorted(COLOR_FLAGS))
    shared.add_argument("--select", choices=sorted(SELECT_FLAGS))
    shared.add_argument("--classifier", choices=CLASSIFIERS)
    shared.add_argument("--size", help="canonical size, WxH")
    shared.add_argument("--train-per-class", type=int)
    shared.add_argument("--train-ratio", type=float)
    shared.add_argument("--m", type=int, help="PCA/LDA subspace dimension")
    shared.add_argument("--epsilon", type=float, help="fixed covariance regularization")
    shared.add_argument("--equalize-chroma", action="store_const", const=True, default=None)
    shared.add_argument("-v", "--verbose", action="store_true")
    return shared


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="Scripts", description="DCT + MAP face recognition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    sub.add_parser("train", parents=[shared], help="train a model on the dataset's train split")

    add = sub.add_parser("add-class", parents=[shared], help="enroll a new class into a MAP model")
    add.add_argument("class_dir")
    add.add_argument("--label", help="class label (default: directory name)")

    sub.add_parser("evaluate", parents=[shared], help="write cms.csv, roc.csv, decisions.csv, summary.txt")

    rec = sub.add_parser("recognize", parents=[shared], help="rank enrolled classes for one image")
    rec.add_argument("image")
    rec.add_argument("--top", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the --config file, then command-line flags."""
    config = load_config(args.config) if args.config else RunConfig()
    overrides = dict(
        data_root=args.data,
        out_dir=args.out,
        model_path=args.model,
        seed=args.seed,
        k=args.k,
        color_mode=COLOR_FLAGS.get(args.color),
        selection_mode=SELECT_FLAGS.get(args.select),
        classifier=args.classifier,
        size=parse_size(args.size) if args.size else None,
        train_per_class=args.train_per_class,
        train_ratio=args.train_ratio,
        m=args.m,
        epsilon=args.epsilon,
        equalize_chroma=args.equalize_chroma,
        top=getattr(args, "top", None),
    )
    return config.with_overrides(**overrides).validate()


@contextmanager
def _log_to_file(path: Path) -> Iterator[None]:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, mode="a", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot open log file {path}: {exc}", module="cli") from exc
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    previous = root.level
    # the training log always records INFO, whatever the console shows
    if root.getEffectiveLevel() > logging.INFO:
        root.setLevel(logging.INFO)
    root.addHandler(handler)
    try:
        yield
    finally:
        root.removeHandler(handler)
        root.setLevel(previous)
        handler.close()


def cmd_train(config: RunConfig) -> int:
    out_dir = Path(config.out_dir)
    model_path = config.resolved_model_path()
    with _log_to_file(out_dir / TRAIN_LOG):
        index = scan_dataset(config.data_root, config.split_spec, config.seed)
        images = load_items(index.train_items())

        start = time.perf_counter()
        model = train_model(config.classifier, images, config.feature_settings(), m=config.m, epsilon=config.epsilon)
        logger.info("Training took %.3f s", time.perf_counter() - start)

        save_model(model, model_path)
        save_config(config, out_dir / CONFIG_FILE)
    print(f"Model with {len(model.labels)} classes exported to: {model_path}")
    return 0


def cmd_add_class(config: RunConfig, class_dir: str, label: Optional[str]) -> int:
    model_path = config.resolved_model_path()
    label = label or Path(class_dir).name
    with _log_to_file(model_path.parent / TRAIN_LOG):
        model = load_model(model_path)
        images = [load_image(path) for path in list_class_images(class_dir)]
        if not images:
            raise ConfigError(f"no images in {class_dir}")
        updated = enroll_class(model, label, images)
        save_model(updated, model_path)
    print(f"Class {label} added; model now has {len(updated.labels)} classes: {model_path}")
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    index = scan_dataset(config.data_root, config.split_spec, config.seed)
    if config.model_path:
        model = load_model(config.model_path)
        config = config.for_model(model)
        report = evaluate_index(model, index)
    else:
        report = evaluate_pipeline(config.classifier, index, config)
    out_dir = write_report(report, config.out_dir, config, dataset_hash(index))
    print(f"rank1 = {report.rank1:.4f}, eer = {'n/a' if report.eer is None else f'{report.eer:.4f}'}")
    print(f"Report exported to: {out_dir}")
    return 0


def cmd_recognize(config: RunConfig, image: str) -> int:
    model = load_model(config.resolved_model_path())
    ranking = rank_classes(model, score_image(model, load_image(image)), top=config.top)
    for row in ranking.itertuples(index=False):
        print(f"{row.rank}\t{row.label}\t{float(row.score)!r}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = resolve_config(args)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "add-class":
            return cmd_add_class(config, args.class_dir, args.label)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        return cmd_recognize(config, args.image)
    except ToolkitError as exc:
        print(f"error [{exc.module}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [cli] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error [cli] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
