"""Command-line entry point: ``priortune <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from priortune.core.analysis import MetricReport
from priortune.core.data import SegmentationDataset, gen_synthetic_dataset
from priortune.core.data.synthetic import MASKS_DIR
from priortune.core.inference import Predictor, evaluate
from priortune.core.loader import AblationCatalog, available_profiles, load_profile, parse_config
from priortune.core.metrics import evaluate_dataset
from priortune.core.models import VALID_STAGES, DatasetSpec, TrainConfig
from priortune.core.network import SegmentationModel
from priortune.core.reporter_generator import ReportGenerator
from priortune.core.training import Trainer, count_params, hand_count
from priortune.core.verification import run_gradient_suite
from priortune.utils.enums import Ablation, ImageFormat, ShapeFamily

logger = logging.getLogger("priortune")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
REPORT_STEM = "evaluation_report"


# ---------------- argument parsing ---------------- #


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration")
    group.add_argument("--config", type=Path, help="flat key = value config file")
    group.add_argument("--profile", choices=available_profiles(), help="shipped base profile")
    group.add_argument("--seed", type=int, help="override the training seed")
    group.add_argument("--stages", type=int, choices=VALID_STAGES, help="number of adapter stages")
    group.add_argument("--iterations", type=int, help="override the iteration count")
    _add_ablate_option(group)


def _add_ablate_option(parser) -> None:
    parser.add_argument(
        "--ablate",
        action="append",
        choices=[a.value for a in Ablation],
        metavar="NAME",
        help=f"disable components (repeatable): {', '.join(a.value for a in Ablation)}",
    )


def build_parser() -> argparse.ArgumentParser:
    data_defaults = DatasetSpec()
    parser = argparse.ArgumentParser(
        prog="priortune",
        description="Parameter-efficient segmentation fine-tuning with mixed local priors",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a synthetic camouflage dataset")
    gen.add_argument("out_dir", type=Path)
    gen.add_argument("--count", type=int, default=data_defaults.count)
    gen.add_argument("--image-size", type=int, default=data_defaults.image_size)
    gen.add_argument("--seed", type=int, default=data_defaults.texture_seed, help="texture seed")
    gen.add_argument("--shape", choices=[s.value for s in ShapeFamily], default=data_defaults.shape)
    gen.add_argument("--camouflage", type=float, default=data_defaults.camouflage)
    gen.add_argument(
        "--format", choices=[f.value for f in ImageFormat], default=data_defaults.image_format
    )

    train = sub.add_parser("train", help="train the adapter-side parameters")
    train.add_argument("dataset", type=Path)
    train.add_argument("out_dir", type=Path)
    train.add_argument("--resume", type=Path, help="continue from a checkpoint")
    train.add_argument("--no-eval", action="store_true", help="skip the final train-set IoU")
    train.add_argument("--progress", action="store_true", help="show a progress bar")
    _add_config_options(train)

    ev = sub.add_parser("eval", help="score predictions against ground-truth masks")
    ev.add_argument("dataset", type=Path)
    ev.add_argument("out_dir", type=Path)
    source = ev.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", type=Path, help="predict with this checkpoint first")
    source.add_argument("--predictions", type=Path, help="score an existing prediction directory")
    ev.add_argument("--allow-missing", action="store_true", help="exit 0 even if stems were skipped")
    ev.add_argument("--workers", type=int, help="scoring threads")
    ev.add_argument("--pdf", action="store_true", help="also write a PDF report")
    _add_ablate_option(ev)

    inf = sub.add_parser("infer", help="write a confidence map for one image")
    inf.add_argument("checkpoint", type=Path)
    inf.add_argument("image", type=Path)
    inf.add_argument("out", type=Path)
    _add_ablate_option(inf)

    grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--ops-only", action="store_true", help="skip the composed-network checks")

    params = sub.add_parser("params", help="parameter accounting")
    params.add_argument("--depth", type=int, default=1, help="name components per group")
    params.add_argument("--json", action="store_true", help="print JSON instead of text")
    _add_config_options(params)

    return parser


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    """Profile, then config file, then command-line overrides."""
    config = load_profile(args.profile) if args.profile else TrainConfig()
    if args.config is not None:
        config = parse_config(args.config, base=config)
    return config.with_overrides(
        seed=args.seed,
        stages=args.stages,
        iterations=args.iterations,
        ablate=args.ablate,
    )


# ---------------- commands ---------------- #


def _cmd_gen_data(args: argparse.Namespace) -> int:
    spec = DatasetSpec(
        count=args.count,
        image_size=args.image_size,
        texture_seed=args.seed,
        shape=args.shape,
        camouflage=args.camouflage,
        image_format=args.format,
    )
    manifest = gen_synthetic_dataset(spec, args.out_dir)
    print(f"Wrote {len(manifest['samples'])} samples to {args.out_dir}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    dataset = SegmentationDataset(args.dataset)
    if args.resume is not None:
        trainer = Trainer.from_checkpoint(
            args.resume, dataset, args.out_dir, show_progress=args.progress
        )
    else:
        trainer = Trainer(resolve_config(args), dataset, args.out_dir, show_progress=args.progress)

    result = trainer.train(args.iterations, evaluate=not args.no_eval)
    print(result.params.get_summary_text())
    if result.losses:
        print(f"Final loss: {result.losses[-1].total:.6f}")
    if result.final_iou is not None:
        print(f"Train-set mean IoU: {result.final_iou:.6f}")
    print(f"Checkpoint: {result.checkpoint}")
    return 0


def _write_reports(report: MetricReport, out_dir: Path, pdf: bool) -> List[Path]:
    generator = ReportGenerator(out_dir)
    paths = [
        generator.generate_text_report(report, f"{REPORT_STEM}.txt"),
        generator.generate_json_report(report, f"{REPORT_STEM}.json"),
    ]
    if pdf:
        paths.append(generator.generate_pdf_report(report, f"{REPORT_STEM}.pdf"))
    return paths


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.checkpoint is not None:
        report = evaluate(
            args.checkpoint, args.dataset, args.out_dir, ablate=args.ablate or (), workers=args.workers
        )
    else:
        report = evaluate_dataset(args.predictions, args.dataset / MASKS_DIR, workers=args.workers)

    print(report.get_summary_text())
    for path in _write_reports(report, args.out_dir, args.pdf):
        logger.info("Wrote %s", path)

    if report.has_missing and not args.allow_missing:
        logger.error("Some stems were skipped; pass --allow-missing to accept a partial evaluation")
        return 1
    return 0


def _cmd_infer(args: argparse.Namespace) -> int:
    predictor = Predictor.from_checkpoint(args.checkpoint, ablate=args.ablate or ())
    metadata = predictor.infer(args.image, args.out)
    print(json.dumps(metadata, indent=2))
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    report = run_gradient_suite(seed=args.seed, include_components=not args.ops_only)
    print(report.get_summary_text())
    return 0 if report.passed else 1


def _cmd_params(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    catalog = AblationCatalog.load()
    model = SegmentationModel(config, catalog)
    counted = count_params(model, depth=args.depth)
    expected = hand_count(config, model.components)

    if args.json:
        print(json.dumps({"counted": counted.to_dict(), "hand_count": expected.to_dict()}, indent=2))
    else:
        print(counted.get_summary_text())
        print(f"\nClosed-form trainable: {expected.trainable:,}  frozen: {expected.frozen:,}")

    if (counted.trainable, counted.frozen) != (expected.trainable, expected.frozen):
        logger.error(
            "Counted parameters (%d trainable, %d frozen) differ from the closed form (%d, %d)",
            counted.trainable,
            counted.frozen,
            expected.trainable,
            expected.frozen,
        )
        return 1
    return 0


COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "infer": _cmd_infer,
    "gradcheck": _cmd_gradcheck,
    "params": _cmd_params,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, force=True
    )
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, RuntimeError, OSError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
