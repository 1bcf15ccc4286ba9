"""Command-line front end: pair generation, scoring, evaluation, report
comparison, and input validation.

Logs go to stderr; data goes to files (--out) or stdout. Flags override the
optional JSON config file; the config file overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataset, evaluation, pairing, scoring
from .errors import HoiEvalError

log = logging.getLogger("hoieval")

DEFAULTS = {
    "logit_scale": 100.0,
    "iou_threshold": 0.5,
    "score_threshold": 0.25,
    "max_pairs": 100,
    "on_missing": "fail",
    "candidates": "object",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hoieval",
        description="Training-free HOI scoring and mAP evaluation pipeline.")
    parser.add_argument("--config", type=Path,
                        help="JSON config file; flags given on the command "
                             "line take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--taxonomy", type=Path,
                       help="taxonomy JSON (default: bundled HICO-DET file)")
        p.add_argument("--out", type=Path, help="output file")

    p_pairs = sub.add_parser("pairs", help="generate candidate pairs")
    add_common(p_pairs)
    p_pairs.add_argument("--regime", choices=["gt", "gt-r", "detector"])
    p_pairs.add_argument("--annotations", type=Path)
    p_pairs.add_argument("--detections", type=Path,
                         help="detector dump JSONL (detector regime)")
    p_pairs.add_argument("--score-threshold", type=float)
    p_pairs.add_argument("--max-pairs", type=int)

    p_score = sub.add_parser("score", help="score pairs from embeddings")
    add_common(p_score)
    p_score.add_argument("--pairs", type=Path)
    p_score.add_argument("--pair-embeddings", type=Path)
    p_score.add_argument("--text-embeddings", type=Path)
    p_score.add_argument("--logit-scale", type=float)
    p_score.add_argument("--on-missing", choices=["fail", "skip"])
    p_score.add_argument("--candidates", choices=["object", "all"],
                         help="softmax candidate set (ablation: all)")

    p_eval = sub.add_parser("eval", help="compute the mAP report")
    add_common(p_eval)
    p_eval.add_argument("--detections", type=Path,
                        help="scored detections JSONL")
    p_eval.add_argument("--annotations", type=Path)
    p_eval.add_argument("--splits-dir", type=Path,
                        help="directory of split JSON files to aggregate over")
    p_eval.add_argument("--iou-threshold", type=float)

    p_cmp = sub.add_parser("compare", help="diff two or more report JSONs")
    p_cmp.add_argument("reports", nargs="+", type=Path)

    p_val = sub.add_parser("validate", help="check input file formats")
    p_val.add_argument("--taxonomy", type=Path)
    p_val.add_argument("--annotations", type=Path)
    p_val.add_argument("--pairs", type=Path)
    p_val.add_argument("--detections", type=Path)
    p_val.add_argument("--pair-embeddings", type=Path)
    p_val.add_argument("--text-embeddings", type=Path)
    p_val.add_argument("--splits-dir", type=Path)
    return parser


def resolve(args: argparse.Namespace, key: str, config: dict):
    """Flag > config file > built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        value = config[key]
        if key.endswith(("annotations", "taxonomy", "out", "pairs",
                         "detections", "embeddings", "dir")):
            value = Path(value)
        return value
    return DEFAULTS.get(key)


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise HoiEvalError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in raw.items()}


def _taxonomy(args, config) -> dataset.HoiTaxonomy:
    path = resolve(args, "taxonomy", config) or dataset.bundled_taxonomy_path()
    return dataset.load_taxonomy(path)


def _require(parser_error, value, flag: str):
    if value is None:
        parser_error(f"{flag} is required for this command")
    return value


def cmd_pairs(args, config, parser) -> int:
    regime = _require(parser.error, resolve(args, "regime", config), "--regime")
    taxonomy = _taxonomy(args, config)
    out = _require(parser.error, resolve(args, "out", config), "--out")
    params = pairing.PairingParams(
        score_threshold=float(resolve(args, "score_threshold", config)),
        max_pairs_per_image=int(resolve(args, "max_pairs", config)))

    per_image_pairs = []
    if regime in ("gt", "gt-r"):
        anno_path = _require(parser.error,
                             resolve(args, "annotations", config),
                             "--annotations")
        annotations = dataset.load_annotations(anno_path, taxonomy)
        make = (pairing.make_gt_pairs if regime == "gt"
                else pairing.make_recombined_pairs)
        for _, instances in annotations:
            if instances:
                per_image_pairs.append(make(instances, taxonomy))
    else:
        det_path = _require(parser.error,
                            resolve(args, "detections", config),
                            "--detections")
        detections = pairing.read_detections_jsonl(det_path)
        by_image: dict[str, list[pairing.DetectionBox]] = {}
        for det in detections:
            by_image.setdefault(det.image_id, []).append(det)
        for image_id in by_image:
            per_image_pairs.append(
                pairing.make_detector_pairs(by_image[image_id], taxonomy, params))

    all_pairs = [p for pairs in per_image_pairs for p in pairs]
    pairing.write_pairs_jsonl(all_pairs, out)
    log.info("regime=%s images=%d pairs=%d -> %s",
             regime, len(per_image_pairs), len(all_pairs), out)
    return 0


def cmd_score(args, config, parser) -> int:
    taxonomy = _taxonomy(args, config)
    pairs = _require(parser.error, resolve(args, "pairs", config), "--pairs")
    pair_emb = _require(parser.error, resolve(args, "pair_embeddings", config),
                        "--pair-embeddings")
    text_emb = _require(parser.error, resolve(args, "text_embeddings", config),
                        "--text-embeddings")
    out = _require(parser.error, resolve(args, "out", config), "--out")
    summary = scoring.run_scoring(
        pairs, pair_emb, text_emb, taxonomy, out,
        logit_scale=float(resolve(args, "logit_scale", config)),
        on_missing=resolve(args, "on_missing", config),
        candidates=resolve(args, "candidates", config))
    log.info("pairs scored=%d detections=%d missing=%d -> %s",
             summary.pairs_scored, summary.detections_emitted,
             summary.missing_embeddings, out)
    return 0


def _load_splits(splits_dir: Path | None, taxonomy) -> list:
    if splits_dir is None:
        return []
    splits = []
    for path in sorted(Path(splits_dir).glob("*.json")):
        splits.append(dataset.load_split(path.stem, path, taxonomy))
    return splits


def cmd_eval(args, config, parser) -> int:
    taxonomy = _taxonomy(args, config)
    det_path = _require(parser.error, resolve(args, "detections", config),
                        "--detections")
    anno_path = _require(parser.error, resolve(args, "annotations", config),
                         "--annotations")
    annotations = dataset.load_annotations(anno_path, taxonomy)
    detections = scoring.read_detections_file(det_path)
    splits = _load_splits(resolve(args, "splits_dir", config), taxonomy)
    report = evaluation.evaluate(
        detections, annotations, taxonomy, splits,
        iou_threshold=float(resolve(args, "iou_threshold", config)))
    out = resolve(args, "out", config)
    if out is not None:
        evaluation.write_report_json(report, out)
        log.info("report -> %s", out)
    sys.stdout.write(evaluation.render_table(report))
    return 0


def cmd_compare(args, config, parser) -> int:
    if len(args.reports) < 2:
        parser.error("compare needs at least two report files")
    reports = [evaluation.read_report_json(p) for p in args.reports]
    labels = [p.stem for p in args.reports]
    sys.stdout.write(evaluation.compare_reports(reports, labels))
    return 0


def cmd_validate(args, config, parser) -> int:
    checked = 0
    taxonomy = None
    tax_path = resolve(args, "taxonomy", config)
    if tax_path is not None:
        taxonomy = dataset.load_taxonomy(tax_path)
        log.info("OK taxonomy %s (%d classes, %d rare)",
                 tax_path, len(taxonomy), len(taxonomy.rare_ids))
        checked += 1
    anno_path = resolve(args, "annotations", config)
    if anno_path is not None:
        annotations = dataset.load_annotations(anno_path,
                                               taxonomy or _taxonomy(args, config))
        n_inst = sum(len(inst) for _, inst in annotations)
        log.info("OK annotations %s (%d images, %d instances)",
                 anno_path, len(annotations), n_inst)
        checked += 1
    pairs_path = resolve(args, "pairs", config)
    if pairs_path is not None:
        pairs = pairing.read_pairs_jsonl(pairs_path)
        log.info("OK pairs %s (%d pairs)", pairs_path, len(pairs))
        checked += 1
    det_path = resolve(args, "detections", config)
    if det_path is not None:
        kind, n = _validate_detections(det_path)
        log.info("OK %s %s (%d records)", kind, det_path, n)
        checked += 1
    for flag in ("pair_embeddings", "text_embeddings"):
        path = resolve(args, flag, config)
        if path is not None:
            archive = scoring.load_archive(path)
            log.info("OK archive %s (dim %d, %d entries)",
                     path, archive.dim, len(archive))
            checked += 1
    splits_dir = resolve(args, "splits_dir", config)
    if splits_dir is not None:
        splits = _load_splits(splits_dir, taxonomy or _taxonomy(args, config))
        log.info("OK splits %s (%s)", splits_dir,
                 ", ".join(s.name for s in splits))
        checked += 1
    if checked == 0:
        parser.error("validate needs at least one input to check")
    return 0


def _validate_detections(path):
    """Detector dumps carry 'box'; scored detections carry human/object boxes."""
    with open(path, encoding="utf-8") as f:
        first = ""
        for line in f:
            if line.strip():
                first = line
                break
    if first and "\"box\"" in first:
        return "detector dump", len(pairing.read_detections_jsonl(path))
    return "detections", len(scoring.read_detections_file(path))


COMMANDS = {
    "pairs": cmd_pairs,
    "score": cmd_score,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return COMMANDS[args.command](args, config, parser)
    except HoiEvalError as exc:
        log.error("error: %s", exc)
        return 1
    except OSError as exc:
        log.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
