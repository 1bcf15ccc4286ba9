"""hoiextract command line: extract-pairs, extract-text, detect, convert."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import convert, detect, extract
from .backbones import load_backbone
from .errors import ExtractorError
from .prompts import load_template

log = logging.getLogger("hoiextract")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hoiextract",
        description="Produce embedding archives, detection dumps, and "
                    "canonical annotations for the hoieval pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-pairs", help="embed union crops for a pair file")
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--images-dir", type=Path, required=True)
    p.add_argument("--backbone", required=True,
                   help="registry name or stub<dim>")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--padding", type=float, default=0.0,
                   help="context padding as a fraction of the union box")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("extract-text", help="embed prompts for every class")
    p.add_argument("--taxonomy", type=Path, required=True)
    p.add_argument("--backbone", required=True)
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--template-file", type=Path,
                   help="prompt template JSON (default: bundled)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("detect", help="dump open-vocabulary detections")
    p.add_argument("--images-dir", type=Path, required=True)
    p.add_argument("--taxonomy", type=Path, required=True,
                   help="source of the 80 object class names")
    p.add_argument("--checkpoint", default="IDEA-Research/grounding-dino-base")
    p.add_argument("--box-threshold", type=float, default=0.25)
    p.add_argument("--text-threshold", type=float, default=0.25)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("convert", help="official MAT archive -> canonical JSON")
    p.add_argument("--anno-mat", type=Path, required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--out-annotations", type=Path, required=True)
    p.add_argument("--out-taxonomy", type=Path,
                   help="also write the taxonomy with train-count rare flags")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract-pairs":
            backbone = load_backbone(args.backbone, args.device)
            n = extract.extract_pair_embeddings(
                args.pairs, args.images_dir, backbone, args.out,
                batch_size=args.batch_size, padding=args.padding)
            log.info("embedded %d pairs (dim %d) -> %s",
                     n, backbone.spec.dim, args.out)
        elif args.command == "extract-text":
            backbone = load_backbone(args.backbone, args.device)
            template = load_template(args.template_file)
            n = extract.extract_text_embeddings(
                args.taxonomy, template, backbone, args.out,
                batch_size=args.batch_size)
            log.info("embedded %d class prompts (dim %d) -> %s",
                     n, backbone.spec.dim, args.out)
        elif args.command == "detect":
            names = detect.object_names_from_taxonomy(args.taxonomy)
            n_images, n_dets = detect.run_grounding_dino(
                args.images_dir, names, args.out,
                checkpoint=args.checkpoint,
                box_threshold=args.box_threshold,
                text_threshold=args.text_threshold, device=args.device)
            log.info("detected %d boxes over %d images -> %s",
                     n_dets, n_images, args.out)
        else:
            n_images, n_inst = convert.convert_official(
                args.anno_mat, args.out_annotations, args.out_taxonomy,
                split=args.split)
            log.info("converted %s split: %d images, %d instances -> %s",
                     args.split, n_images, n_inst, args.out_annotations)
        return 0
    except ExtractorError as exc:
        log.error("error: %s", exc)
        return 1
    except OSError as exc:
        log.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
