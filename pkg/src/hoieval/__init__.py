"""Training-free HOI scoring and HICO-DET-style mAP evaluation toolkit."""

from .dataset import (BoundingBox, GroundTruthInstance, HoiCategory,
                      HoiTaxonomy, ImageRecord, SplitDefinition,
                      load_annotations, load_split, load_taxonomy)
from .errors import (ConsistencyError, FormatError, HoiEvalError,
                     MissingKeyError, TruncationError, ValidationError)
from .evaluation import (ClassAp, EvalReport, average_precision, evaluate,
                         iou, match_class)
from .pairing import (CandidatePair, DetectionBox, PairingParams,
                      make_detector_pairs, make_gt_pairs,
                      make_recombined_pairs, union_box)
from .scoring import (EmbeddingArchive, HoiDetection, VerbDistribution,
                      assemble_detections, load_archive, run_scoring,
                      score_pair, write_archive)

__version__ = "0.1.0"
