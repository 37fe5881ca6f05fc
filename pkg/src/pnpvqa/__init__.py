"""Zero-training visual question answering from question-guided captions.

A vision encoder, an image-text matching encoder, a captioner and a
question-answering encoder-decoder are composed without any training.
Relevance of image patches to the question comes from gradients of the
matching score with respect to cross-attention; captions are generated from
relevance-sampled patch subsets and handed to the QA model.
"""
from .captioning import CaptionSet, DecodeConfig, dedup_filter, decode_next, generate_caption, generate_caption_set
from .config import Assets, PipelineConfig, load_assets, load_config
from .dataset import QuestionRecord, ingest_dataset
from .fusion import AnswerPrediction, FusionConfig, QAContextGroup, answer, build_groups
from .harness import (EvalReport, ahr_accuracy_buckets, evaluate, human_caption_arm, sweep,
                      sweep_csv)
from .imageio import load_image
from .metrics import answer_hit_rate, exact_match, normalize_answer, soft_accuracy
from .relevance import RelevanceMap, compute_relevance, export_heatmap, gradcam_relevance
from .rng import RngStream, rng_next
from .sampling import PatchSubset, Strategy, sample_patches

__version__ = "0.1.0"

__all__ = [
    "AnswerPrediction", "Assets", "CaptionSet", "DecodeConfig", "EvalReport", "FusionConfig",
    "PatchSubset", "PipelineConfig", "QAContextGroup", "QuestionRecord", "RelevanceMap",
    "RngStream", "Strategy", "ahr_accuracy_buckets", "answer", "answer_hit_rate", "build_groups",
    "compute_relevance", "decode_next", "dedup_filter", "evaluate", "exact_match",
    "export_heatmap", "generate_caption", "generate_caption_set", "gradcam_relevance",
    "human_caption_arm", "ingest_dataset", "load_assets", "load_config", "load_image",
    "normalize_answer", "rng_next", "sample_patches", "soft_accuracy", "sweep", "sweep_csv",
]
