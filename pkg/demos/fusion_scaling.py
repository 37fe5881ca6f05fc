"""Fusion in the encoder against fusion in the decoder as captions pile up.

FiE puts the question and all captions in one encoder input, so its
self-attention cost grows with the square of the total length and it
stops working once that length passes the position table.  FiD encodes
each caption with the question on its own; its cost grows linearly.
"""
from pnpvqa.captioning import DecodeConfig, generate_caption_set
from pnpvqa.config import PipelineConfig, load_assets
from pnpvqa.fusion import FusionConfig, answer
from pnpvqa.imageio import load_image
from pnpvqa.models import OverlongInputError, vision_encode
from pnpvqa.relevance import gradcam_relevance
from pnpvqa.rng import RngStream

assets = load_assets(PipelineConfig())
bundle = assets.bundle
rec = assets.records[2]
patches = vision_encode(load_image(rec.image, bundle.config.patch_grid), bundle)
rel = gradcam_relevance(bundle, patches, rec.question, bundle.config.ite_layers - 1, rec.id)
caps = generate_caption_set(rel, patches, 100, 20, "question_guided", DecodeConfig(), bundle,
                            RngStream(0, (2,))).texts
print(f"{rec.question}  ({len(caps)} captions after dedup)")
print(f"{'N':>4} {'FiE pairs':>10} {'FiD pairs':>10}  FiE answer / FiD answer")
for n in (1, 2, 5, 10, 20, 30, 40, len(caps)):
    fid = answer(rec.question, caps[:n], FusionConfig("fid"), bundle)
    try:
        fie = answer(rec.question, caps[:n], FusionConfig("fie"), bundle)
        fie_pairs, fie_text = str(fie.encoder_pairs), fie.text
    except OverlongInputError:
        fie_pairs, fie_text = "overlong", "-"
    print(f"{n:>4} {fie_pairs:>10} {fid.encoder_pairs:>10}  {fie_text} / {fid.text}")
