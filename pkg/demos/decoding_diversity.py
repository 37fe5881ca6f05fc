"""How many distinct captions survive deduplication under each decoding method?

Beam search is deterministic, so every caption for a question comes out
the same and dedup keeps one.  The stochastic methods keep most of them.
"""
from pnpvqa.captioning import DecodeConfig, generate_caption_set
from pnpvqa.config import PipelineConfig, load_assets
from pnpvqa.imageio import load_image
from pnpvqa.models import vision_encode
from pnpvqa.relevance import gradcam_relevance
from pnpvqa.rng import RngStream

assets = load_assets(PipelineConfig())
bundle = assets.bundle
rec = assets.records[0]
patches = vision_encode(load_image(rec.image, bundle.config.patch_grid), bundle)
rel = gradcam_relevance(bundle, patches, rec.question, bundle.config.ite_layers - 1, rec.id)

N = 20
for label in ["beam", "temp:0.5", "temp:1", "nucleus:0.9", "nucleus:0.95", "topk:50", "topk:100"]:
    cfg = DecodeConfig.parse(label)
    cs = generate_caption_set(rel, patches, N, 20, "question_guided", cfg, bundle, RngStream(0, (0,)))
    lens = [len(t.split()) for t in cs.texts]
    print(f"{cfg.label:22s} kept {cs.n_kept:2d}/{N}  mean words {sum(lens) / max(len(lens), 1):5.1f}"
          f"  first: {cs.texts[0]!r}")
