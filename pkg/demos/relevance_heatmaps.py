"""Where does the matching model look for each toy question?

Runs the image-text encoder on every bundled question, turns the gradient
weighted cross-attention into a 4x4 relevance grid, prints it and writes
the PGM heatmaps next to this script.
"""
from pathlib import Path

import numpy as np

from pnpvqa.config import PipelineConfig, load_assets
from pnpvqa.imageio import load_image
from pnpvqa.models import vision_encode
from pnpvqa.relevance import export_heatmap, gradcam_relevance

out = Path(__file__).with_name("heatmaps")
out.mkdir(exist_ok=True)

assets = load_assets(PipelineConfig())
bundle = assets.bundle
layer = bundle.config.ite_layers - 1   # 0-based: the last cross-attention layer

np.set_printoptions(precision=3, suppress=True)
for rec in assets.records:
    patches = vision_encode(load_image(rec.image, bundle.config.patch_grid), bundle)
    rel = gradcam_relevance(bundle, patches, rec.question, layer, rec.id)
    grid = rel.rel.reshape(rel.grid) / rel.rel.sum()   # share of total relevance per patch
    print(rec.id, rec.question)
    print(grid)
    print("top patches:", np.argsort(-rel.rel)[:4].tolist())
    export_heatmap(rel, out / f"{rec.id}.pgm")

print("heatmaps in", out)
