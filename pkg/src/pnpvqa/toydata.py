"""Builds the bundled toy fixture: arch, vocab, weight container, images and questions.

Everything is a deterministic function of fixed seeds; ``build_toy_assets``
regenerates the shipped files byte for byte.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .imageio import write_ppm
from .models.bundle import make_toy_bundle
from .models.config import ArchConfig
from .models.tokenizer import SPECIALS, Vocab

WORDS = """
a an the of picture question context is are on in with near under next to at by and
it its there this that what which how many where who color kind sitting standing
playing holding running flying parked eating lying walking riding looking
red blue green yellow white black brown orange gray pink purple
dog cat ball car tree grass sky man woman person table chair fire hydrant bus train
kite frisbee horse bird boat bench umbrella plate pizza cake bike sign clock road
water snow beach field street building window door bed couch cup bowl banana apple
one two three four five yes no large small big little some sunny cloudy top side
animal birds thing disc people wooden old front behind
""".split()

TOY_SEED = 0
IMAGE_SIZE = 32


def toy_vocab() -> Vocab:
    return Vocab(list(SPECIALS) + WORDS)


def toy_arch() -> ArchConfig:
    return ArchConfig(vocab_size=len(SPECIALS) + len(WORDS))


COLORS = {
    "red": (220, 30, 30), "blue": (30, 60, 220), "green": (40, 170, 60), "yellow": (235, 220, 40),
    "white": (245, 245, 245), "black": (10, 10, 10), "brown": (120, 75, 30), "gray": (128, 128, 128),
    "sky": (135, 190, 235), "grass": (70, 150, 60), "orange": (240, 140, 20),
}

# (id, background, [(color, row0, col0, h, w)], question, answers, human captions)
QUESTIONS = [
    ("q0", "sky", [("red", 16, 8, 12, 16)],
     "What color is the ball?", ["red"] * 7 + ["orange"] * 3,
     ["a red ball in the sky", "a red ball", "a ball near the field",
      "a red ball flying in the sky", "the ball is red"]),
    ("q1", "grass", [("brown", 8, 4, 16, 12), ("white", 4, 20, 8, 8)],
     "What animal is on the grass?", ["dog"] * 8 + ["cat"] * 2,
     ["a brown dog on the grass", "a dog sitting in a field", "a dog playing with a ball",
      "a small dog on green grass", "a dog"]),
    ("q2", "gray", [("red", 8, 12, 20, 8)],
     "What is the red thing on the street?", ["fire hydrant"] * 6 + ["hydrant"] * 4,
     ["a red fire hydrant on the street", "a fire hydrant next to the road",
      "a red hydrant", "a street with a fire hydrant", "a fire hydrant on the side of a road"]),
    ("q3", "green", [("white", 4, 4, 8, 8), ("white", 20, 20, 8, 8)],
     "How many birds are there?", ["two"] * 9 + ["three"],
     ["two white birds in a field", "two birds on the grass", "a bird and a bird",
      "two birds standing", "white birds on green grass"]),
    ("q4", "blue", [("yellow", 12, 0, 8, 32)],
     "Is there a boat on the water?", ["yes"] * 10,
     ["a yellow boat on the water", "a boat on blue water", "a boat",
      "a small boat in the water", "yellow boat on the water"]),
    ("q5", "grass", [("white", 2, 2, 6, 6)],
     "What is the man holding?", ["frisbee"] * 7 + ["disc"] * 3,
     ["a man holding a frisbee", "a man playing frisbee in a field",
      "a person with a white frisbee", "a man in a field", "a frisbee"]),
    ("q6", "white", [("black", 0, 0, 16, 16), ("black", 16, 16, 16, 16)],
     "Is the cat black?", ["no"] * 6 + ["yes"] * 4,
     ["a black and white cat", "a cat on a bed", "a cat lying on a white bed",
      "a cat", "a black cat on a bed"]),
    ("q7", "sky", [("blue", 20, 0, 12, 32), ("brown", 8, 12, 12, 8)],
     "What color is the bus?", ["blue"] * 8 + ["white"] * 2,
     ["a blue bus on the street", "a bus parked on a road", "a blue bus",
      "a large bus next to a building", "a bus"]),
]


def toy_image(background: str, blocks) -> np.ndarray:
    rng = np.random.default_rng(1234)
    img = np.empty((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float64)
    img[:] = COLORS[background]
    for color, r, c, h, w in blocks:
        img[r:r + h, c:c + w] = COLORS[color]
    img += rng.normal(0.0, 6.0, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def build_toy_assets(out_dir) -> Path:
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    arch = toy_arch()
    vocab = toy_vocab()
    (out / "arch.json").write_text(arch.to_json(), encoding="utf-8")
    (out / "vocab.json").write_text(vocab.to_json(), encoding="utf-8")
    (out / "toy.pnpw").write_bytes(make_toy_bundle(arch, TOY_SEED, vocab).to_bytes())
    lines = []
    for qid, bg, blocks, question, answers, human in QUESTIONS:
        write_ppm(out / "images" / f"{qid}.ppm", toy_image(bg, blocks))
        lines.append(json.dumps({"id": qid, "image": f"images/{qid}.ppm", "question": question,
                                 "answers": answers, "human_captions": human}))
    (out / "dataset.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


if __name__ == "__main__":
    import sys

    print(build_toy_assets(sys.argv[1] if len(sys.argv) > 1 else "src/pnpvqa/data/toy"))
