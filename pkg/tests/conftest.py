from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from pnpvqa.config import PipelineConfig, load_assets
from pnpvqa.models import ArchConfig, TokenSeq, make_toy_bundle, vision_encode
from pnpvqa.models.tokenizer import BOS, EOS

GOLDEN = Path(__file__).parent / "golden"

SMALL_ARCH = ArchConfig(d_v=8, d_t=8, heads=2, ite_layers=2, dec_layers=1, qa_enc_layers=1,
                        qa_dec_layers=1, vocab_size=16, max_enc_len=16, patch_grid=(2, 2),
                        patch_res=2, d_ff=16, max_dec_len=12)


@pytest.fixture(scope="session")
def toy_assets():
    return load_assets(PipelineConfig())


@pytest.fixture(scope="session")
def toy_bundle(toy_assets):
    return toy_assets.bundle


@pytest.fixture(scope="session")
def toy_patches(toy_assets):
    from pnpvqa.imageio import load_image
    rec = toy_assets.records[0]
    return vision_encode(load_image(rec.image, toy_assets.bundle.config.patch_grid), toy_assets.bundle)


def small_instance(seed: int, n_tokens: int = 3):
    """A seeded small bundle, encoded random image and random question ids."""
    rng = np.random.default_rng(seed)
    bundle = make_toy_bundle(SMALL_ARCH, seed=seed)
    img = rng.random((4, 4, 3))
    ids = (BOS, *rng.integers(4, SMALL_ARCH.vocab_size, n_tokens).tolist(), EOS)
    return bundle, vision_encode(img, bundle), TokenSeq(tuple(int(i) for i in ids), "")


def rel_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Largest entry error relative to the largest exact entry."""
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
