from pnpvqa.config import toy_dir
from pnpvqa.toydata import build_toy_assets


def test_shipped_fixture_regenerates_byte_for_byte(tmp_path):
    out = build_toy_assets(tmp_path / "toy")
    shipped = toy_dir()
    made = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    assert made == sorted(p.relative_to(shipped) for p in shipped.rglob("*") if p.is_file())
    for rel in made:
        assert (out / rel).read_bytes() == (shipped / rel).read_bytes(), rel
