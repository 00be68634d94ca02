from mlm_extractor.cli import main
from mlm_extractor.manifest import Request

from test_manifest import _write_manifest


def test_cli_extract(tmp_path, model_dir, capsys):
    manifest = tmp_path / "manifest.json"
    _write_manifest(manifest, "tiny",
                    [Request(words=("the", "cat"), masked_positions=(1,),
                             model_id="tiny")])
    out = tmp_path / "emb.mpeb"
    rc = main(["extract", "--model-id", "tiny",
               "--model-path", str(model_dir),
               "--manifest", str(manifest), "--out", str(out)])
    assert rc == 0
    assert out.exists()
    assert "wrote 1 records" in capsys.readouterr().out


def test_cli_extract_missing_manifest(tmp_path, model_dir, capsys):
    rc = main(["extract", "--model-id", "tiny",
               "--model-path", str(model_dir),
               "--manifest", str(tmp_path / "absent.json"),
               "--out", str(tmp_path / "emb.mpeb")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_rejects_unknown_mode(model_dir):
    rc = main(["extract", "--model-id", "tiny", "--mode", "sideways",
               "--manifest", "m.json", "--out", "a.mpeb"])
    assert rc == 1
