import numpy as np
import pytest

from mffc.cli import main
from mffc.io import ManifestEntry, load_offspring, read_descriptors, write_manifest
from mffc.synth import synth_corpus


@pytest.fixture(scope="module")
def ident_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("ident")
    synth_corpus(root, 6, 3, (64, 64), seed=2, noise=10)
    return root


def run(*argv):
    return main([str(a) for a in argv])


def test_synth_command(tmp_path, capsys):
    assert run("synth", "--out", tmp_path, "--classes", 4, "--per-class", 2, "--size", 16, 16) == 0
    assert (tmp_path / "manifest.csv").exists()
    assert "wrote 8 images" in capsys.readouterr().out


def test_identification_chain(ident_corpus, tmp_path, capsys):
    out = tmp_path / "run"
    common = ["--preset", "synth", "--manifest", ident_corpus / "manifest.csv", "--out", out]
    assert run("learn-filters", *common) == 0
    assert run("make-offspring", *common) == 0
    assert run("describe", *common) == 0
    assert run("fit-wpca", *common) == 0
    assert run("eval-ident", *common) == 0
    for name in ("config.txt", "gabor.mffc", "offspring_re.mffc", "offspring_im.mffc", "descriptors.bin",
                 "wpca.mffc", "ident_report.txt", "ident_predictions.csv", "ident_scores.png", "offspring_re.png"):
        assert (out / name).exists(), name
    report = (out / "ident_report.txt").read_text()
    assert report.startswith("task=identification\nrank1=")
    assert "rank1=" in capsys.readouterr().out


def test_describe_side_13(ident_corpus, tmp_path, capsys):
    out = tmp_path / "d"
    assert run("make-offspring", "--preset", "synth", "--kind", "gabor", "--folds", 2,
               "--set", "support=7", "--out", out) == 0
    assert "13x13" in capsys.readouterr().out
    assert load_offspring(out / "offspring_re.mffc").offspring_side == 13


def test_probes_equal_gallery_rank1_100(ident_corpus, tmp_path, capsys):
    # every image is both gallery and probe under a distinct path
    entries = []
    for n, p in enumerate(sorted((ident_corpus / "images").glob("*.pgm"))[:6]):
        entries.append(ManifestEntry(f"{ident_corpus.name}/images/{p.name}", f"id{n}", "gallery"))
    manifest = ident_corpus.parent / "pg.csv"
    write_manifest(manifest, entries + [ManifestEntry("./" + e.path, e.subject_id, "probe") for e in entries])
    out = tmp_path / "pg"
    common = ["--preset", "synth", "--manifest", manifest, "--out", out]
    assert run("describe", *common) == 0
    assert run("eval-ident", *common) == 0
    assert "rank1=100.0000" in (out / "ident_report.txt").read_text()
    assert "rank1=100.00" in capsys.readouterr().out


def test_feret1_dimension(tmp_path):
    corpus = tmp_path / "c"
    synth_corpus(corpus, 2, 2, (128, 128), seed=4)
    out = tmp_path / "run"
    assert run("describe", "--preset", "feret1", "--manifest", corpus / "manifest.csv", "--out", out,
               "--backend", "fft") == 0
    rows, _ = read_descriptors(out / "descriptors.bin")
    assert rows.shape == (4, 131072)


def test_describe_deterministic(ident_corpus, tmp_path):
    outs = []
    for name, threads in (("a", 1), ("b", 3)):
        out = tmp_path / name
        assert run("describe", "--preset", "synth", "--manifest", ident_corpus / "manifest.csv", "--out", out,
                   "--threads", threads) == 0
        outs.append((out / "descriptors.bin").read_bytes())
    assert outs[0] == outs[1]


def test_learned_kind_chain(ident_corpus, tmp_path):
    out = tmp_path / "pca"
    common = ["--preset", "synth", "--kind", "gabor-pca", "--manifest", ident_corpus / "manifest.csv",
              "--out", out, "--set", "n_patches=2000"]
    assert run("run", *common) == 0
    assert (out / "learned.mffc").exists()
    oset = load_offspring(out / "offspring_re.mffc")
    assert len(oset) == 64 and oset.n_unique == 64


def test_verification_chain(tmp_path, capsys):
    corpus = tmp_path / "v"
    assert run("synth", "--out", corpus, "--classes", 8, "--per-class", 3, "--size", 64, 64, "--task",
               "verification", "--kfold", 4, "--pairs-per-fold", 4, "--seed", 1) == 0
    out = tmp_path / "run"
    assert run("run", "--task", "verification", "--preset", "synth", "--manifest", corpus / "manifest.csv",
               "--out", out, "--set", "kfold=4", "--set", "flip=1", "--set", "wpca_dim=10") == 0
    text = (out / "verify_report.txt").read_text()
    assert "acc_sd=" in text and "n_folds=4" in text
    assert (out / "folds.csv").read_text().splitlines()[0] == "fold,auc,acc,n_pairs"
    assert (out / "roc.csv").exists() and (out / "roc.png").exists() and (out / "descriptors_flip.bin").exists()


def test_bench_conv(tmp_path, capsys):
    assert run("bench-conv", "--preset", "synth", "--out", tmp_path, "--sizes", 16, 24, "--repeat", 1) == 0
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "size,K,L,direct_s,fft_s,max_rel_diff" and len(lines) == 3
    assert max(float(l.split(",")[-1]) for l in lines[1:]) < 1e-8
    assert (tmp_path / "bench.png").exists()


def test_threads_env(monkeypatch, ident_corpus, tmp_path):
    monkeypatch.setenv("MFFC_THREADS", "2")
    out = tmp_path / "t"
    assert run("describe", "--preset", "synth", "--manifest", ident_corpus / "manifest.csv", "--out", out) == 0
    assert "threads=2" in (out / "config.txt").read_text()


@pytest.mark.parametrize("argv", [
    ["describe", "--preset", "synth", "--out", "{tmp}"],
    ["describe", "--preset", "nope", "--manifest", "{tmp}/m.csv", "--out", "{tmp}"],
    ["fit-wpca", "--preset", "synth", "--out", "{tmp}"],
    ["make-offspring", "--preset", "synth", "--kind", "gabor-ica", "--out", "{tmp}"],
    ["describe", "--preset", "synth", "--set", "grid_rows", "--out", "{tmp}"],
])
def test_errors_exit_nonzero(tmp_path, capsys, argv):
    argv = [a.replace("{tmp}", str(tmp_path)) for a in argv]
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_image_size_mismatch(ident_corpus, tmp_path, capsys):
    code = run("describe", "--preset", "synth", "--manifest", ident_corpus / "manifest.csv", "--out", tmp_path,
               "--set", "image_height=32", "--set", "image_width=32")
    assert code == 2
    assert "size" in capsys.readouterr().err
