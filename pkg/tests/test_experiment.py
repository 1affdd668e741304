"""Corpus ingestion, sweeps, and the CSV contract."""

import logging
import math

import numpy as np
import pytest

from nlmlab import (CurveRow, DecompositionReport, ExpectationRow, NoiseSpec,
                    RegularityPoint, SweepSpec, add_gaussian_noise, center_crop,
                    csv_text, emit_csv, ingest_corpus, parse_variant, psnr,
                    run_decomposition_sweep, run_regularity, run_sweep,
                    save_image)


def smooth_image(shape, seed):
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 255, shape)
    k = np.ones((5, 5)) / 25.0
    pad = np.pad(base, 2, mode="reflect")
    out = np.zeros(shape)
    for i in range(5):
        for j in range(5):
            out += k[i, j] * pad[i : i + shape[0], j : j + shape[1]]
    return out


@pytest.fixture
def tiny_corpus(tmp_path):
    root = tmp_path / "corpus"
    root.mkdir()
    for idx, name in enumerate(["b.pgm", "a.pgm", "c.pgm"]):
        save_image(smooth_image((40, 40), idx), root / name)
    return root


# ---------------------------------------------------------------------------
# Ingestion


def test_ingest_alphabetical_order(tiny_corpus):
    names = [name for name, _ in ingest_corpus(tiny_corpus)]
    assert names == ["a.pgm", "b.pgm", "c.pgm"]


def test_ingest_center_crop(tmp_path):
    root = tmp_path / "c"
    root.mkdir()
    img = np.zeros((512, 512))
    img[192:320, 192:320] = 200.0  # center block
    save_image(img, root / "big.pgm")
    (_, out), = ingest_corpus(root, crop=128)
    assert out.shape == (128, 128)
    assert (out == 200.0).all()


def test_ingest_skips_corrupt_with_warning(tmp_path, caplog):
    root = tmp_path / "c"
    root.mkdir()
    save_image(np.full((8, 8), 10.0), root / "good.pgm")
    (root / "bad.pgm").write_bytes(b"P5\n4 4\n255\nxx")  # truncated raster
    with caplog.at_level(logging.WARNING, logger="nlmlab"):
        images = ingest_corpus(root)
    assert [name for name, _ in images] == ["good.pgm"]
    assert any("bad.pgm" in rec.message for rec in caplog.records)


def test_ingest_empty_directory_raises(tmp_path):
    root = tmp_path / "empty"
    root.mkdir()
    with pytest.raises(ValueError, match="no supported images"):
        ingest_corpus(root)
    with pytest.raises(ValueError, match="not found"):
        ingest_corpus(tmp_path / "missing")


def test_center_crop_geometry():
    img = np.arange(35.0).reshape(5, 7)
    out = center_crop(img, 3)
    assert np.array_equal(out, img[1:4, 2:5])
    assert center_crop(img, 100).shape == (5, 7)


# ---------------------------------------------------------------------------
# Sweeps


def test_sweep_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="strictly increasing"):
        SweepSpec(corpus_dir=tmp_path, d_values=(3.0, 3.0))
    with pytest.raises(ValueError, match="non-empty"):
        SweepSpec(corpus_dir=tmp_path, d_values=())
    with pytest.raises(ValueError, match="variants"):
        SweepSpec(corpus_dir=tmp_path, variants=())


def test_sweep_d0_equals_raw_noise_psnr(tiny_corpus):
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(0.0,),
                     variants=(parse_variant("w"),), sigma=20.0,
                     seed_base=5, crop=None)
    (row,) = run_sweep(spec)
    # d = 0 collapses the estimator to the identity, so the sweep value is
    # the raw-noise PSNR, recomputed here directly
    expected = []
    for idx, (_, img) in enumerate(ingest_corpus(tiny_corpus)):
        noisy, _ = add_gaussian_noise(img, NoiseSpec(20.0, 5 + idx))
        expected.append(psnr(img, noisy))
    assert row.psnr_mean == pytest.approx(float(np.mean(expected)), abs=1e-12)
    assert row.n_images == 3
    assert row.psnr_mean == pytest.approx(10 * math.log10(255**2 / 400.0), abs=1.0)


def test_sweep_noise_shared_across_variants_and_d(tiny_corpus):
    # identical estimator settings expressed twice give identical rows:
    # topk(80) at d=4 (window 49) is the same estimator as "all"
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(4.0,),
                     variants=(parse_variant("w"), parse_variant("w_v")),
                     sigma=20.0, crop=None)
    rows = run_sweep(spec)
    assert rows[0].psnr_mean == rows[1].psnr_mean
    assert rows[0].psnr_std == rows[1].psnr_std
    assert rows[0].variant_label == "w"
    assert rows[1].variant_label == "w_v"


def test_sweep_deterministic(tiny_corpus):
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(1.0, 3.0),
                     variants=(parse_variant("w_v0"),), sigma=20.0, crop=None)
    assert run_sweep(spec) == run_sweep(spec)


def test_sweep_writes_output_path(tiny_corpus, tmp_path):
    out = tmp_path / "rows.csv"
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(1.0,),
                     variants=(parse_variant("w"),), crop=None, output_path=out)
    rows = run_sweep(spec)
    assert csv_text(rows) == out.read_text()


def test_decomposition_sweep_cardinality(tiny_corpus):
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(3.0,),
                     variants=(parse_variant("w_v0"), parse_variant("w_u0")),
                     sigma=20.0, crop=None)
    rows = run_decomposition_sweep(spec)
    assert [r.variant_label for r in rows] == ["w_v0", "w_u0"]
    for r in rows:
        assert r.d == 3.0
        assert r.eqm == pytest.approx(r.bias + r.variance + r.covariance, rel=1e-9)


def test_regularity_sweep(tiny_corpus):
    spec = SweepSpec(corpus_dir=tiny_corpus, d_values=(2.0, 4.0), crop=None)
    rows = run_regularity(spec, k=10)
    assert [r.d for r in rows] == [2.0, 4.0]
    assert all(r.r >= 0 for r in rows)


# ---------------------------------------------------------------------------
# CSV contract


def test_csv_header_only_for_empty_rows(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path, kind=CurveRow)
    assert path.read_bytes() == b"variant,d,psnr_mean,psnr_std,n_images\n"


def test_csv_single_row_shape(tmp_path):
    row = CurveRow(variant_label="w", d=4.0, psnr_mean=30.123456789012345,
                   psnr_std=0.25, n_images=6)
    path = tmp_path / "one.csv"
    emit_csv([row], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "variant,d,psnr_mean,psnr_std,n_images"
    assert len(lines[1].split(",")) == 5
    assert lines[1].split(",")[0] == "w"
    assert lines[1].split(",")[4] == "6"


def test_csv_round_trip_precision(tmp_path):
    rows = [
        DecompositionReport(bias=1.2345678901234e-3, variance=987.654321098765,
                            covariance=-4.2e-7, eqm=math.pi * 100, d=7.0,
                            variant_label="w_u0"),
    ]
    path = tmp_path / "d.csv"
    emit_csv(rows, path)
    header, line = path.read_text().splitlines()
    assert header == "variant,d,bias,variance,covariance,eqm"
    cells = line.split(",")
    for got, want in zip(cells[1:], (7.0, rows[0].bias, rows[0].variance,
                                     rows[0].covariance, rows[0].eqm)):
        assert float(got) == pytest.approx(want, rel=1e-10)


def test_csv_schemas_and_errors(tmp_path):
    assert csv_text([RegularityPoint(d=3.0, r=12.5)]).splitlines()[0] == "d,r"
    exp_row = ExpectationRow(x_row=1, x_col=2, y_row=3, y_col=4, sigma=20.0,
                             trials=100, empirical_offset=799.0, std_error=5.0,
                             expected_offset=800.0)
    text = csv_text([exp_row])
    assert text.splitlines()[0].startswith("x_row,x_col,y_row,y_col")
    with pytest.raises(ValueError, match="kind"):
        csv_text([])
    with pytest.raises(TypeError, match="mixed"):
        csv_text([RegularityPoint(d=1.0, r=0.0), exp_row])
    with pytest.raises(OSError):
        emit_csv([exp_row], tmp_path / "no_dir" / "x.csv")


def test_csv_twelve_significant_digits():
    row = RegularityPoint(d=1.0, r=1.0 / 3.0)
    assert csv_text([row]).splitlines()[1] == "1,0.333333333333"
