import json

import pytest

from levelcross.config import config_from_dict, load_config
from levelcross.errors import ConfigError, DegenerateSpectrum
from levelcross.io import (
    SpectrumFileError,
    load_user_spectra,
    read_csv,
    sha256_file,
    write_csv,
    write_manifest,
    write_user_spectra,
)
from levelcross.spectra import SpectralSnapshot


def test_csv_roundtrip_and_float_repr(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.1 + 0.2), (2, 1e-300)], {"model": "x"})
    text = p.read_text()
    assert text.startswith("# levelcross ")
    assert "# model: x" in text
    header, rows = read_csv(p)
    assert header == ["a", "b"]
    assert float(rows[0][1]) == 0.1 + 0.2 and float(rows[1][1]) == 1e-300


def test_manifest_hashes(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a"], [(1,)], {})
    m = write_manifest(tmp_path, "levelmap", {"model": "segment"}, "abc", [p], seeds=[3])
    data = json.loads(m.read_text())
    assert data["files"]["t.csv"] == sha256_file(p)
    assert data["seeds"] == [3] and data["config_sha256"] == "abc"


def test_spectrum_file_roundtrip(tmp_path):
    s1 = SpectralSnapshot([1.0, 2.5], [1.7], label="tau1", complete=True)
    s2 = SpectralSnapshot([0.5], [0.25, 3.0], label="tau2")
    p = write_user_spectra(tmp_path / "s.txt", s1, s2)
    r1, r2 = load_user_spectra(p)
    assert r1 == s1 and r2 == s2


@pytest.mark.parametrize("body,line,exc", [
    ("[tau1]\nG1 1\nG1 0.5\n[tau2]\nG1 1\n", 3, SpectrumFileError),
    ("G1 1\n", 1, SpectrumFileError),
    ("[tau1]\nG3 1\n", 2, SpectrumFileError),
    ("[tau1]\nG1 abc\n", 2, SpectrumFileError),
    ("[tau1]\nG1 1\n[tau1]\n", 3, SpectrumFileError),
    ("[tau9]\n", 1, SpectrumFileError),
])
def test_spectrum_file_errors_carry_line(tmp_path, body, line, exc):
    p = tmp_path / "s.txt"
    p.write_text(body)
    with pytest.raises(exc) as info:
        load_user_spectra(p)
    assert info.value.lineno == line
    assert f":{line}:" in str(info.value)


def test_spectrum_file_missing_section_and_ties(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("[tau1]\nG1 1\n")
    with pytest.raises(ConfigError, match="tau2"):
        load_user_spectra(p)
    p.write_text("[tau1]\nG1 1\nG2 1\n[tau2]\nG1 1\n")
    with pytest.raises(DegenerateSpectrum, match="tau1"):
        load_user_spectra(p)
    with pytest.raises(ConfigError):
        load_user_spectra(tmp_path / "nope.txt")


def test_config_defaults_and_overrides(tmp_path):
    cfg = config_from_dict({})
    cfg.validate()
    assert cfg.model == "segment" and cfg.segment.a2 == 3.0
    p = tmp_path / "c.yaml"
    p.write_text("model: tdse\ntdse:\n  epsilon: 2e-3\n  k0: 2\n")
    cfg = load_config(p)
    cfg.validate()
    assert cfg.tdse.epsilon == 0.002 and cfg.tdse.k0 == 2


@pytest.mark.parametrize("raw,match", [
    ({"model": "nope"}, "model"),
    ({"color": 1}, "unknown top-level"),
    ({"segment": {"a3": 1}}, "segment.a3"),
    ({"segment": {"level_count": 1.5}}, "integer"),
    ({"bernoulli": {"beta": 1.0}}, "beta"),
    ({"bernoulli": {"redraw": "yes"}}, "true or false"),
    ({"spin": {"b1": 0.5}}, "2B"),
    ({"trajectory": {"k0": [0]}}, "k0"),
    ({"tdse": {"tau1": 0.9}}, "tdse"),
    ({"tdse": {"barrier": "soft"}}, "barrier"),
    ({"model": "user-spectra"}, "user_spectra.path"),
    ({"seed": -4}, "seed"),
])
def test_config_rejections(raw, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(raw).validate()


def test_config_digest_stable():
    a = config_from_dict({"seed": 4})
    b = config_from_dict({"seed": 4})
    assert a.digest() == b.digest()
    assert a.digest() != config_from_dict({"seed": 5}).digest()


def test_bad_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(p)
