import re
from pathlib import Path

import pytest

from conformal_cantor.cli import main, parse_complex
from conformal_cantor.config import ConfigError, parse_config
from conformal_cantor.report import parse_report

ROOT = Path(__file__).resolve().parents[1]
BUZZARD = str(ROOT / "configs" / "buzzard.yaml")
PERTURBED = str(ROOT / "configs" / "buzzard_perturbed.yaml")
TWO_LETTER = str(ROOT / "configs" / "two_letter.yaml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, parse_report(out), out, err


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def svg_ids(path, prefix):
    return re.findall(rf'id="({prefix}[^"]*)"', Path(path).read_text())


def test_validate_preset_passes(capsys):
    code, rep, out, _ = run(capsys, "validate", "--config", BUZZARD)
    assert code == 0
    assert rep["status"] == "pass"
    assert out.startswith("# conformal-cantor ")
    assert not any(v.startswith("FAIL") for k, v in rep.items() if k.startswith("check."))


def test_validate_covering_violation(capsys, tmp_path):
    cfg = write(tmp_path, "buzzard:\n  delta: 7.0e-8\n  c1: 1.0\n")
    code, rep, _, _ = run(capsys, "validate", "--config", cfg)
    assert code == 1
    assert rep["status"] == "fail"
    assert "covering" in rep["system.violation.covering"]


def test_malformed_yaml_is_input_error(capsys, tmp_path):
    cfg = write(tmp_path, "buzzard:\n  delta: [1, 2\n")
    code, _, _, err = run(capsys, "validate", "--config", cfg)
    assert code == 2
    assert "line" in err


def test_missing_file_is_input_error(capsys, tmp_path):
    code, _, _, err = run(capsys, "validate", "--config", str(tmp_path / "nope.yaml"))
    assert code == 2 and "cannot read" in err


def test_explicit_config_validates(capsys):
    code, rep, _, _ = run(capsys, "validate", "--config", TWO_LETTER)
    assert code == 0
    assert rep["system.letters"] == "2" and rep["system.affine"] == "false"


def test_config_errors_name_the_field():
    with pytest.raises(ConfigError, match="pieces.a.side"):
        parse_config("alphabet: [a]\ntransitions: full\npieces:\n  a: {center: [0, 0], side: -1}\n"
                     "branches: {}\nmu: 3\n")
    with pytest.raises(ConfigError, match="unknown fields"):
        parse_config("buzzard: {delta: 7.0e-8}\nbogus: 1\n")
    with pytest.raises(ConfigError, match="cannot be combined"):
        parse_config("buzzard: {delta: 7.0e-8}\nalphabet: [a]\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("buzzard:\n  delta: 7e-8: 3\n")


def test_plain_exponent_is_read_as_number():
    cfg = parse_config("buzzard:\n  delta: 7e-8\n")
    assert cfg.params.delta == 7e-8


def test_limits_centre_letter_is_identity(capsys):
    code, rep, _, _ = run(capsys, "limits", "--config", BUZZARD, "--theta", "2,4")
    assert code == 0
    assert rep["k.alpha"] == "1,0" and rep["k.beta"] == "0,0"
    assert rep["error_radius"] == "0"


def test_limits_nonlinear_steps_decay(capsys):
    code, rep, _, _ = run(capsys, "limits", "--config", PERTURBED, "--theta", "4^40")
    assert code == 0
    steps = [float(rep[f"step.{n}"]) for n in range(1, 10)]
    assert all(b < a for a, b in zip(steps, steps[1:]))
    assert float(rep["error_radius"]) <= 1e-10


def test_limits_bad_theta(capsys):
    code, _, _, err = run(capsys, "limits", "--config", BUZZARD, "--theta", "4,12")
    assert code == 2 and "error" in err
    code, _, _, _ = run(capsys, "limits", "--config", BUZZARD, "--theta", "x^^2")
    assert code == 2


def test_limits_truncation_reported(capsys):
    code, rep, _, _ = run(capsys, "limits", "--config", PERTURBED, "--theta", "4,4")
    assert code == 1 and rep["status"] == "truncation"


def test_search_examples(capsys):
    code, rep, _, _ = run(capsys, "search", "--config", BUZZARD, "--depth", "6")
    assert code == 0 and rep["status"] == "witness"
    assert abs(parse_complex(rep["point"])) < 1e-3
    code, rep, _, _ = run(capsys, "search", "--config", BUZZARD, "--beta", "10,0")
    assert code == 0 and rep["status"] == "exhausted"
    assert rep["certified_depth"] == "0"


def test_search_rejects_bad_rc(capsys):
    assert run(capsys, "search", "--config", BUZZARD, "--alpha", "0,0")[0] == 2
    assert run(capsys, "search", "--config", BUZZARD, "--beta", "1;2")[0] == 2


def test_verify_passes_and_is_deterministic(capsys, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a, b = tmp_path / "a" / "rep.txt", tmp_path / "b" / "rep.txt"
    sa, sb = tmp_path / "a" / "cert.svg", tmp_path / "b" / "cert.svg"
    assert main(["verify", "--config", BUZZARD, "--samples", "800", "--out", str(a), "--svg", str(sa)]) == 0
    assert main(["verify", "--config", BUZZARD, "--samples", "800", "--out", str(b), "--svg", str(sb)]) == 0
    # the reports differ only in the svg path they record
    assert a.read_text().replace("/a/", "/b/") == b.read_text()
    assert sa.read_bytes() == sb.read_bytes()
    rep = parse_report(a.read_text())
    assert rep["failures"] == "0" and rep["status"] == "pass"
    assert len(svg_ids(sa, "arrow-")) == int(rep["svg.arrows"]) > 0


def test_verify_broken_params_exit_one(capsys, tmp_path):
    cfg = write(tmp_path, "buzzard:\n  delta: 7.0e-8\n  kappa2: 0.01\n")
    code, rep, _, _ = run(capsys, "verify", "--config", cfg, "--samples", "200")
    assert code == 1
    assert int(rep["failures"]) > 0 and "witness.0" in rep


def test_verify_needs_preset(capsys):
    assert run(capsys, "verify", "--config", TWO_LETTER)[0] == 2


def test_render_cylinders(capsys, tmp_path):
    svg = tmp_path / "cyl.svg"
    code, rep, _, _ = run(capsys, "render", "cylinders", "--config", BUZZARD, "--depth", "2", "--svg", str(svg))
    assert code == 0 and rep["squares"] == "729"
    assert len(svg_ids(svg, "cyl-")) == 729


def test_render_lambda_slice(capsys, tmp_path):
    svg = tmp_path / "slice.svg"
    code, rep, _, _ = run(capsys, "render", "lambda-slice", "--config", BUZZARD, "--depth", "0", "--svg", str(svg))
    assert code == 0 and rep["squares"] == "9"
    assert len(svg_ids(svg, "slice-")) == 9


def test_render_certificate_diagram(capsys, tmp_path):
    svg = tmp_path / "cert.svg"
    code, rep, _, _ = run(capsys, "render", "certificate-diagram", "--config", BUZZARD, "--samples", "400",
                          "--svg", str(svg))
    assert code == 0
    assert len(svg_ids(svg, "shade-")) == int(rep["shading"])
    assert {"band-L-1", "band-L0", "band-L1"} <= set(svg_ids(svg, "band-"))
    assert len(svg_ids(svg, "arrow-")) == int(rep["arrows"]) > 0


def test_render_errors(capsys, tmp_path):
    assert run(capsys, "render", "cylinders", "--config", BUZZARD)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["render", "mandelbrot", "--config", BUZZARD, "--svg", str(tmp_path / "x.svg")])
    assert info.value.code == 2
