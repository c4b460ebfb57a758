import numpy as np
import pytest

from angspec.analytics import FRINGE_CSV_HEADER
from angspec.cli import main
from angspec.field import IntensityProfile
from angspec.presets import IMAGE_SCENE, PRESETS
from angspec.svgplot import write_profile_svg

MINIMAL = "source { wavelength_nm = 845 }\n"


@pytest.fixture
def scene_file(tmp_path):
    def make(text, name="s.scene"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return make


class TestRun:
    def test_writes_csv_and_svg(self, scene_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", scene_file(IMAGE_SCENE), "--out", str(out), "--svg"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["crystal_fund.csv", "crystal_fund.svg", "crystal_sh.csv", "crystal_sh.svg",
                         "image_fund.csv", "image_fund.svg", "image_sh.csv", "image_sh.svg"]
        assert len(capsys.readouterr().out.split()) == 8
        prof = IntensityProfile.read_csv(out / "image_sh.csv")
        assert prof.values.max() == pytest.approx(1.0)

    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.scene")]) == 1
        assert "cannot read scene" in capsys.readouterr().err

    def test_parse_error(self, scene_file, capsys):
        path = scene_file("source { wavelength_nm = 845 \n")
        assert main(["run", path]) == 1
        assert f"{path}:1:29: error:" in capsys.readouterr().err

    def test_validation_error(self, scene_file, capsys):
        path = scene_file(MINIMAL + "grid { n = 1024, dx_um = 50 }\nslit { a_mm = 0.2, d_mm = 0.4 }\n")
        assert main(["run", path]) == 2
        assert ":3:1: error:" in capsys.readouterr().err

    def test_runtime_error(self, scene_file, tmp_path):
        path = scene_file(MINIMAL + "grid { preset = coarse }\ndetect { fit = fringes }\n")
        assert main(["run", path, "--out", str(tmp_path)]) == 3

    def test_fit_rows(self, scene_file, tmp_path):
        path = scene_file(IMAGE_SCENE.replace("detect    { label = crystal, range_mm = 3 }",
                                              "detect    { label = crystal, range_mm = 2.4, fit = fringes }"))
        assert main(["run", path, "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "crystal_sh_fit.csv").read_text().splitlines()
        assert lines[0] == FRINGE_CSV_HEADER
        mu1, mu2 = (float(v) for v in lines[1].split(",")[1:3])
        assert mu1 / mu2 == pytest.approx(4.0, rel=1e-3)


class TestFigure:
    @pytest.mark.parametrize("name", list(PRESETS))
    def test_presets(self, name, tmp_path):
        assert main(["figure", name, "--out", str(tmp_path)]) == 0
        prof = IntensityProfile.read_csv(tmp_path / f"{name}.csv")
        assert prof.values.max() == pytest.approx(1.0)
        assert (tmp_path / f"{name}.svg").read_bytes().startswith(b"<?xml")
        if PRESETS[name].fit:
            assert (tmp_path / f"{name}_fit.csv").read_text().startswith(FRINGE_CSV_HEADER)

    def test_unknown(self, capsys):
        assert main(["figure", "fig9"]) == 1
        assert "fig3" in capsys.readouterr().err


class TestOracle:
    def test_pass(self, scene_file, capsys):
        assert main(["oracle", scene_file(IMAGE_SCENE), "--z", "0.434"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [ln.split()[0] for ln in lines] == ["fund", "sh"]
        assert all(ln.endswith("PASS") for ln in lines)

    def test_threshold_failure(self, scene_file, capsys):
        assert main(["oracle", scene_file(IMAGE_SCENE), "--z", "0.434", "--threshold", "1e-14"]) == 4
        assert "FAIL" in capsys.readouterr().out

    def test_zero_distance(self, scene_file, capsys):
        assert main(["oracle", scene_file(IMAGE_SCENE), "--z", "0"]) == 2
        assert "z != 0" in capsys.readouterr().err

    def test_aliased(self, scene_file):
        path = scene_file(MINIMAL + "grid { preset = coarse }\nlens { f_cm = 1 }\npropagate { z_cm = 1 }\n")
        assert main(["oracle", path, "--z", "0.01"]) == 2


class TestFit:
    def _csv(self, tmp_path, mu1=0.6, mu2=0.3):
        x = np.linspace(-1.5e-3, 1.5e-3, 3001)
        k = 2 * np.pi / 0.1e-3
        y = np.sinc(x / 0.6e-3 / np.pi) ** 4 * (1 + mu1 * np.cos(k * x) + mu2 * np.cos(2 * k * x))
        return str(IntensityProfile(x, y).write_csv(tmp_path / "p.csv"))

    def test_two_frequency(self, tmp_path, capsys):
        assert main(["fit", self._csv(tmp_path), "--z", "0.1"]) == 0
        header, row = capsys.readouterr().out.splitlines()
        values = [float(v) for v in row.split(",")]
        assert header == FRINGE_CSV_HEADER
        assert values[:3] == pytest.approx([0.1, 0.6, 0.3], abs=1e-6)

    def test_lock_and_single(self, tmp_path, capsys):
        path = self._csv(tmp_path, mu2=0.0)
        assert main(["fit", path, "--lock-ratio"]) == 0
        assert main(["fit", path, "--single", "--envelope-power", "4"]) == 0
        rows = [ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith("z_m")]
        assert float(rows[1].split(",")[2]) == 0.0

    def test_errors(self, tmp_path):
        assert main(["fit", str(tmp_path / "none.csv")]) == 1
        flat = IntensityProfile(np.linspace(0, 1, 100), np.ones(100)).write_csv(tmp_path / "flat.csv")
        assert main(["fit", str(flat)]) == 3


class TestEvolution:
    def test_csv(self, scene_file, capsys):
        assert main(["evolution", scene_file(IMAGE_SCENE), "--z", "0.005", "0", "0.001"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == FRINGE_CSV_HEADER
        assert [float(ln.split(",")[0]) for ln in lines[1:]] == [0.0, 0.001, 0.005]

    def test_failed_plane_is_nan(self, scene_file, capsys):
        assert main(["evolution", scene_file(IMAGE_SCENE), "--z", "0.05"]) == 0
        out, err = capsys.readouterr()
        assert out.splitlines()[1].endswith("nan") and "z = 0.05 m" in err

    def test_negative(self, scene_file):
        assert main(["evolution", scene_file(IMAGE_SCENE), "--z", "-0.1"]) == 2


def test_svg_is_deterministic(tmp_path):
    x = np.linspace(-1e-3, 1e-3, 201)
    y = np.cos(x * 1e4) ** 2
    a = write_profile_svg(tmp_path / "a.svg", x, y, "t", overlay=y * 0.9).read_bytes()
    b = write_profile_svg(tmp_path / "b.svg", x, y, "t", overlay=y * 0.9).read_bytes()
    assert a == b and b"<svg" in a
