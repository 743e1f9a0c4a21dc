"""
命令行入口测试：输出格式、退出码、配置文件与可复现性
"""
import math

import pytest

from sensing_code.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, load_config_file, main
from sensing_code.codebook import bc_pe_bound, ula_closed_form_distance
from sensing_code.errors import UsageError
from sensing_code.rulers import bose_chowla, format_ruler


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _block(out):
    return dict(line.split("=", 1) for line in out.strip().splitlines())


def _rows(out):
    return [line.split(",") for line in out.strip().splitlines() if not line.startswith("#")]


class TestRulerCommands:
    def test_bose_chowla(self, capsys):
        code, out = _run(capsys, "ruler", "bose-chowla", "--q", "3")
        assert code == EXIT_OK
        assert out == "# bose-chowla(3)\nN=8\n1 6 7\n"

    def test_ula(self, capsys):
        code, out = _run(capsys, "ruler", "ula", "--m", "3", "--n", "8")
        assert code == EXIT_OK
        assert "N=8\n0 1 2\n" in out

    def test_not_prime_power(self, capsys):
        code, _ = _run(capsys, "ruler", "bose-chowla", "--q", "6")
        assert code == EXIT_USAGE

    def test_verify_ok(self, capsys, tmp_path):
        path = tmp_path / "bc5.txt"
        path.write_text(format_ruler(bose_chowla(5)), encoding="utf-8")
        code, out = _run(capsys, "ruler", "verify", "--file", str(path))
        assert code == EXIT_OK
        block = _block(out)
        assert block["q"] == "5"
        assert block["perfect_difference"] == "true"
        assert block["golomb"] == "true"
        assert block["support_size"] == "20"
        assert block["coarray_size"] == "20"
        assert block["positions"].split() == [str(d) for d in bose_chowla(5).positions]

    def test_verify_failure(self, capsys, tmp_path):
        path = tmp_path / "ula.txt"
        path.write_text("N=8\n0 1 2\n", encoding="utf-8")
        code, out = _run(capsys, "ruler", "verify", "--file", str(path))
        assert code == EXIT_VERIFY
        block = _block(out)
        assert block["perfect_difference"] == "false"
        assert block["witness"] == "1"

    def test_verify_positions_line(self, capsys, tmp_path):
        path = tmp_path / "bc3.txt"
        path.write_text("N=8\n1 6 7\n", encoding="utf-8")
        code, out = _run(capsys, "ruler", "verify", "--file", str(path), "--q", "3")
        assert code == EXIT_OK
        block = _block(out)
        assert block["positions"] == "1 6 7"
        assert block["coarray_size"] == "6"

    def test_verify_bom_file(self, capsys, tmp_path):
        path = tmp_path / "bom.txt"
        path.write_text("N=8\n1 6 7\n", encoding="utf-8-sig")
        assert path.read_bytes().startswith(b"\xef\xbb\xbf")
        code, out = _run(capsys, "ruler", "verify", "--file", str(path), "--q", "3")
        assert code == EXIT_OK
        assert _block(out)["perfect_difference"] == "true"

    def test_verify_parse_error(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("N=8\n0 9\n", encoding="utf-8")
        code, _ = _run(capsys, "ruler", "verify", "--file", str(path))
        assert code == EXIT_USAGE

    def test_verify_missing_file(self, capsys, tmp_path):
        code, _ = _run(capsys, "ruler", "verify", "--file", str(tmp_path / "nope.txt"))
        assert code == EXIT_USAGE


class TestCodeCommands:
    def test_dmin_bose_chowla(self, capsys):
        code, out = _run(capsys, "code", "dmin", "--bose-chowla", "3")
        assert code == EXIT_OK
        block = _block(out)
        assert float(block["dmin"]) == pytest.approx(2 / 3, abs=1e-11)
        assert block["argmin_k"] == "1"
        assert block["argmin_pair"] == "1,2"
        assert float(block["bound"]) == pytest.approx(1 / 3)
        theta = [float(t) for t in block["argmin_theta"].split(",")]
        assert theta[0] == pytest.approx(-math.pi / 2)
        assert theta[1] == pytest.approx(math.asin(-0.75))
        assert float(block["correction_radius"]) == pytest.approx(0.5 * (3 - 3 * math.sqrt(1 / 3)), rel=1e-9)
        assert float(block["pe_bound_0db"]) == pytest.approx(bc_pe_bound(3, 8, 1.0))
        assert "jordan_floor" not in block

    def test_dmin_ula(self, capsys):
        code, out = _run(capsys, "code", "dmin", "--ula", "19", "--n", "360")
        assert code == EXIT_OK
        block = _block(out)
        assert float(block["dmin"]) == pytest.approx(ula_closed_form_distance(19, 360), abs=1e-10)
        assert block["bound"].startswith("0.5947")
        assert float(block["welch"]) == pytest.approx(1 - 341 / 6821)
        assert float(block["jordan_floor"]) == pytest.approx(4 * 19 ** 2 / math.pi ** 2)
        assert "pe_bound_0db" not in block

    def test_dmin_custom_file(self, capsys, tmp_path):
        path = tmp_path / "r.txt"
        path.write_text("N=8\n0 1 3\n", encoding="utf-8")
        code, out = _run(capsys, "code", "dmin", "--file", str(path))
        assert code == EXIT_OK
        block = _block(out)
        assert block["bound"] == "NA"
        assert "pe_bound_0db" not in block and "jordan_floor" not in block

    def test_beampattern(self, capsys, tmp_path):
        out_path = tmp_path / "bp.csv"
        code, _ = _run(capsys, "code", "beampattern", "--ula", "3", "--n", "8", "--out", str(out_path))
        assert code == EXIT_OK
        rows = _rows(out_path.read_text(encoding="utf-8"))
        assert rows[0] == ["k", "B"]
        assert len(rows) == 9
        assert rows[1] == ["0", "9"]

    def test_two_geometries(self, capsys):
        code, _ = _run(capsys, "code", "dmin", "--ula", "3", "--bose-chowla", "3")
        assert code == EXIT_USAGE

    def test_no_geometry(self, capsys):
        code, _ = _run(capsys, "code", "dmin")
        assert code == EXIT_USAGE


class TestSimCommands:
    def test_sweep_m_bound_only(self, capsys):
        code, out = _run(capsys, "sim", "sweep-m", "--family", "bc", "--m-max", "10", "--bound-only")
        assert code == EXIT_OK
        rows = _rows(out)
        assert rows[0] == ["M", "N", "dmin", "bound"]
        assert [r[0] for r in rows[1:]] == ["2", "3", "4", "5", "7", "8", "9"]
        assert "# skipped 6 10" in out

    def test_sweep_snr_stdout(self, capsys):
        code, out = _run(capsys, "sim", "sweep-snr", "--q", "5", "--snr-min", "0", "--snr-max", "4",
                         "--step", "2", "--trials", "300")
        assert code == EXIT_OK
        rows = _rows(out)
        assert rows[0] == ["snr_db", "dmin", "pe", "stderr", "bound", "errors", "trials"]
        assert [r[0] for r in rows[1:]] == ["0", "2", "4"]
        assert all(r[-1] == "300" for r in rows[1:])

    def test_reproducible_across_threads(self, capsys, tmp_path):
        common = ["sim", "sweep-snr", "--q", "7", "--snr-min", "0", "--snr-max", "4", "--step", "2",
                  "--trials", "600", "--seed", "42"]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(common + ["--threads", "1", "--out", str(first)]) == EXIT_OK
        assert main(common + ["--threads", "4", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_dat_format(self, capsys):
        code, out = _run(capsys, "sim", "sweep-snr", "--ula", "4", "--snr-min", "0", "--snr-max", "0",
                         "--bound-only", "--format", "dat")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "SNR bound dmin"

    def test_bad_prime_power(self, capsys):
        code, _ = _run(capsys, "sim", "sweep-snr", "--q", "6", "--trials", "10")
        assert code == EXIT_USAGE

    def test_invalid_trials(self, capsys):
        code, _ = _run(capsys, "sim", "sweep-snr", "--q", "3", "--trials", "0")
        assert code == EXIT_USAGE

    def test_unknown_flag(self, capsys):
        code, _ = _run(capsys, "sim", "sweep-snr", "--q", "3", "--colour", "red")
        assert code == EXIT_USAGE


class TestConfigFile:
    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "sim.conf"
        cfg.write_text("# desk run\ntrials = 200\nseed = 7\nsnr-min = 0\nsnr-max = 2\nstep = 2\n", encoding="utf-8")
        code, out = _run(capsys, "sim", "sweep-snr", "--q", "5", "--config", str(cfg), "--trials", "100")
        assert code == EXIT_OK
        rows = _rows(out)
        assert [r[0] for r in rows[1:]] == ["0", "2"]
        assert all(r[-1] == "100" for r in rows[1:])

        _, explicit = _run(capsys, "sim", "sweep-snr", "--q", "5", "--snr-min", "0", "--snr-max", "2",
                           "--step", "2", "--trials", "100", "--seed", "7")
        assert explicit == out

    def test_geometry_from_config(self, capsys, tmp_path):
        cfg = tmp_path / "code.conf"
        cfg.write_text("bose-chowla = 3\n", encoding="utf-8")
        code, out = _run(capsys, "code", "dmin", "--config", str(cfg))
        assert code == EXIT_OK
        assert math.isclose(float(_block(out)["dmin"]), 2 / 3, abs_tol=1e-11)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("trails = 100\n", encoding="utf-8")
        code, _ = _run(capsys, "sim", "sweep-snr", "--q", "3", "--config", str(cfg))
        assert code == EXIT_USAGE

    def test_missing_config(self, capsys, tmp_path):
        code, _ = _run(capsys, "code", "dmin", "--bose-chowla", "3", "--config", str(tmp_path / "none.conf"))
        assert code == EXIT_USAGE

    def test_load_config_normalizes_keys(self, tmp_path):
        cfg = tmp_path / "k.conf"
        cfg.write_text("snr-max = 4\nm_min = 3\n", encoding="utf-8")
        assert load_config_file(cfg) == {"snr_max": "4", "m_min": "3"}

    def test_load_config_missing(self, tmp_path):
        with pytest.raises(UsageError):
            load_config_file(tmp_path / "absent.conf")
