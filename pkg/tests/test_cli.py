"""Command-line contract: exit codes, emitted files, kernel flag parsing."""

import json
import subprocess
import sys

import pytest

from hyperpot import ConvolutionTable, build_instance
from hyperpot.cli import main, parse_kernel_flag
from hyperpot.errors import ConfigError


class TestKernelFlag:
    def test_power(self):
        spec = parse_kernel_flag("power:0.25")
        assert (spec.family, spec.alpha) == ("power", 0.25)

    def test_power_log(self):
        spec = parse_kernel_flag("power_log:0.25:0.5")
        assert (spec.family, spec.alpha, spec.beta) == ("power_log", 0.25, 0.5)

    @pytest.mark.parametrize("bad", ["power", "power:a", "exp:1", "power_log:0.2"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ConfigError):
            parse_kernel_flag(bad)


@pytest.fixture(scope="module")
def inst(tmp_path_factory):
    """A stored chebyshev instance built through the CLI itself."""
    out = tmp_path_factory.mktemp("inst")
    assert main(["make", "chebyshev", "--M", "16", "--out", str(out)]) == 0
    return out


class TestMake:
    def test_writes_both_files(self, inst):
        assert (inst / "space.json").is_file()
        table = json.loads((inst / "table.json").read_text())
        assert table["space_ref"] == "space.json"

    @pytest.mark.parametrize(
        "argv",
        [
            ["make", "cyclic", "--n", "6"],
            ["make", "conjugacy", "--group", "q8"],
            ["make", "bessel", "--grid-size", "16", "--step", "0.5"],
        ],
    )
    def test_other_kinds_roundtrip(self, argv, tmp_path, capsys):
        out = tmp_path / "it"
        assert main(argv + ["--out", str(out)]) == 0
        paths = capsys.readouterr().out.splitlines()
        assert paths == [str(out / "space.json"), str(out / "table.json")]
        build_instance(
            {"kind": "files", "space": paths[0], "table": paths[1]}
        )


class TestCheckCommands:
    def test_axioms_pass(self, inst, capsys):
        rc = main(
            ["check-axioms", "--space", str(inst / "space.json"), "--table", str(inst / "table.json")]
        )
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["passed"] is True
        assert report["tolerance"] == 1e-12

    def test_conditions_pass_and_write(self, inst, tmp_path, capsys):
        rc = main(
            [
                "check-conditions",
                "--space", str(inst / "space.json"),
                "--table", str(inst / "table.json"),
                "--out", str(tmp_path),
            ]
        )
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["c1"] == 1.0
        on_disk = json.loads((tmp_path / "conditions.json").read_text())
        assert on_disk == report

    def test_missing_file_is_usage_error(self, tmp_path, capsys):
        rc = main(
            [
                "check-axioms",
                "--space", str(tmp_path / "no_space.json"),
                "--table", str(tmp_path / "no_table.json"),
            ]
        )
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_failing_certificate_exits_one(self, z6, tmp_path, capsys):
        space, table = z6
        atoms = {k: v for k, v in table.atoms.items() if k not in ((1, 2), (2, 1))}
        space.save(tmp_path / "space.json")
        ConvolutionTable(space, atoms).save(tmp_path / "table.json", space_ref="space.json")
        rc = main(
            [
                "check-conditions",
                "--space", str(tmp_path / "space.json"),
                "--table", str(tmp_path / "table.json"),
            ]
        )
        report = json.loads(capsys.readouterr().out)
        assert rc == 1 and report["passed"] is False


class TestVerifyCommand:
    @pytest.mark.parametrize(
        "suite", ["weak11", "strongpp", "hedberg", "theorem", "corollary", "domination"]
    )
    def test_each_suite_passes_and_writes(self, inst, suite, tmp_path, capsys):
        rc = main(
            [
                "verify", suite,
                "--space", str(inst / "space.json"),
                "--table", str(inst / "table.json"),
                "--out", str(tmp_path),
            ]
        )
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["passed"] is True
        assert json.loads((tmp_path / f"{suite}.json").read_text()) == report

    def test_corollary_needs_power_kernel(self, inst, capsys):
        rc = main(
            [
                "verify", "corollary",
                "--space", str(inst / "space.json"),
                "--table", str(inst / "table.json"),
                "--kernel", "power_log:0.25:0.5",
            ]
        )
        assert rc == 2
        assert "power kernel" in capsys.readouterr().err

    def test_theorem_rejects_fat_kernel(self, inst, capsys):
        # alpha = 0.9 is outside (0, N/p) for N = 1, p = 2
        rc = main(
            [
                "verify", "theorem",
                "--space", str(inst / "space.json"),
                "--table", str(inst / "table.json"),
                "--kernel", "power:0.9",
            ]
        )
        assert rc == 2
        assert "decay exponent" in capsys.readouterr().err

    def test_bad_kernel_flag(self, inst, capsys):
        rc = main(
            [
                "verify", "weak11",
                "--space", str(inst / "space.json"),
                "--table", str(inst / "table.json"),
                "--kernel", "exp:1",
            ]
        )
        assert rc == 2

    def test_unknown_suite_is_argparse_error(self, inst):
        with pytest.raises(SystemExit) as err:
            main(["verify", "nope", "--space", "s", "--table", "t"])
        assert err.value.code == 2


class TestReportCommand:
    def test_small_config_bundle(self, tmp_path, capsys):
        config = {
            "instance": {"kind": "cyclic", "n": 8},
            "kernel": {"family": "power", "alpha": 0.25},
            "p": 2.0,
            "suites": ["axioms", "weak11"],
            "resolutions": [],
            "seed": 0,
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        bundle = tmp_path / "bundle"
        rc = main(["report", "--bundle", str(bundle), "--config", str(cfg_path)])
        line = json.loads(capsys.readouterr().out)
        assert rc == 0 and line == {"passed": True, "bundle": str(bundle)}
        report = json.loads((bundle / "report.json").read_text())
        assert report["passed"] is True and report["schema"] == 1

    def test_corrupt_config_reports_position(self, tmp_path, capsys):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text('{\n "instance": ,\n}')
        rc = main(["report", "--bundle", str(tmp_path / "b"), "--config", str(cfg_path)])
        assert rc == 2
        assert "line 2" in capsys.readouterr().err


def test_module_entrypoint_help():
    proc = subprocess.run(
        [sys.executable, "-m", "hyperpot.cli", "--help"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "hyperpot" in proc.stdout
