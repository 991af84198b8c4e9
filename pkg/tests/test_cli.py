"""Scenario parsing, the named-codebook registry, and the command line."""

import subprocess
import sys

import numpy as np
import pytest

from pmvlc.channel import fixture_h06_blocked
from pmvlc.cli import PRESETS, codebook_report, main, preset_scenarios
from pmvlc.scenarios import (
    CB1_PERMS,
    CB2_PERMS,
    CODEBOOKS,
    ConfigError,
    named_codebook,
    parse_scenario,
    scheme_label,
)
from pmvlc.txcodec import PamConfig

MINIMAL = "detectors = ml\nebn0_db = 90,100\ncodebook = cb1\n"


class TestScenarioParsing:
    def test_minimal_defaults(self):
        sc = parse_scenario(MINIMAL, source="run.ini")
        assert sc.name == "run"
        assert sc.detectors == ("ml",)
        assert sc.ebn0_grid == (90.0, 100.0)
        assert sc.errors_target == 200
        assert sc.block_cap == 10_000_000
        assert sc.seed == 0
        assert sc.scheme == "P(4,8,1,1)"

    def test_range_grid_includes_endpoint(self):
        sc = parse_scenario(MINIMAL.replace("90,100", "94:106:2"))
        assert sc.ebn0_grid == (94.0, 96.0, 98.0, 100.0, 102.0, 104.0, 106.0)

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match=r":2: unknown key 'bogus'"):
            parse_scenario("detectors = ml\nbogus = 1\n", source="x.ini")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate key 'seed'"):
            parse_scenario(MINIMAL + "seed = 1\nseed = 2\n")

    def test_empty_value_rejected(self):
        with pytest.raises(ConfigError, match="empty value"):
            parse_scenario("detectors =\nebn0_db = 90\n")

    def test_non_assignment_line_rejected(self):
        with pytest.raises(ConfigError, match=r":1: expected 'key = value'"):
            parse_scenario("just some words\n")

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="missing required key 'detectors'"):
            parse_scenario("ebn0_db = 90\n")
        with pytest.raises(ConfigError, match="missing required key 'ebn0_db'"):
            parse_scenario("detectors = ml\ncodebook = cb1\n")

    def test_bad_grid_string(self):
        with pytest.raises(ConfigError, match="bad grid"):
            parse_scenario(MINIMAL.replace("90,100", "90:100"))
        with pytest.raises(ConfigError, match="bad grid"):
            parse_scenario(MINIMAL.replace("90,100", "100:90:2"))

    def test_descending_grid_rejected(self):
        with pytest.raises(ConfigError, match="ascending"):
            parse_scenario(MINIMAL.replace("90,100", "100,90"))

    def test_unknown_detector(self):
        with pytest.raises(ConfigError, match="unknown detector 'mle'"):
            parse_scenario(MINIMAL.replace("ml", "mle"))

    def test_coded_detector_needs_codebook(self):
        with pytest.raises(ConfigError, match="need a codebook"):
            parse_scenario("detectors = bf\nebn0_db = 90\n")

    def test_rc_sm_need_no_codebook(self):
        sc = parse_scenario("detectors = rc,sm\nebn0_db = 90\nrc_m = 4\n")
        assert sc.codebook is None
        assert sc.rc_m == 4

    def test_bb_rejects_multiweight_book(self):
        with pytest.raises(ConfigError, match="weight-1"):
            parse_scenario("detectors = bb\nebn0_db = 90\ncodebook = combined32\n")

    def test_fixture_conflicts_with_geometry_keys(self):
        with pytest.raises(ConfigError, match="conflicts with geometry keys"):
            parse_scenario(MINIMAL + "channel = h02\ntx_spacing = 0.6\n")

    def test_unknown_channel(self):
        with pytest.raises(ConfigError, match="channel must be one of"):
            parse_scenario(MINIMAL + "channel = h99\n")

    def test_bad_blockage_pair(self):
        with pytest.raises(ConfigError, match="not tx-rx"):
            parse_scenario(MINIMAL + "channel = geometry\nblockage = 1-2-3\n")

    def test_geometry_blockage_zero_pattern_matches_fixture(self):
        sc = parse_scenario(
            "detectors = ml\nebn0_db = 90\ncodebook = cb1\n"
            "channel = geometry\ntx_spacing = 0.6\nblockage = 1-4,2-3,3-2,4-1\n")
        np.testing.assert_array_equal(sc.channel.H == 0.0,
                                      fixture_h06_blocked().H == 0.0)
        # off-blockage gains follow the generated geometry
        assert sc.channel.H[0, 0] == pytest.approx(6.888e-5, rel=1e-3)

    def test_comments_and_blanks_ignored(self):
        sc = parse_scenario("# comment\n\n; other comment\n" + MINIMAL)
        assert sc.detectors == ("ml",)


class TestRegistries:
    def test_codebook_sizes(self):
        sizes = {"full24": 24, "pm16": 16, "w2lex8": 8, "w2sel8": 8,
                 "combined32": 32, "cb1": 8, "cb2": 8}
        assert set(sizes) == set(CODEBOOKS)
        for name, size in sizes.items():
            assert named_codebook(name).size == size

    def test_unknown_codebook(self):
        with pytest.raises(ConfigError, match="unknown codebook"):
            named_codebook("cb3")

    def test_cb1_cb2_permutations(self):
        for name, perms in (("cb1", CB1_PERMS), ("cb2", CB2_PERMS)):
            cb = named_codebook(name)
            got = tuple(entry.components[0].symbols for entry in cb.entries)
            assert got == perms

    def test_scheme_labels(self):
        assert scheme_label(named_codebook("combined32"), PamConfig()) == "P(4,32,1,{1,2})"
        assert scheme_label(named_codebook("cb1"), PamConfig(M=2)) == "P(4,8,2,1)"


class TestCodebookReport:
    def test_full_multiweight_counts(self):
        text = codebook_report(4, (1, 2, 3))
        assert "weight 1: 24 codewords" in text
        assert "weight 2: 90 codewords" in text
        assert "weight 3: 24 codewords" in text
        assert "combined Q = 138" in text
        assert "bits per block (M=1): 7" in text

    def test_single_weight(self):
        text = codebook_report(3, (1,))
        assert "weight 1: 6 codewords" in text
        assert "bits per block (M=1): 2" in text

    def test_bits_per_symbol_uses_signaling_set(self):
        text = codebook_report(4, (1,), M=2)
        # log2(24 * 2) / 4
        assert f"bits per symbol: {np.log2(48) / 4:.4g}" in text

    def test_length_guard(self):
        with pytest.raises(ConfigError):
            codebook_report(7, (1,))

    def test_bad_weight(self):
        with pytest.raises(ConfigError):
            codebook_report(4, (4,))


TINY = ("name = tiny\ncodebook = cb1\nchannel = h02\ndetectors = bf\n"
        "ebn0_db = 96,100\nerrors_target = 40\nblock_cap = 20000\n")


class TestCommandLine:
    def test_codebook_exit_zero(self, capsys):
        assert main(["codebook", "--length", "4", "--weights", "1"]) == 0
        assert "weight 1: 24 codewords" in capsys.readouterr().out

    def test_channel_fixture_prints_matrix(self, capsys):
        assert main(["channel", "--fixture", "h02"]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert len(rows) == 4
        assert rows[0].split()[0] == "1.070800e-04"

    def test_channel_unknown_fixture(self, capsys):
        assert main(["channel", "--fixture", "h03"]) == 1

    def test_bad_cli_args(self):
        assert main(["simulate"]) == 1  # --scenario is required
        assert main(["no-such-command"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_simulate_writes_csvs(self, tmp_path, capsys):
        scen = tmp_path / "tiny.ini"
        scen.write_text(TINY)
        assert main(["simulate", "--scenario", str(scen),
                     "--out-dir", str(tmp_path), "--threads", "2"]) == 0
        ber = (tmp_path / "tiny_ber.csv").read_text().splitlines()
        assert ber[0] == "scheme,detector,ebn0_db,ber,bit_errors,bits,blocks,seed"
        assert len(ber) == 3
        bound = (tmp_path / "tiny_bound.csv").read_text().splitlines()
        assert bound[0] == "scheme,ebn0_db,bound"

    def test_bound_only(self, tmp_path):
        scen = tmp_path / "tiny.ini"
        scen.write_text(TINY)
        assert main(["bound", "--scenario", str(scen),
                     "--out-dir", str(tmp_path / "b")]) == 0
        assert (tmp_path / "b" / "tiny_bound.csv").exists()

    def test_seed_override_lands_in_csv(self, tmp_path):
        scen = tmp_path / "tiny.ini"
        scen.write_text(TINY)
        assert main(["simulate", "--scenario", str(scen),
                     "--out-dir", str(tmp_path), "--seed", "9"]) == 0
        rows = (tmp_path / "tiny_ber.csv").read_text().splitlines()[1:]
        assert all(row.endswith(",9") for row in rows)

    def test_config_error_exit_one(self, tmp_path, capsys):
        scen = tmp_path / "bad.ini"
        scen.write_text("detectors = ml\n")
        assert main(["simulate", "--scenario", str(scen)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_runtime_error_exit_two(self, tmp_path, capsys):
        scen = tmp_path / "tiny.ini"
        scen.write_text(TINY)
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code = main(["simulate", "--scenario", str(scen),
                     "--out-dir", str(blocker / "sub")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_rerun_identical_across_threads(self, tmp_path, capsys):
        scen = tmp_path / "tiny.ini"
        scen.write_text(TINY)
        outs = []
        for threads, sub in (("1", "a"), ("3", "b")):
            assert main(["simulate", "--scenario", str(scen),
                         "--out-dir", str(tmp_path / sub),
                         "--threads", threads]) == 0
            outs.append((tmp_path / sub / "tiny_ber.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_console_script_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "pmvlc.cli",
                               "codebook", "--length", "3", "--weights", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "weight 1: 6 codewords" in proc.stdout


class TestPresets:
    def test_registry_names(self):
        assert {"fig3", "fig4-cb1-cb2", "fig6-blockage"} <= set(PRESETS)

    def test_all_preset_files_parse(self):
        for name in PRESETS:
            scenarios = preset_scenarios(name)
            assert len(scenarios) == len(PRESETS[name])
            for sc in scenarios:
                assert sc.ebn0_grid[0] < sc.ebn0_grid[-1]
                assert sc.codebook is not None

    def test_fig4_preset_uses_pinned_books(self):
        sc1, sc2 = preset_scenarios("fig4-cb1-cb2")
        perms1 = tuple(e.components[0].symbols for e in sc1.codebook.entries)
        perms2 = tuple(e.components[0].symbols for e in sc2.codebook.entries)
        assert perms1 == CB1_PERMS
        assert perms2 == CB2_PERMS

    def test_fig6_preset_uses_blocked_fixture(self):
        (sc,) = preset_scenarios("fig6-blockage")
        np.testing.assert_array_equal(sc.channel.H == 0.0,
                                      fixture_h06_blocked().H == 0.0)
        assert set(sc.detectors) >= {"ml", "bf"}

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            preset_scenarios("fig9")

    def test_preset_command_with_overrides(self, tmp_path, capsys):
        assert main(["preset", "fig4-cb1-cb2", "--out-dir", str(tmp_path),
                     "--errors-target", "20", "--block-cap", "8192",
                     "--threads", "2"]) == 0
        for stem in ("fig4-cb1", "fig4-cb2"):
            assert (tmp_path / f"{stem}_ber.csv").exists()
            assert (tmp_path / f"{stem}_bound.csv").exists()
