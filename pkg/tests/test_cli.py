"""Command-line surface: outputs, CSV reproducibility, config files, exits."""

import numpy as np
import pytest

from tvwalk import gf2core as g
from tvwalk.chain import load_trajectory, replay
from tvwalk.cli import cli_dispatch


def run(capsys, *argv):
    code = cli_dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_body(path):
    """Data portion of a CSV: everything except the # config echo."""
    lines = path.read_text().splitlines()
    return [ln for ln in lines if not ln.startswith("# ")]


class TestOrder:
    def test_n4(self, capsys):
        code, out, _ = run(capsys, "order", "--n", "4")
        assert code == 0
        assert "n=4 order=20160 ambient=2^16 ratio=" in out

    def test_n1(self, capsys):
        code, out, _ = run(capsys, "order", "--n", "1")
        assert code == 0 and "order=1 " in out

    def test_invalid_n(self, capsys):
        code, _, err = run(capsys, "order", "--n", "0")
        assert code == 2 and "error:" in err


class TestWalk:
    def test_saves_loadable_artifacts(self, capsys, tmp_path):
        traj_path = tmp_path / "walk.tvwk"
        mat_path = tmp_path / "end.gf2m"
        code, out, _ = run(
            capsys,
            "walk", "--n", "6", "--t", "40", "--seed", "3",
            "--save-trajectory", str(traj_path), "--save-matrix", str(mat_path),
        )
        assert code == 0
        assert "applied=40" in out and "invertible=true" in out
        traj = load_trajectory(traj_path)
        final = g.load_matrix(mat_path)
        assert replay(traj) == final
        assert f"popcount={final.popcount()}" in out

    def test_lazy_flag(self, capsys):
        code, out, _ = run(capsys, "walk", "--n", "4", "--t", "100", "--lazy")
        assert code == 0 and "lazy=true" in out

    def test_negative_t(self, capsys):
        code, _, err = run(capsys, "walk", "--n", "4", "--t", "-1")
        assert code == 2 and "--t" in err


class TestExact:
    def test_n3_mixing_times(self, capsys, tmp_path):
        code, out, _ = run(capsys, "exact", "--n", "3", "--out", str(tmp_path))
        assert code == 0
        assert "t_mix=6 t2_mix=9" in out
        body = csv_body(tmp_path / "exact_curve.csv")
        assert body[0] == "t,tv,l2,lazy_flag"
        assert len(body) == 1 + 9 + 5 + 1  # header + t = 0..t2+5
        assert body[1].startswith("0,") and body[1].endswith(",0")

    def test_n2_switches_to_lazy_kernel(self, capsys, tmp_path):
        code, out, _ = run(capsys, "exact", "--n", "2", "--out", str(tmp_path))
        assert code == 0
        assert "periodic" in out and "lazy=true" in out
        assert "t_mix=4 t2_mix=7" in out

    def test_tmax_controls_rows(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "exact", "--n", "3", "--tmax", "4", "--out", str(tmp_path)
        )
        assert code == 0
        assert len(csv_body(tmp_path / "exact_curve.csv")) == 6

    def test_n5_rejected(self, capsys):
        code, _, err = run(capsys, "exact", "--n", "5")
        assert code == 2 and "--n" in err


class TestSpectrum:
    def test_n2_six_rows(self, capsys, tmp_path):
        code, out, _ = run(capsys, "spectrum", "--n", "2", "--out", str(tmp_path))
        assert code == 0
        assert "states=6" in out and "period=2" in out
        assert "absolute_gap=0.0" in out
        body = csv_body(tmp_path / "spectrum.csv")
        assert body[0] == "index,eigenvalue"
        assert len(body) == 7
        eigs = sorted(float(ln.split(",")[1]) for ln in body[1:])
        assert eigs == pytest.approx([-1.0, -0.5, -0.5, 0.5, 0.5, 1.0], abs=1e-10)

    def test_n4_partial_spectrum(self, capsys, tmp_path):
        code, out, _ = run(capsys, "spectrum", "--n", "4", "--out", str(tmp_path))
        assert code == 0
        assert "states=20160" in out and "full_spectrum=false" in out
        assert len(csv_body(tmp_path / "spectrum.csv")) == 4  # header + 3 extremes


class TestLsi:
    def test_n2_floor(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "lsi", "--n", "2", "--restarts", "2", "--iters", "200",
            "--out", str(tmp_path),
        )
        assert code == 0
        assert "estimate=4.000000000000001" in out
        body = csv_body(tmp_path / "lsi.csv")
        assert body[0] == "n,restarts,best_ratio,two_over_gap"
        assert len(body) == 2
        n, restarts, best, floor = body[1].split(",")
        assert (n, restarts) == ("2", "2")
        assert float(best) <= 4.000000000000001
        assert float(floor) == 4.000000000000001

    def test_n4_rejected(self, capsys):
        code, _, err = run(capsys, "lsi", "--n", "4")
        assert code == 2 and "--n" in err


class TestCheck:
    def test_all_suites_zero_violations_n2(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check", "--suite", "all", "--n", "2", "--trials", "50",
            "--seed", "7", "--out", str(tmp_path),
        )
        assert code == 0
        body = csv_body(tmp_path / "inequality_suite.csv")
        assert body[0] == "check_name,n,trials,violations,min_slack"
        assert len(body) == 6  # all five suites run at n = 2
        for ln in body[1:]:
            assert ln.split(",")[3] == "0"

    def test_all_skips_undefined_at_n3(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check", "--suite", "all", "--n", "3", "--trials", "20",
            "--out", str(tmp_path),
        )
        assert code == 0
        assert "rowdecomp: skipped (not defined at n=3)" in out
        assert len(csv_body(tmp_path / "inequality_suite.csv")) == 5

    def test_single_unsupported_suite_fails(self, capsys):
        code, _, err = run(capsys, "check", "--suite", "rowdecomp", "--n", "3", "--trials", "10")
        assert code == 2 and "rowdecomp" in err

    def test_unknown_suite_usage_error(self, capsys):
        code, _, _ = run(capsys, "check", "--suite", "bogus", "--trials", "10")
        assert code == 2


class TestCutoff:
    def test_curve_and_crossing(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "cutoff", "--n", "16", "--trials", "1000", "--seed", "1",
            "--grid", "0.0,1.5,3.0", "--out", str(tmp_path),
        )
        assert code == 0
        assert "crossing_t_over_nlogn=" in out
        body = csv_body(tmp_path / "cutoff.csv")
        assert body[0] == "n,k,t,t_over_nlogn,tv_estimate,noise_floor,trials,seed"
        assert len(body) == 4
        assert body[1].startswith("16,1,0,")

    def test_no_bracket_still_succeeds(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "cutoff", "--n", "16", "--trials", "1000", "--seed", "1",
            "--grid", "2.5,3.0", "--out", str(tmp_path),
        )
        assert code == 0
        assert "crossing=none" in out

    def test_small_n_rejected(self, capsys):
        code, _, err = run(capsys, "cutoff", "--n", "8", "--trials", "1000")
        assert code == 2 and "error:" in err


class TestBounds:
    def test_n3_nonlazy_pipeline(self, capsys):
        code, out, _ = run(capsys, "bounds", "--n", "3", "--restarts", "2", "--iters", "200")
        assert code == 0
        assert "counting_lower_bound=3" in out
        assert "kernel=nonlazy" in out
        assert "l2_mixing_upper_bound=" in out
        upper = float(out.split("l2_mixing_upper_bound=")[1].split()[0])
        assert upper >= 9  # never below the exact l2 mixing time

    def test_n2_uses_lazy_kernel(self, capsys):
        code, out, _ = run(capsys, "bounds", "--n", "2", "--restarts", "2", "--iters", "200")
        assert code == 0
        assert "kernel=lazy" in out
        upper = float(out.split("l2_mixing_upper_bound=")[1].split()[0])
        assert upper >= 7  # exact lazy t2_mix

    def test_large_n_counting_only(self, capsys):
        code, out, _ = run(capsys, "bounds", "--n", "8")
        assert code == 0
        assert "counting_lower_bound=" in out
        assert "l2_mixing_upper_bound" not in out


class TestReproducibility:
    @pytest.mark.parametrize(
        "argv,filename",
        [
            (("exact", "--n", "3"), "exact_curve.csv"),
            (("spectrum", "--n", "3"), "spectrum.csv"),
            (("lsi", "--n", "2", "--restarts", "2", "--iters", "100"), "lsi.csv"),
            (("check", "--suite", "key", "--n", "2", "--trials", "40"), "inequality_suite.csv"),
            (
                ("cutoff", "--n", "16", "--trials", "1000", "--grid", "1.0,2.0"),
                "cutoff.csv",
            ),
        ],
    )
    def test_rerun_is_byte_identical(self, capsys, tmp_path, argv, filename):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        assert run(capsys, *argv, "--seed", "5", "--threads", "2", "--out", str(dir_a))[0] == 0
        assert run(capsys, *argv, "--seed", "5", "--threads", "2", "--out", str(dir_b))[0] == 0
        assert (dir_a / filename).read_bytes() == (dir_b / filename).read_bytes()

    def test_thread_count_changes_nothing_but_echo(self, capsys, tmp_path):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        argv = ("cutoff", "--n", "16", "--trials", "2000", "--grid", "1.0,2.0", "--seed", "9")
        assert run(capsys, *argv, "--threads", "1", "--out", str(dir_a))[0] == 0
        assert run(capsys, *argv, "--threads", "4", "--out", str(dir_b))[0] == 0
        assert csv_body(dir_a / "cutoff.csv") == csv_body(dir_b / "cutoff.csv")

    def test_seed_changes_sampled_output(self, capsys, tmp_path):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        argv = ("cutoff", "--n", "16", "--trials", "1000", "--grid", "1.0")
        assert run(capsys, *argv, "--seed", "1", "--out", str(dir_a))[0] == 0
        assert run(capsys, *argv, "--seed", "2", "--out", str(dir_b))[0] == 0
        assert csv_body(dir_a / "cutoff.csv") != csv_body(dir_b / "cutoff.csv")


class TestConfigFile:
    def test_config_equivalent_to_flags(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=3\neps=0.25\nseed=4\nout=" + str(tmp_path / "a") + "\n")
        code_a, out_a, _ = run(capsys, "exact", "--config", str(cfg))
        code_b, out_b, _ = run(
            capsys, "exact", "--n", "3", "--eps", "0.25", "--seed", "4",
            "--out", str(tmp_path / "b"),
        )
        assert code_a == code_b == 0
        assert out_a.replace("/a", "/b") == out_b
        assert csv_body(tmp_path / "a" / "exact_curve.csv") == csv_body(
            tmp_path / "b" / "exact_curve.csv"
        )

    def test_command_line_wins_over_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=2\n")
        code, out, _ = run(
            capsys, "exact", "--config", str(cfg), "--n", "3", "--out", str(tmp_path)
        )
        assert code == 0 and "n=3 " in out

    def test_boolean_value(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lazy=true\n")
        code, out, _ = run(capsys, "walk", "--config", str(cfg), "--n", "4", "--t", "50")
        assert code == 0 and "lazy=true" in out

    def test_dashed_key_maps_to_underscore(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("word-bits=32\nn=64\nt=10\n")
        code, out, _ = run(capsys, "protocol", "report", "--config", str(cfg))
        assert code == 0 and "dishonest_word_ops=128" in out

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frobnicate=1\n")
        code, _, err = run(capsys, "order", "--config", str(cfg), "--n", "2")
        assert code == 2 and "frobnicate" in err

    def test_missing_file_rejected(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "order", "--config", str(tmp_path / "absent.cfg"), "--n", "2"
        )
        assert code == 2 and "error:" in err

    def test_malformed_line_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just a line without equals\n")
        code, _, err = run(capsys, "order", "--config", str(cfg), "--n", "2")
        assert code == 2


class TestProtocolFlow:
    def test_full_round_trip(self, capsys, tmp_path):
        out_dir = str(tmp_path)
        code, out, _ = run(
            capsys,
            "protocol", "keygen", "--n", "8", "--t", "40", "--seed", "5",
            "--out", out_dir,
        )
        assert code == 0 and "applied=40" in out
        key = str(tmp_path / "key.gf2m")
        secret = str(tmp_path / "secret.tvwk")

        challenge = "a5"
        code, honest_line, _ = run(
            capsys, "protocol", "prove", "--secret", secret, "--challenge", challenge
        )
        assert code == 0
        assert "bit_ops=40" in honest_line and "role=honest" in honest_line

        code, dishonest_line, _ = run(
            capsys, "protocol", "prove", "--key", key, "--challenge", challenge
        )
        assert code == 0
        assert "bit_ops=64" in dishonest_line and "role=dishonest" in dishonest_line
        assert honest_line.split()[0] == dishonest_line.split()[0]  # same y=...

        # honest answer fits the deadline between trajectory and matrix cost
        code, out, _ = run(
            capsys,
            "protocol", "verify", "--key", key, "--challenge", challenge,
            "--response", honest_line.strip(), "--deadline", "63",
        )
        assert code == 0 and out.startswith("accept")

        # correct but measured-too-slow answer is rejected with exit 1
        code, out, _ = run(
            capsys,
            "protocol", "verify", "--key", key, "--challenge", challenge,
            "--response", dishonest_line.strip(), "--deadline", "63",
        )
        assert code == 1
        assert "reject" in out and "correct=true" in out and "within_deadline=false" in out

    def test_verify_reads_response_file(self, capsys, tmp_path):
        run(capsys, "protocol", "keygen", "--n", "8", "--t", "20", "--out", str(tmp_path))
        code, line, _ = run(
            capsys,
            "protocol", "prove", "--secret", str(tmp_path / "secret.tvwk"),
            "--challenge", "ff",
        )
        resp = tmp_path / "response.txt"
        resp.write_text(line)
        code, out, _ = run(
            capsys,
            "protocol", "verify", "--key", str(tmp_path / "key.gf2m"),
            "--challenge", "ff", "--response-file", str(resp), "--deadline", "20",
        )
        assert code == 0 and out.startswith("accept")

    def test_forged_answer_rejected(self, capsys, tmp_path):
        run(capsys, "protocol", "keygen", "--n", "8", "--t", "20", "--out", str(tmp_path))
        code, out, _ = run(
            capsys,
            "protocol", "verify", "--key", str(tmp_path / "key.gf2m"),
            "--challenge", "01",
            "--response", "y=00 bit_ops=1 word_ops=0 role=honest",
            "--deadline", "100",
        )
        # the zero answer equals A*x only if column 1 of the key is zero,
        # impossible for an invertible key
        assert code == 1 and "correct=false" in out

    def test_bad_hex_challenge(self, capsys, tmp_path):
        run(capsys, "protocol", "keygen", "--n", "8", "--t", "5", "--out", str(tmp_path))
        for bad in ("zz", "aabb"):  # not hex; wrong length
            code, _, err = run(
                capsys,
                "protocol", "prove", "--secret", str(tmp_path / "secret.tvwk"),
                "--challenge", bad,
            )
            assert code == 2 and "error:" in err

    def test_malformed_response_line(self, capsys, tmp_path):
        run(capsys, "protocol", "keygen", "--n", "8", "--t", "5", "--out", str(tmp_path))
        code, _, err = run(
            capsys,
            "protocol", "verify", "--key", str(tmp_path / "key.gf2m"),
            "--challenge", "01", "--response", "y=00 role=honest",
            "--deadline", "10",
        )
        assert code == 2 and "missing fields" in err

    def test_prove_requires_exactly_one_source(self, capsys, tmp_path):
        code, _, _ = run(capsys, "protocol", "prove", "--challenge", "01")
        assert code == 2

    def test_report_table(self, capsys):
        code, out, _ = run(capsys, "protocol", "report", "--n", "64,1024", "--t", "409")
        assert code == 0
        lines = [ln for ln in out.splitlines() if ln.startswith("n=")]
        assert len(lines) == 2
        assert "n=1024" in lines[1] and "dishonest_bit_ops=1048576" in lines[1]


class TestUsage:
    def test_help_exits_zero(self, capsys):
        assert run(capsys, "--help")[0] == 0

    def test_no_subcommand_is_usage_error(self, capsys):
        assert run(capsys)[0] == 2

    def test_unknown_subcommand(self, capsys):
        assert run(capsys, "frobnicate")[0] == 2
