import json
from pathlib import Path

import numpy as np
import pytest

from latcorr import cli, estimators, harness, io, sim


def write_config(path: Path, **overrides) -> Path:
    doc = {
        "model": {"mu1": 0.2, "mu2": 0.3, "sigma1": 0.2, "sigma2": 0.3,
                  "rho": 0.7, "x1_0": 1.0, "x2_0": 2.0, "T": 1.0},
        "b_n": [8],
        "r": [3.0],
        "variants": ["1", "2", "w"],
        "replications": 3,
        "seed": 11,
        "refinement": 4,
    }
    doc.update(overrides)
    cfg = path / "config.json"
    cfg.write_text(json.dumps(doc))
    return cfg


class TestConfigFile:
    def test_roundtrip_identity(self, tmp_path):
        cfg = write_config(tmp_path, bandwidth_overrides={"w": 0.3}, out="table.csv")
        parsed = io.load_config(str(cfg))
        again = io.parse_config(io.serialize_config(parsed))
        assert again == parsed

    def test_unknown_key_rejected(self):
        with pytest.raises(io.ConfigError, match="bogus"):
            io.parse_config({"model": {}, "b_n": [8], "r": [3.0], "bogus": 1})

    def test_unknown_model_key_rejected(self):
        doc = {"model": {"mu1": 0, "mu2": 0, "sigma1": 0.1, "sigma2": 0.1, "rho": 0,
                         "x1_0": 1, "x2_0": 1, "volatility": 2},
               "b_n": [8], "r": [3.0]}
        with pytest.raises(io.ConfigError, match="volatility"):
            io.parse_config(doc)

    def test_missing_model_field_named(self):
        doc = {"model": {"mu1": 0, "mu2": 0, "sigma1": 0.1, "sigma2": 0.1, "rho": 0,
                         "x1_0": 1}, "b_n": [8], "r": [3.0]}
        with pytest.raises(io.ConfigError, match="x2_0"):
            io.parse_config(doc)

    def test_type_errors_named(self):
        doc = {"model": {"mu1": "fast", "mu2": 0, "sigma1": 0.1, "sigma2": 0.1,
                         "rho": 0, "x1_0": 1, "x2_0": 1},
               "b_n": [8], "r": [3.0]}
        with pytest.raises(io.ConfigError, match="mu1"):
            io.parse_config(doc)


class TestCountSeriesFile:
    def test_write_read_roundtrip(self, tmp_path):
        counts = sim.CountPath(y1=np.array([0, 2, 5, 5]), y2=np.array([0, 1, 1, 9]))
        p = tmp_path / "counts.csv"
        io.write_count_series(str(p), counts, delta_n=0.25)
        back, delta, T = io.read_count_series(str(p))
        assert np.array_equal(back.y1, counts.y1)
        assert np.array_equal(back.y2, counts.y2)
        assert delta == 0.25
        assert T == 0.75
        assert p.read_text().endswith("\n")

    def test_rejects_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time,a,b\n0,0,0\n1,1,1\n")
        with pytest.raises(io.CountSeriesError, match="header"):
            io.read_count_series(str(p))

    def test_rejects_non_equidistant(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,y1,y2\n0.0,0,0\n0.5,1,1\n1.2,2,2\n")
        with pytest.raises(io.CountSeriesError, match="equidistant"):
            io.read_count_series(str(p))

    def test_rejects_decreasing_counts(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,y1,y2\n0.0,0,0\n0.5,3,1\n1.0,2,2\n")
        with pytest.raises(io.CountSeriesError, match="nondecreasing"):
            io.read_count_series(str(p))


class TestSimulateCommand:
    def test_row_count(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "counts.csv"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,y1,y2"
        assert len(lines) == 1 + 8 + 1  # header + b_n + 1 rows

    def test_same_seed_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out1)])
        cli.main(["simulate", "--config", str(cfg), "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_flag_changes_output(self, tmp_path):
        cfg = write_config(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out1)])
        cli.main(["simulate", "--config", str(cfg), "--out", str(out2), "--seed", "999"])
        assert out1.read_bytes() != out2.read_bytes()

    def test_negative_sigma_exit2_names_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, model={"mu1": 0.2, "mu2": 0.3, "sigma1": -0.2,
                                            "sigma2": 0.3, "rho": 0.7, "x1_0": 1.0,
                                            "x2_0": 2.0, "T": 1.0})
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c.csv")])
        assert code == 2
        assert "sigma1" in capsys.readouterr().err

    def test_multi_cell_config_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, b_n=[8, 16])
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c.csv")])
        assert code == 2
        assert "b_n" in capsys.readouterr().err

    def test_latent_out(self, tmp_path):
        cfg = write_config(tmp_path)
        out, lat = tmp_path / "c.csv", tmp_path / "latent.csv"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out),
                  "--latent-out", str(lat)])
        lines = lat.read_text().splitlines()
        assert lines[0] == "s,x1,x2"
        assert len(lines) == 1 + 8 * 4 + 1


class TestEstimateCommand:
    def make_counts(self, tmp_path, b_n=64, r=3.0, seed=11):
        cfg = write_config(tmp_path, b_n=[b_n], r=[r], seed=seed)
        out = tmp_path / "counts.csv"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        return out, float(b_n) ** r

    def test_roundtrip_matches_in_process(self, tmp_path, capsys):
        out, a_n = self.make_counts(tmp_path)
        capsys.readouterr()  # drop the simulate confirmation line
        code = cli.main(["estimate", "--counts", str(out), "--a-n", str(a_n),
                         "--format", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        header, rows = lines[0], lines[1:]
        assert header.startswith("variant,C,xi,")
        # reproduce in-process
        counts, delta, T = io.read_count_series(str(out))
        tilde = estimators.tilde_series(counts, a_n, delta)
        S = estimators.estimate_S(tilde)
        C = estimators.estimate_correlation(S)
        for row in rows:
            fields = row.split(",")
            variant = fields[0]
            G = harness.gamma_for_variant(tilde, T, variant)
            xi = estimators.estimate_xi(S, G)
            assert float(fields[1]) == C
            assert float(fields[2]) == xi.xi

    def test_variant_w_level_line(self, tmp_path, capsys):
        out, a_n = self.make_counts(tmp_path)
        code = cli.main(["estimate", "--counts", str(out), "--a-n", str(a_n),
                         "--variant", "w", "--level", "0.95"])
        assert code == 0
        outtext = capsys.readouterr().out
        ci_lines = [l for l in outtext.splitlines() if l.startswith("variant ")]
        assert len(ci_lines) == 1
        assert ci_lines[0].startswith("variant w:")
        assert "95% CI" in ci_lines[0]
        # the reported xi uses h = T * b_n^(-1/4)
        counts, delta, T = io.read_count_series(str(out))
        tilde = estimators.tilde_series(counts, a_n, delta)
        S = estimators.estimate_S(tilde)
        G = estimators.gamma_kernel(tilde, T, estimators.BandwidthSpec.from_exponent(0.25))
        xi = estimators.estimate_xi(S, G)
        assert f"xi = {xi.xi:.6f}" in ci_lines[0]

    def test_constant_increments_exit3(self, tmp_path, capsys):
        p = tmp_path / "flat.csv"
        rows = ["t,y1,y2"] + [f"{0.125 * j},{2 * j},{3 * j}" for j in range(9)]
        p.write_text("\n".join(rows) + "\n")
        code = cli.main(["estimate", "--counts", str(p), "--a-n", "10"])
        assert code == 3
        assert "degenerate" in capsys.readouterr().err

    def test_missing_file_exit1(self, tmp_path, capsys):
        code = cli.main(["estimate", "--counts", str(tmp_path / "nope.csv"), "--a-n", "1"])
        assert code == 1


class TestMseTableCommand:
    def test_full_grid_row_count(self, tmp_path):
        cfg = write_config(tmp_path, b_n=[2**k for k in range(4, 11)],
                           variants=["1", "2", "w", "m", "n"],
                           r=[2.0], replications=1)
        out = tmp_path / "table.csv"
        assert cli.main(["mse-table", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "variant,b_n,r,mse,bn_times_mse,degenerate_count,clamped_count,N"
        assert len(lines) == 1 + 5 * 7

    def test_csv_deterministic_bytes(self, tmp_path):
        cfg = write_config(tmp_path, b_n=[16, 32], replications=4)
        out1, out2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        cli.main(["mse-table", "--config", str(cfg), "--out", str(out1)])
        cli.main(["mse-table", "--config", str(cfg), "--out", str(out2), "--threads", "4"])
        assert out1.read_bytes() == out2.read_bytes()

    def test_markdown_layout(self, tmp_path):
        cfg = write_config(tmp_path, b_n=[32, 16], replications=2, variants=["1", "2"])
        out = tmp_path / "table.md"
        assert cli.main(["mse-table", "--config", str(cfg), "--out", str(out),
                         "--format", "md"]) == 0
        text = out.read_text()
        assert "| $*$ | $b_n = 2^4$ | $b_n = 2^5$ |" in text  # ascending columns
        assert "\n| 1 | " in text and "\n| 2 | " in text
        assert text.endswith("\n")

    def test_csv_parses_back(self, tmp_path):
        cfg = write_config(tmp_path, b_n=[16], replications=3)
        out = tmp_path / "t.csv"
        cli.main(["mse-table", "--config", str(cfg), "--out", str(out)])
        lines = out.read_text().splitlines()[1:]
        exp = io.load_config(str(cfg)).experiment
        rows = harness.run_mse_table(exp)
        for line, row in zip(lines, rows):
            fields = line.split(",")
            assert fields[0] == row.variant
            assert int(fields[1]) == row.b_n
            assert float(fields[3]) == row.mse  # repr round-trips exactly


class TestRateCheckCommand:
    def test_prints_slope(self, tmp_path, capsys):
        cfg = write_config(tmp_path, b_n=[16, 32, 64], r=[3.0], replications=5,
                           variants=["1"])
        assert cli.main(["rate-check", "--config", str(cfg), "--variant", "1"]) == 0
        assert "slope" in capsys.readouterr().out

    def test_multi_r_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, b_n=[16, 32, 64], r=[2.0, 3.0], replications=2)
        assert cli.main(["rate-check", "--config", str(cfg)]) == 2
