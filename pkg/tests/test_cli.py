import datetime as dt
import json
import math

import pytest

from lobfit import cli, dist, feed, rates, synth


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full synth -> rates -> fit -> cancel-test run."""
    out = tmp_path_factory.mktemp("run")
    base = ["--out", str(out)]
    assert cli.main(["synth", "--seed", "9", "--days", "5",
                     "--orders-per-day", "1000",
                     "--cancel-probability", "0.15",
                     "--cancel-style", "fraction"] + base) == 0
    assert cli.main(["rates", str(out / "stream.lobf")] + base) == 0
    assert cli.main(["fit", str(out / "rates.csv")] + base) == 0
    assert cli.main(["cancel-test", str(out / "cancels.csv")] + base) == 0
    return out


class TestModelParsing:
    def test_each_shorthand(self):
        assert cli.parse_model("geo:0.4") == dist.Geometric(0.4)
        assert cli.parse_model("dw:0.8,1.2") == dist.DiscreteWeibull(0.8, 1.2)
        assert cli.parse_model("bb:2,6") == dist.BetaBinomial(2.0, 6.0)
        assert cli.parse_model("exp:0.7") == dist.Exponential(0.7)
        assert cli.parse_model("pow:0.3,1.4") == dist.PowerLaw(0.3, 1.4)

    def test_rejects_malformed_specs(self):
        for bad in ("dw", "dw:", "dw:0.8", "dw:0.8,1.2,3", "norm:0,1",
                    "dw:a,b"):
            with pytest.raises(ValueError):
                cli.parse_model(bad)

    def test_family_list_is_canonicalized(self):
        assert cli.parse_families("pow,geo,dw") == [
            "geometric", "discrete_weibull", "power_law"]
        assert cli.parse_families("geo,geo") == ["geometric"]
        with pytest.raises(ValueError):
            cli.parse_families("geo,normal")

    def test_granularity_list(self):
        got = cli.parse_granularities("weekly,daily")
        assert rates.Granularity.WEEKLY in got
        assert rates.Granularity.DAILY in got
        with pytest.raises(ValueError):
            cli.parse_granularities("yearly")


class TestPipelineOutputs:
    def test_all_files_exist(self, pipeline):
        for name in ("stream.lobf", "ground_truth.json", "rates.csv",
                     "cancels.csv", "fits.json", "nps_summary.csv",
                     "welch_tests.csv", "chi_square.csv"):
            assert (pipeline / name).exists(), name

    def test_rates_rows_are_sorted_and_complete(self, pipeline):
        lines = (pipeline / "rates.csv").read_text().splitlines()
        assert lines[0] == "bucket_key,side,tick,quantity,density"
        body = [line.split(",") for line in lines[1:]]
        assert len(body) % 15 == 0
        keys = []
        for row in body:
            granularity, index = rates.parse_bucket_label(row[0])
            keys.append((cli._GRANULARITY_POS[granularity], index, row[1],
                         int(row[2])))
        assert keys == sorted(keys)

    def test_fit_report_shape(self, pipeline):
        payload = json.loads((pipeline / "fits.json").read_text())
        assert payload["families"] == list(cli._FAMILY_ORDER)
        assert payload["truncated_likelihood"] is False
        lines = (pipeline / "rates.csv").read_text().splitlines()
        assert len(payload["instances"]) == (len(lines) - 1) // 15
        for inst in payload["instances"]:
            assert inst["timestep"] in cli._TIMESTEP_ORDER
            assert not inst["failed"]
            assert set(inst["fits"]) == set(cli._FAMILY_ORDER)
            best = min(f["nps"] for f in inst["fits"].values())
            assert best == 1.0
            for fit in inst["fits"].values():
                assert fit["l1_error"] >= 0.0
                assert fit["nps"] >= 1.0

    def test_summary_covers_all_timesteps(self, pipeline):
        lines = (pipeline / "nps_summary.csv").read_text().splitlines()
        assert lines[0] == "timestep,family,mean_nps,sd_nps,instances"
        seen = {line.split(",")[0] for line in lines[1:]}
        assert seen == set(cli._TIMESTEP_ORDER)
        for line in lines[1:]:
            _, _, mean, sd, n = line.split(",")
            assert float(mean) >= 1.0
            assert float(sd) >= 0.0
            assert int(n) >= 1

    def test_welch_rows(self, pipeline):
        lines = (pipeline / "welch_tests.csv").read_text().splitlines()
        header = "timestep,comparison,t_statistic,degrees_of_freedom," \
                 "p_value,degenerate"
        assert lines[0] == header
        assert len(lines) > 1
        for line in lines[1:]:
            timestep, comparison, t, df, p, degenerate = line.split(",")
            assert timestep in cli._TIMESTEP_ORDER
            assert comparison in ("dw_vs_bb", "dw_vs_pow")
            assert math.isfinite(float(t))
            assert float(df) > 0.0
            assert 0.0 <= float(p) <= 1.0
            assert degenerate in ("true", "false")

    def test_chi_square_rows(self, pipeline):
        lines = (pipeline / "chi_square.csv").read_text().splitlines()
        assert lines[0] == "bucket_key,side,statistic,p_value"
        assert len(lines) >= 4
        for line in lines[1:]:
            bucket, side, statistic, p = line.split(",")
            granularity, _ = rates.parse_bucket_label(bucket)
            assert granularity in (rates.Granularity.WEEKLY,
                                   rates.Granularity.MONTHLY)
            assert side in ("buy", "sell")
            assert float(statistic) >= 0.0
            assert 0.0 <= float(p) <= 1.0

    def test_reruns_are_byte_identical(self, pipeline, tmp_path):
        base = ["--out", str(tmp_path)]
        assert cli.main(["synth", "--seed", "9", "--days", "5",
                         "--orders-per-day", "1000",
                         "--cancel-probability", "0.15",
                         "--cancel-style", "fraction"] + base) == 0
        assert cli.main(["rates", str(tmp_path / "stream.lobf")] + base) == 0
        assert cli.main(["fit", str(tmp_path / "rates.csv")] + base) == 0
        assert cli.main(["cancel-test",
                         str(tmp_path / "cancels.csv")] + base) == 0
        for name in ("stream.lobf", "ground_truth.json", "rates.csv",
                     "cancels.csv", "fits.json", "nps_summary.csv",
                     "welch_tests.csv", "chi_square.csv"):
            assert (tmp_path / name).read_bytes() == (
                pipeline / name).read_bytes(), name


class TestSelectionFlags:
    def test_side_filter(self, pipeline, tmp_path):
        assert cli.main(["rates", str(pipeline / "stream.lobf"),
                         "--side", "buy", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "rates.csv").read_text().splitlines()[1:]
        assert lines
        assert all(line.split(",")[1] == "buy" for line in lines)

    def test_granularity_filter(self, pipeline, tmp_path):
        assert cli.main(["rates", str(pipeline / "stream.lobf"),
                         "--granularity", "daily",
                         "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "rates.csv").read_text().splitlines()[1:]
        assert lines
        assert all(line.startswith("daily:") for line in lines)

    def test_opposite_reference_runs(self, pipeline, tmp_path):
        assert cli.main(["rates", str(pipeline / "stream.lobf"),
                         "--reference", "opposite",
                         "--out", str(tmp_path)]) == 0
        assert (tmp_path / "rates.csv").read_text() != (
            pipeline / "rates.csv").read_text()

    def test_family_subset(self, pipeline, tmp_path):
        assert cli.main(["fit", str(pipeline / "rates.csv"),
                         "--families", "geo,dw,bb",
                         "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "fits.json").read_text())
        assert payload["families"] == ["geometric", "discrete_weibull",
                                       "beta_binomial"]
        for inst in payload["instances"]:
            assert set(inst["fits"]) <= {"geometric", "discrete_weibull",
                                         "beta_binomial"}
        welch = (tmp_path / "welch_tests.csv").read_text().splitlines()[1:]
        assert welch
        assert all(line.split(",")[1] == "dw_vs_bb" for line in welch)


class TestExactCurveInstance:
    def _write_rates(self, path, density):
        with open(path, "w") as fh:
            fh.write("bucket_key,side,tick,quantity,density\n")
            for tick, value in enumerate(density, start=1):
                fh.write(f"daily:2017-08-01,buy,{tick},"
                         f"{round(value * 10 ** 6)},{value!r}\n")

    def test_true_family_scores_exactly_one(self, tmp_path):
        density = dist.tick_curve(dist.DiscreteWeibull(0.8, 1.2))
        source = tmp_path / "rates.csv"
        self._write_rates(source, density)
        assert cli.main(["fit", str(source), "--truncated-likelihood",
                         "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "fits.json").read_text())
        fits = payload["instances"][0]["fits"]
        assert fits["discrete_weibull"]["nps"] == 1.0
        assert fits["discrete_weibull"]["l1_error"] < 1e-6
        assert fits["discrete_weibull"]["params"]["q"] == pytest.approx(
            0.8, abs=1e-6)
        for tag in ("geometric", "beta_binomial", "exponential",
                    "power_law"):
            assert fits[tag]["nps"] > 1.0


class TestCancelTestEdgeCases:
    def test_bucket_missing_a_tick_is_skipped_with_warning(self, tmp_path,
                                                           capsys):
        source = tmp_path / "cancels.csv"
        with open(source, "w") as fh:
            fh.write("bucket_key,side,tick,count,mean_ratio\n")
            for tick in range(1, 10):
                fh.write(f"weekly:2017-W31,buy,{tick},4,0.5\n")
            for tick in range(1, 11):
                fh.write(f"weekly:2017-W32,buy,{tick},4,0.5\n")
        assert cli.main(["cancel-test", str(source),
                         "--out", str(tmp_path)]) == 0
        err = capsys.readouterr().err
        assert "skipping weekly:2017-W31 buy" in err
        lines = (tmp_path / "chi_square.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("weekly:2017-W32,buy,")

    def test_daily_buckets_are_not_tested(self, tmp_path):
        source = tmp_path / "cancels.csv"
        with open(source, "w") as fh:
            fh.write("bucket_key,side,tick,count,mean_ratio\n")
            for tick in range(1, 11):
                fh.write(f"daily:2017-08-01,buy,{tick},4,0.5\n")
        assert cli.main(["cancel-test", str(source),
                         "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "chi_square.csv").read_text().splitlines()
        assert len(lines) == 1


class TestExitCodes:
    def test_missing_input_file(self, tmp_path):
        assert cli.main(["rates", str(tmp_path / "nope.lobf"),
                         "--out", str(tmp_path)]) == 1

    def test_empty_input_writes_nothing(self, tmp_path):
        empty = tmp_path / "empty.lobf"
        empty.write_bytes(b"")
        out = tmp_path / "out"
        assert cli.main(["rates", str(empty), "--out", str(out)]) == 1
        assert not (out / "rates.csv").exists()

    def test_corrupt_stream(self, pipeline, tmp_path):
        clipped = tmp_path / "clipped.lobf"
        clipped.write_bytes((pipeline / "stream.lobf").read_bytes()[:100])
        assert cli.main(["rates", str(clipped),
                         "--out", str(tmp_path)]) == 1

    def test_duplicate_sessions_across_files(self, pipeline, tmp_path):
        stream = str(pipeline / "stream.lobf")
        assert cli.main(["rates", stream, stream,
                         "--out", str(tmp_path)]) == 1

    def test_bad_flag_values(self, tmp_path):
        out = ["--out", str(tmp_path)]
        assert cli.main(["synth", "--buy-model", "dw:2,1"] + out) == 1
        assert cli.main(["synth", "--days", "0"] + out) == 1
        assert cli.main(["fit", "whatever.csv", "--families", "geo,xx"]
                        + out) == 1

    def test_usage_errors_exit_one(self, capsys):
        assert cli.main(["frobnicate"]) == 1
        assert cli.main([]) == 1
        assert cli.main(["rates"]) == 1
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert cli.main(["--help"]) == 0
        capsys.readouterr()

    def test_internal_failure_exits_two(self, tmp_path, monkeypatch):
        def boom(spec):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr(synth, "generate", boom)
        assert cli.main(["synth", "--out", str(tmp_path)]) == 2


class TestMultiFileInput:
    def test_disjoint_sessions_accumulate(self, tmp_path):
        model = dist.Geometric(0.4)
        specs = [
            synth.SynthSpec(seed=1, days=1, orders_per_day=300,
                            buy_model=model, sell_model=model,
                            start=dt.date(2017, 8, 1)),
            synth.SynthSpec(seed=2, days=1, orders_per_day=300,
                            buy_model=model, sell_model=model,
                            start=dt.date(2017, 8, 2)),
        ]
        paths = []
        for i, spec in enumerate(specs):
            blob, _ = synth.generate(spec)
            path = tmp_path / f"part{i}.lobf"
            path.write_bytes(blob)
            paths.append(str(path))
        assert cli.main(["rates", *paths, "--granularity", "daily",
                         "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "rates.csv").read_text().splitlines()[1:]
        buckets = {line.split(",")[0] for line in lines}
        assert buckets == {"daily:2017-08-01", "daily:2017-08-02"}
