import numpy as np
import pytest
from hypothesis import given, strategies as st

from glucast.core import GlucoseSample, TimeSeries
from glucast.ingest import (
    SCHEMA_PRESETS,
    CsvSchema,
    GapAction,
    GapPolicy,
    IngestError,
    add_noise,
    destandardize,
    parse_csv,
    parse_csv_by_subject,
    regularize,
    split,
    standardize,
)


class TestParseCsv:
    def test_direct_transcription(self):
        text = "timestamp,glucose\n2016-10-24T00:00:00Z,100\n2016-10-24T00:05:00Z,105"
        samples = parse_csv(text)
        assert [s.value for s in samples] == [100.0, 105.0]
        assert samples[1].timestamp - samples[0].timestamp == 300

    def test_duplicate_timestamps_averaged(self):
        text = (
            "timestamp,glucose\n"
            "2016-10-24T00:00:00Z,100\n"
            "2016-10-24T00:00:00Z,110\n"
        )
        samples = parse_csv(text)
        assert len(samples) == 1
        assert samples[0].value == 105.0

    def test_negative_glucose_reports_line(self):
        text = "timestamp,glucose\n2016-10-24T00:00:00Z,-5\n"
        with pytest.raises(IngestError, match="line 2"):
            parse_csv(text)

    def test_unparseable_row_reports_line(self):
        text = "timestamp,glucose\n2016-10-24T00:00:00Z,100\nnot-a-date,100\n"
        with pytest.raises(IngestError, match="line 3"):
            parse_csv(text)

    def test_empty_file(self):
        with pytest.raises(IngestError, match="empty file"):
            parse_csv("")
        with pytest.raises(IngestError, match="no data rows"):
            parse_csv("timestamp,glucose\n")

    def test_epoch_format_and_bytes(self):
        schema = CsvSchema(timestamp_column="t", value_column="v", timestamp_format="epoch")
        samples = parse_csv(b"t,v\n600,101\n300,100\n", schema)
        assert [s.timestamp for s in samples] == [300, 600]

    def test_order_insensitive(self):
        rows = [f"2016-10-24T{h:02d}:{m:02d}:00Z,{100 + h + m}" for h in range(3) for m in (0, 5)]
        fwd = parse_csv("timestamp,glucose\n" + "\n".join(rows))
        rev = parse_csv("timestamp,glucose\n" + "\n".join(reversed(rows)))
        assert fwd == rev

    def test_multi_subject_preset(self):
        text = (
            "timestamp,glucose,subject_id\n"
            "2016-10-24T00:00:00Z,100,a\n"
            "2016-10-24T00:00:00Z,140,b\n"
            "2016-10-24T00:05:00Z,101,a\n"
        )
        by_subject = parse_csv_by_subject(text, SCHEMA_PRESETS["colas"])
        assert sorted(by_subject) == ["a", "b"]
        assert len(by_subject["a"]) == 2
        with pytest.raises(IngestError, match="2 subjects"):
            parse_csv(text, SCHEMA_PRESETS["colas"])
        assert parse_csv(text, SCHEMA_PRESETS["colas"], subject="b")[0].value == 140.0

    def test_missing_column(self):
        with pytest.raises(IngestError, match="missing column"):
            parse_csv("time,glucose\n2016-10-24T00:00:00Z,100\n")


class TestRegularize:
    def test_already_uniform(self):
        samples = [GlucoseSample(0, 100.0), GlucoseSample(300, 101.0), GlucoseSample(600, 102.0)]
        segments = regularize(samples, 300)
        assert len(segments) == 1
        assert segments[0].values.tolist() == [100.0, 101.0, 102.0]

    def test_linear_interpolation_midpoint(self):
        samples = [GlucoseSample(0, 100.0), GlucoseSample(600, 120.0)]
        segments = regularize(samples, 300, GapPolicy(max_gap_s=900))
        assert segments[0].values.tolist() == [100.0, 110.0, 120.0]

    def test_large_gap_splits(self):
        samples = [GlucoseSample(0, 100.0), GlucoseSample(7200, 120.0)]
        segments = regularize(samples, 300, GapPolicy(max_gap_s=900))
        assert [len(s) for s in segments] == [1, 1]

    def test_large_gap_error_policy(self):
        samples = [GlucoseSample(0, 100.0), GlucoseSample(7200, 120.0)]
        with pytest.raises(IngestError, match="exceeds max_gap_s"):
            regularize(samples, 300, GapPolicy(max_gap_s=900, on_larger=GapAction.Error))

    def test_grids_are_arithmetic_progressions(self):
        rng = np.random.default_rng(3)
        ts = np.unique(np.sort(rng.integers(0, 50_000, 120)))
        samples = [GlucoseSample(int(t), float(80 + rng.uniform(0, 40))) for t in ts]
        for seg in regularize(samples, 300, GapPolicy(max_gap_s=1200)):
            diffs = np.diff(seg.timestamps)
            assert np.all(diffs == 300)

    def test_interpolation_within_bracketing_bounds(self):
        samples = [GlucoseSample(0, 100.0), GlucoseSample(450, 130.0), GlucoseSample(900, 90.0)]
        seg = regularize(samples, 300, GapPolicy(max_gap_s=900))[0]
        # each grid value must lie within [min, max] of its bracketing observations
        assert 100.0 <= seg.values[1] <= 130.0
        assert 90.0 <= seg.values[2] <= 130.0

    def test_policy_validation(self):
        with pytest.raises(ValueError, match="max_gap_s"):
            regularize([GlucoseSample(0, 100.0)], 300, GapPolicy(max_gap_s=100))


class TestSplit:
    def test_80_20(self):
        series = TimeSeries.from_values(np.arange(10.0) + 50)
        train, test = split(series, 0.8)
        assert (len(train), len(test)) == (8, 2)

    def test_boundary(self):
        series = TimeSeries.from_values([50.0, 60.0])
        train, test = split(series, 0.5)
        assert (len(train), len(test)) == (1, 1)

    def test_empty_test_is_error(self):
        series = TimeSeries.from_values(np.arange(10.0) + 50)
        with pytest.raises(ValueError, match="empty test"):
            split(series, 0.99)

    def test_fraction_bounds(self):
        series = TimeSeries.from_values(np.arange(10.0) + 50)
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                split(series, bad)

    def test_chronological(self):
        series = TimeSeries.from_values(np.arange(10.0) + 50)
        train, test = split(series, 0.6)
        assert test.start_timestamp > train.end_timestamp


class TestStandardize:
    def test_two_point_case(self):
        series = TimeSeries.from_values([100.0, 120.0])
        out, st = standardize(series)
        assert out.values.tolist() == [-1.0, 1.0]
        assert (st.mean, st.std) == (110.0, 10.0)  # population std, divisor n

    def test_zero_variance(self):
        with pytest.raises(ValueError, match="zero variance"):
            standardize(TimeSeries.from_values([111.9] * 50))

    def test_moments(self):
        rng = np.random.default_rng(0)
        series = TimeSeries.from_values(rng.uniform(60, 200, 400))
        out, _ = standardize(series)
        assert abs(out.values.mean()) < 1e-9
        assert abs(out.values.std() - 1.0) < 1e-9

    @given(st.lists(st.floats(min_value=1.0, max_value=900.0), min_size=2, max_size=60))
    def test_roundtrip(self, values):
        series = TimeSeries.from_values(values)
        if np.std(series.values) == 0:
            return
        out, stz = standardize(series)
        back = destandardize(out, stz)
        assert np.allclose(back.values, series.values, rtol=1e-9, atol=1e-9)


class TestAddNoise:
    def test_sigma_zero_is_identity(self):
        series = TimeSeries.from_values([100.0, 101.0, 99.0])
        assert add_noise(series, 0.0, seed=1) == series

    def test_statistics_at_fixed_seed(self):
        series = TimeSeries.from_values(np.full(10_000, 100.0))
        noisy = add_noise(series, 1.0, seed=42)
        delta = noisy.values - series.values
        assert -0.05 <= delta.mean() <= 0.05
        assert 0.97 <= delta.std() <= 1.03

    def test_same_seed_bit_identical(self):
        series = TimeSeries.from_values(np.linspace(80, 160, 500))
        a = add_noise(series, 2.5, seed=7)
        b = add_noise(series, 2.5, seed=7)
        assert a == b

    def test_timestamps_unchanged(self):
        series = TimeSeries.from_values([100.0, 101.0], start_timestamp=999_000)
        noisy = add_noise(series, 1.0, seed=0)
        assert noisy.timestamps.tolist() == series.timestamps.tolist()

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise(TimeSeries.from_values([100.0]), -1.0, seed=0)
