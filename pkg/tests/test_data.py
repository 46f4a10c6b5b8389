"""Tests for price ingestion and the key = value config grammar."""

import numpy as np
import pytest

from ddnm import data
from ddnm.errors import ConfigError, DataError


GOOD_CSV = """date,FX1,FX2,BENCH,CTA
2005-01-03,1.30,0.55,1200.0,100.0
2005-01-04,1.31,0.54,1210.0,100.5
2005-01-05,1.29,0.56,1190.0,99.8
2005-01-06,1.33,0.57,1205.0,100.2
"""


def write(tmp_path, text, name="prices.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadPrices:
    def test_columns_and_values(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        assert frame.names == ("FX1", "FX2", "BENCH", "CTA")
        assert frame.asset_names == ("FX1", "FX2")
        assert frame.has_bench and frame.has_cta
        assert len(frame.dates) == 4
        np.testing.assert_allclose(frame.values[0], [1.30, 0.55, 1200.0, 100.0])

    def test_model_columns_put_benchmark_last(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        names, Y = data.model_matrix(frame)
        assert names == ("FX1", "FX2", "BENCH")
        np.testing.assert_allclose(Y[:, 2], frame.values[:, 2])

    def test_series_subset_and_order(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        names, Y = data.model_matrix(frame, order=("FX2", "FX1"))
        assert names == ("FX2", "FX1", "BENCH")
        np.testing.assert_allclose(Y[:, 0], frame.values[:, 1])
        with pytest.raises(ConfigError):
            data.model_matrix(frame, order=("FX9",))

    def test_non_increasing_dates_rejected(self, tmp_path):
        bad = GOOD_CSV.replace("2005-01-06", "2005-01-05")
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))

    def test_nonpositive_price_rejected(self, tmp_path):
        bad = GOOD_CSV.replace("1.29", "-1.29")
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))

    def test_missing_cell_rejected(self, tmp_path):
        bad = GOOD_CSV.replace("2005-01-05,1.29,0.56", "2005-01-05,1.29,")
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))

    def test_unparsable_number_rejected(self, tmp_path):
        bad = GOOD_CSV.replace("0.56", "abc")
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))

    def test_ragged_row_rejected(self, tmp_path):
        bad = GOOD_CSV + "2005-01-07,1.0,2.0\n"
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))

    def test_duplicate_names_rejected(self, tmp_path):
        bad = GOOD_CSV.replace("FX1,FX2", "FX1,FX1")
        with pytest.raises(DataError):
            data.load_prices(write(tmp_path, bad))


class TestLogAndSplit:
    def test_log_transform(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        logf = data.to_log_prices(frame)
        np.testing.assert_allclose(logf.values, np.log(frame.values))
        assert logf.names == frame.names

    def test_split_train_includes_boundary(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        train, test = data.split_frame(frame, "2005-01-04")
        assert len(train.dates) == 2
        assert len(test.dates) == 2
        assert train.dates[-1].isoformat() == "2005-01-04"
        assert test.dates[0].isoformat() == "2005-01-05"

    def test_split_outside_range_rejected(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        with pytest.raises(ConfigError):
            data.split_frame(frame, "2004-12-31")
        with pytest.raises(ConfigError):
            data.split_frame(frame, "2005-01-06")

    def test_split_at_penultimate_date_leaves_one_test_row(self, tmp_path):
        frame = data.load_prices(write(tmp_path, GOOD_CSV))
        train, test = data.split_frame(frame, "2005-01-05")
        assert len(test.dates) == 1


class TestForwardFill:
    def test_small_gap_filled_with_previous_row(self, tmp_path):
        txt = """date,A
2005-01-03,1.0
2005-01-06,2.0
"""
        frame = data.load_prices(write(tmp_path, txt))
        filled = data.forward_fill(frame)
        dates = [d.isoformat() for d in filled.dates]
        assert dates == ["2005-01-03", "2005-01-04", "2005-01-05", "2005-01-06"]
        np.testing.assert_allclose(filled.values[:, 0], [1.0, 1.0, 1.0, 2.0])

    def test_weekend_gap_needs_no_fill(self, tmp_path):
        txt = """date,A
2005-01-07,1.0
2005-01-10,2.0
"""
        frame = data.load_prices(write(tmp_path, txt))
        filled = data.forward_fill(frame)
        assert len(filled.dates) == 2

    def test_long_gap_rejected(self, tmp_path):
        txt = """date,A
2005-01-03,1.0
2005-01-10,2.0
"""
        frame = data.load_prices(write(tmp_path, txt))
        with pytest.raises(DataError):
            data.forward_fill(frame)


class TestConfig:
    def test_defaults_match_documented_grid(self):
        cfg = data.parse_config("")
        assert len(cfg.delta_grid) == 5 and len(cfg.beta_grid) == 5
        assert len(cfg.discount_pairs()) == 25
        assert len(cfg.alpha_grid) == 11
        np.testing.assert_allclose(cfg.alpha_grid[0], 0.95)
        np.testing.assert_allclose(cfg.alpha_grid[-1], 1.0)
        assert cfg.max_lag == 2
        np.testing.assert_allclose(cfg.rho, 0.3)
        np.testing.assert_allclose(cfg.prune_threshold, 0.001)
        assert cfg.nmc == 10_000
        np.testing.assert_allclose(cfg.target_daily, 0.001)
        np.testing.assert_allclose(cfg.target_period, 0.005)

    def test_grid_syntax_inclusive_endpoints(self):
        cfg = data.parse_config("delta_grid = 0.975:0.005:0.995\n")
        np.testing.assert_allclose(cfg.delta_grid, [0.975, 0.980, 0.985, 0.990, 0.995])

    def test_scalar_and_comma_lists(self):
        cfg = data.parse_config("alpha_grid = 0.97\nbeta_grid = 0.98,0.99\n")
        assert cfg.alpha_grid == (0.97,)
        assert cfg.beta_grid == (0.98, 0.99)

    def test_comments_and_blank_lines(self):
        text = """
# discounts
delta_grid = 0.99   # tight grid
nmc = 500

seed = 42
"""
        cfg = data.parse_config(text)
        assert cfg.delta_grid == (0.99,)
        assert cfg.nmc == 500
        assert cfg.seed == 42

    def test_unknown_key_named_in_error(self):
        with pytest.raises(ConfigError, match="volatility_grid"):
            data.parse_config("volatility_grid = 0.5\n")

    def test_bad_values_rejected_with_bounds(self):
        with pytest.raises(ConfigError, match="rho"):
            data.parse_config("rho = 1.5\n")
        with pytest.raises(ConfigError, match="nmc"):
            data.parse_config("nmc = 1\n")
        with pytest.raises(ConfigError, match="delta"):
            data.parse_config("delta_grid = 0.0\n")
        with pytest.raises(ConfigError, match="max_lag"):
            data.parse_config("max_lag = -1\n")
        with pytest.raises(ConfigError):
            data.parse_config("nmc = lots\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError):
            data.parse_config("rho 0.3\n")

    def test_serialize_round_trip_is_stable(self):
        text = """delta_grid = 0.975:0.005:0.995
alpha_grid = 0.95,1.0
rho = 0.25
split_date = 2006-04-14
series = FX2,FX1
seed = 99
"""
        cfg = data.parse_config(text)
        once = data.serialize_config(cfg)
        again = data.serialize_config(data.parse_config(once))
        assert once == again
        assert data.parse_config(once) == cfg

    def test_grid_with_inexact_step_truncates_below_stop(self):
        cfg = data.parse_config("delta_grid = 0.9:0.04:0.99\n")
        np.testing.assert_allclose(cfg.delta_grid, [0.9, 0.94, 0.98])
