import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import daily_stamps, make_table, write_csv
from fcinet.errors import AlignmentError, InputError
from fcinet.panel import (PricePanel, SeriesTable, align_and_join,
                          first_difference, gross_returns, load_price_panel,
                          load_series_table, log_transform,
                          write_series_table)


def write_price_csv(path, names, stamps, values):
    write_csv(path, names, stamps, values)


class TestLoadPricePanel:
    def test_constant_panel(self, tmp_path):
        path = tmp_path / "p.csv"
        write_price_csv(path, ["A", "B"], daily_stamps(3), np.full((2, 3), 100.0))
        panel = load_price_panel(path)
        assert panel.n_assets == 2 and panel.n_dates == 3
        assert np.all(panel.prices == 100.0)

    def test_zero_price_names_cell(self, tmp_path):
        path = tmp_path / "p.csv"
        vals = np.full((2, 3), 100.0)
        vals[0, 1] = 0.0
        write_price_csv(path, ["AAPL", "MSFT"], daily_stamps(3), vals)
        with pytest.raises(InputError, match="AAPL") as err:
            load_price_panel(path)
        assert str(daily_stamps(3)[1]) in str(err.value)

    def test_duplicate_dates_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A,B\n2020-01-01,1,1\n2020-01-01,2,2\n")
        with pytest.raises(InputError, match="duplicate date"):
            load_price_panel(path)

    def test_unparseable_number_located(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A,B\n2020-01-01,1,oops\n")
        with pytest.raises(InputError, match=r":2.*oops.*'B'"):
            load_price_panel(path)

    def test_ragged_row_located(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A,B\n2020-01-01,1\n")
        with pytest.raises(InputError, match="ragged"):
            load_price_panel(path)

    def test_rows_sorted_by_date(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A,B\n2020-01-03,3,3\n2020-01-01,1,1\n2020-01-02,2,2\n")
        panel = load_price_panel(path)
        assert np.all(panel.prices[0] == [1, 2, 3])

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="nope.csv"):
            load_price_panel(tmp_path / "nope.csv")

    def test_scientific_notation_accepted(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A,B\n2020-01-01,1e2,2.5E-1\n2020-01-02,1e2,2.5E-1\n")
        panel = load_price_panel(path)
        assert panel.prices[1, 0] == 0.25

    def test_paper_scale_panel(self, tmp_path):
        # production scale: 811 assets over 8265 dates (~127 MB on disk)
        from fcinet.synth import simulate_price_panel

        panel = simulate_price_panel(811, 8265, 0.02, seed=5)
        path = tmp_path / "big.csv"
        write_series_table(
            SeriesTable(names=panel.asset_ids, timestamps=panel.timestamps,
                        values=panel.prices), path)
        back = load_price_panel(path)
        assert back.n_assets == 811 and back.n_dates == 8265
        assert np.array_equal(back.prices, panel.prices)

    def test_single_asset_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        with open(path, "w") as fh:
            fh.write("date,A\n2020-01-01,1\n2020-01-02,1\n")
        with pytest.raises(InputError):
            load_price_panel(path)


class TestGrossReturns:
    def test_constant_prices(self):
        panel = PricePanel(("A", "B"), daily_stamps(3), np.full((2, 3), 100.0))
        rp = gross_returns(panel)
        assert np.all(rp.returns == 1.0)
        assert rp.timestamps == daily_stamps(3)[1:]

    def test_forced_ratio(self):
        panel = PricePanel(("A", "B"), daily_stamps(2),
                           np.array([[100.0, 110.0], [50.0, 50.0]]))
        assert gross_returns(panel).returns[0, 0] == pytest.approx(1.1, abs=0)

    def test_telescoping_product_oracle(self):
        rng = np.random.default_rng(10)
        prices = rng.uniform(10, 200, size=(5, 20))
        panel = PricePanel(tuple("ABCDE"), daily_stamps(20), prices)
        rp = gross_returns(panel)
        prod = np.prod(rp.returns, axis=1)
        assert np.allclose(prod, prices[:, -1] / prices[:, 0], rtol=1e-12)

    def test_too_short(self):
        # a single-date panel is already rejected at construction
        with pytest.raises(InputError, match="at least 2 dates"):
            PricePanel(("A", "B"), daily_stamps(1), np.full((2, 1), 1.0))

    @given(st.integers(min_value=-20, max_value=20), st.integers(0, 999))
    @settings(max_examples=30, deadline=None)
    def test_scale_covariance_exact_for_pow2(self, exp, seed):
        # power-of-two scalings are exact in IEEE arithmetic
        rng = np.random.default_rng(seed)
        prices = rng.uniform(10, 200, size=(3, 6))
        scaled = prices.copy()
        scaled[1] *= 2.0 ** exp
        r1 = gross_returns(PricePanel(("A", "B", "C"), daily_stamps(6), prices))
        r2 = gross_returns(PricePanel(("A", "B", "C"), daily_stamps(6), scaled))
        assert np.array_equal(r1.returns, r2.returns)

    def test_scale_covariance_generic(self):
        rng = np.random.default_rng(11)
        prices = rng.uniform(10, 200, size=(3, 8))
        scaled = prices.copy()
        scaled[2] *= 3.7
        r1 = gross_returns(PricePanel(("A", "B", "C"), daily_stamps(8), prices))
        r2 = gross_returns(PricePanel(("A", "B", "C"), daily_stamps(8), scaled))
        assert np.allclose(r1.returns, r2.returns, rtol=1e-14)


class TestLoadSeriesTable:
    def test_daily_system(self, tmp_path):
        path = tmp_path / "s.csv"
        write_csv(path, ["FCIX", "VIX", "EMV", "EPU"], daily_stamps(30),
                  np.random.default_rng(0).normal(size=(4, 30)))
        table = load_series_table(path)
        assert table.n_series == 4
        assert table.names == ("FCIX", "VIX", "EMV", "EPU")

    def test_monthly_system_15(self, tmp_path):
        names = ["FCIX", "VIX", "EMV", "EPU", "MON", "FIS", "TAX", "GOV",
                 "HLTH", "SEC", "ENT", "GREG", "FREG", "TRD", "CPI"]
        path = tmp_path / "m.csv"
        write_csv(path, names, daily_stamps(40),
                  np.random.default_rng(1).normal(size=(15, 40)))
        assert load_series_table(path).n_series == 15

    def test_single_column_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        with open(path, "w") as fh:
            fh.write("date,X\n2020-01-01,1\n2020-01-02,2\n")
        with pytest.raises(InputError, match="at least 2"):
            load_series_table(path)

    def test_duplicate_names_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        with open(path, "w") as fh:
            fh.write("date,X,X\n2020-01-01,1,2\n")
        with pytest.raises(InputError, match="duplicate column"):
            load_series_table(path)

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=(3, 25)) * np.exp(rng.uniform(-250, 250, size=(3, 25)))
        table = make_table(vals)
        path = tmp_path / "rt.csv"
        write_series_table(table, path, metadata="round-trip test")
        back = load_series_table(path)
        assert back.names == table.names
        assert back.timestamps == table.timestamps
        assert np.array_equal(back.values, table.values)


class TestAlignAndJoin:
    def test_self_join_renamed(self):
        t = make_table(np.arange(8.0).reshape(2, 4), names=("a", "b"))
        t2 = SeriesTable(("c", "d"), t.timestamps, t.values)
        joined = align_and_join([t, t2])
        assert joined.names == ("a", "b", "c", "d")
        assert joined.n_dates == 4

    def test_partial_overlap(self):
        rng = np.random.default_rng(3)
        stamps = daily_stamps(20)
        a = SeriesTable(("a", "b"), stamps[:15], rng.normal(size=(2, 15)))
        b = SeriesTable(("c", "d"), stamps[5:], rng.normal(size=(2, 15)))
        joined = align_and_join([a, b])
        # set-intersection oracle
        expect = sorted(set(a.timestamps) & set(b.timestamps))
        assert list(joined.timestamps) == expect
        assert joined.n_dates == 10
        col = {s: k for k, s in enumerate(a.timestamps)}
        assert np.array_equal(joined.values[0],
                              a.values[0, [col[s] for s in expect]])

    def test_disjoint_ranges(self):
        stamps = daily_stamps(20)
        a = SeriesTable(("a", "b"), stamps[:10], np.ones((2, 10)))
        b = SeriesTable(("c", "d"), stamps[10:], np.ones((2, 10)))
        with pytest.raises(AlignmentError):
            align_and_join([a, b])

    def test_name_collision(self):
        t = make_table(np.ones((2, 4)))
        with pytest.raises(InputError, match="collision"):
            align_and_join([t, t])

    def test_empty_input(self):
        with pytest.raises(InputError):
            align_and_join([])


class TestTransforms:
    def test_log(self):
        t = make_table(np.array([[1.0, np.e], [np.e, 1.0]]))
        assert np.allclose(log_transform(t).values, [[0, 1], [1, 0]])
        bad = make_table(np.array([[1.0, -1.0, 2.0], [1.0, 1.0, 1.0]]))
        with pytest.raises(InputError, match="positive"):
            log_transform(bad)

    def test_diff(self):
        t = make_table(np.array([[1.0, 3.0, 6.0], [0.0, 0.0, 0.0]]))
        d = first_difference(t)
        assert np.array_equal(d.values[0], [2.0, 3.0])
        assert d.timestamps == t.timestamps[1:]
