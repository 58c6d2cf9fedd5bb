"""Unit tests for field, report and sample file formats."""

import numpy as np
import pytest

from src.engines.harness.fields import FieldGrid, synthesize_field
from src.engines.harness.io import (
    load_field_csv,
    load_locations_csv,
    load_report_csv,
    load_samples_csv,
    save_field_csv,
    save_locations_csv,
    save_report_csv,
)
from src.kernel.errors import FieldFormatError
from src.kernel.gp_core import Hyperparams
from src.schemas.experiment import REPORT_COLUMNS, StepRecord

HEADER = "origin_x,origin_y,cell_w,cell_h,rows,cols,noise_sd\n"


class TestFieldCsv:
    def test_round_trip_synthesized_grid(self, tmp_path):
        field = synthesize_field(7, 9, Hyperparams.isotropic(1.3, 2.0, noise_var=0.02), seed=4)
        path = tmp_path / "field.csv"
        save_field_csv(field, path)
        loaded = load_field_csv(path)
        np.testing.assert_array_equal(loaded.values, field.values)
        np.testing.assert_array_equal(loaded.origin, field.origin)
        assert loaded.measurement_noise_sd == field.measurement_noise_sd

    def test_hand_written_grid(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text(HEADER + "0,0,1,2,2,2,0.1\n1.5,2.5\n-3,4.25\n")
        field = load_field_csv(path)
        assert field.values[0, 1] == 2.5
        assert field.values[1, 0] == -3.0
        np.testing.assert_array_equal(field.cell_size, [1.0, 2.0])
        assert field.measurement_noise_sd == 0.1

    def test_header_is_written_first(self, tmp_path):
        field = FieldGrid(origin=(0.0, 0.0), cell_size=1.0, values=np.ones((1, 2)))
        path = tmp_path / "f.csv"
        save_field_csv(field, path)
        assert path.read_text().splitlines()[0] == HEADER.strip()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(FieldFormatError) as exc:
            load_field_csv(path)
        assert exc.value.line == 1

    def test_missing_rows(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text(HEADER + "0,0,1,1,2,2,0\n")
        with pytest.raises(FieldFormatError) as exc:
            load_field_csv(path)
        assert exc.value.line == 3

    def test_bad_value_reports_its_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "0,0,1,1,3,2,0\n1,2\n3,abc\n5,6\n")
        with pytest.raises(FieldFormatError) as exc:
            load_field_csv(path)
        assert exc.value.line == 4

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("x,y\n1,2\n")
        with pytest.raises(FieldFormatError):
            load_field_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FieldFormatError):
            load_field_csv(tmp_path / "nope.csv")


class TestReportCsv:
    def test_round_trip(self, tmp_path):
        records = [
            StepRecord(t=t, true_x=0.1 * t, true_y=1.0 / 3.0, true_heading=-0.5, est_x=0.1 * t + 1e-3,
                       est_y=0.3, est_heading=0.2, error=0.0123456789012345, step_ms=0.0, state_bytes=1024)
            for t in range(1, 5)
        ]
        path = tmp_path / "report.csv"
        save_report_csv(records, path)
        assert path.read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
        assert load_report_csv(path) == records

    def test_write_is_byte_stable(self, tmp_path):
        records = [StepRecord(t=1, true_x=0.1, true_y=0.2, true_heading=0.0, est_x=0.1, est_y=0.2,
                              est_heading=0.0, error=0.0)]
        save_report_csv(records, tmp_path / "a.csv")
        save_report_csv(records, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestSamplesAndLocations:
    def test_samples(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("x,y,z\n0,0,1.5\n1,2,-0.25\n")
        data = load_samples_csv(path)
        assert len(data) == 2
        np.testing.assert_array_equal(data.values, [1.5, -0.25])

    def test_samples_bad_row(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("x,y,z\n0,0,1.5\n1,oops,2\n")
        with pytest.raises(FieldFormatError) as exc:
            load_samples_csv(path)
        assert exc.value.line == 3

    def test_locations_round_trip(self, tmp_path, rng):
        locations = rng.uniform(size=(6, 2))
        save_locations_csv(locations, tmp_path / "s.csv")
        np.testing.assert_array_equal(load_locations_csv(tmp_path / "s.csv"), locations)
