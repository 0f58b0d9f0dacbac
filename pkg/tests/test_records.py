import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudlat.geodesy import City, GeoPoint
from cloudlat.records import (
    FormatError,
    MeasurementRecord,
    Region,
    load_paths,
    load_records,
    load_regions,
    persist_records,
    save_regions,
    summarize,
    write_paths,
)
from cloudlat.model import PathSpec


def test_summarize_singleton():
    s = summarize([100])
    assert (s.median_ms, s.mean_ms, s.stddev_ms) == (100, 100, 0)


def test_summarize_pair_population_stddev():
    s = summarize([100, 200])
    assert (s.median_ms, s.mean_ms, s.stddev_ms) == (150, 150, 50)


def test_summarize_unsorted():
    s = summarize([300, 100, 200])
    assert (s.median_ms, s.min_ms, s.max_ms) == (200, 100, 300)


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize([])


@given(st.lists(st.floats(0.001, 1e6), min_size=1, max_size=30))
def test_summary_invariants(samples):
    s = summarize(samples)
    assert s.min_ms <= s.median_ms <= s.max_ms
    assert s.stddev_ms >= 0


def test_record_invariants():
    with pytest.raises(ValueError):
        MeasurementRecord(0, "a", "b", 0, (1.0,), "ok")
    with pytest.raises(ValueError):
        MeasurementRecord(0, "a", "b", 10, (0.0,), "ok")
    with pytest.raises(ValueError):
        MeasurementRecord(0, "a", "b", 10, (1.0,), "great")
    MeasurementRecord(0, "a", "b", 0, (), "failed")


ids = st.text(st.characters(codec="utf-8", exclude_categories=("Cs",)), min_size=1, max_size=12)
records_strategy = st.lists(
    st.one_of(
        st.builds(MeasurementRecord, st.integers(0, 2**53), ids, ids, st.integers(1, 2**40),
                  st.lists(st.floats(1e-6, 1e7), min_size=1, max_size=8).map(tuple), st.just("ok")),
        st.builds(MeasurementRecord, st.integers(0, 2**53), ids, ids, st.integers(0, 2**40),
                  st.lists(st.floats(1e-6, 1e7), max_size=8).map(tuple), st.sampled_from(["partial", "failed"])),
    ),
    max_size=10,
)


@given(records_strategy)
def test_round_trip(tmp_path_factory, recs):
    path = tmp_path_factory.mktemp("rt") / "m.jsonl"
    persist_records(recs, path, append=False)
    assert load_records(path) == recs


def test_persist_appends(tmp_path):
    path = tmp_path / "m.jsonl"
    a = MeasurementRecord(1, "c", "s", 10, (5.0,), "ok")
    b = MeasurementRecord(2, "c", "t", 0, (), "failed")
    persist_records([a], path)
    persist_records([b], path)
    assert load_records(path) == [a, b]


def test_field_names_bit_exact(tmp_path):
    path = tmp_path / "m.jsonl"
    persist_records([MeasurementRecord(1, "c", "s", 10, (5.0, 6.5), "ok")], path)
    line = path.read_text(encoding="utf-8")
    assert line.endswith("\n")
    assert list(json.loads(line)) == ["ts_unix_ms", "client_id", "server_id", "bytes", "samples_ms", "status"]


def test_corrupted_line_reports_line_number(tmp_path):
    path = tmp_path / "m.jsonl"
    good = json.dumps(MeasurementRecord(1, "c", "s", 10, (5.0,), "ok").to_dict())
    path.write_text(good + "\n{not json\n" + good + "\n")
    with pytest.raises(FormatError, match=":2:"):
        load_records(path)


def test_empty_file(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("")
    assert load_records(path) == []


def test_regions_round_trip(tmp_path, regions_file):
    regions = load_regions(regions_file)
    assert regions[0].city.name == "Ashburn"
    out = tmp_path / "again.json"
    save_regions(regions, out)
    assert load_regions(out) == regions


def test_region_url_must_be_absolute():
    with pytest.raises(ValueError):
        Region("x", "p", "NA", City("c", GeoPoint(0, 0)), "/relative/path")


def test_regions_duplicate_ids(tmp_path):
    item = {"id": "a", "provider": "p", "continent": "NA", "city_name": "c", "lat_deg": 0, "lon_deg": 0}
    path = tmp_path / "r.json"
    path.write_text(json.dumps([item, item]))
    with pytest.raises(FormatError):
        load_regions(path)


def test_regions_bad_latitude(tmp_path):
    item = {"id": "a", "provider": "p", "continent": "NA", "city_name": "c", "lat_deg": 95, "lon_deg": 0}
    path = tmp_path / "r.json"
    path.write_text(json.dumps([item]))
    with pytest.raises(FormatError):
        load_regions(path)


def test_paths_round_trip(tmp_path):
    paths = {("a", "b"): PathSpec(1e6, 2.5e6, 1), ("b", "a"): PathSpec(123.25, 0.0, 0)}
    out = tmp_path / "paths.csv"
    write_paths(paths, out)
    assert out.read_text().splitlines()[0] == "client_id,server_id,i_lan_m,i_sub_m,n_relays"
    assert load_paths(out) == paths


def test_paths_bad_header(tmp_path):
    out = tmp_path / "paths.csv"
    out.write_text("client,server,lan,sub,n\n")
    with pytest.raises(FormatError):
        load_paths(out)


def test_paths_bad_row(tmp_path):
    out = tmp_path / "paths.csv"
    out.write_text("client_id,server_id,i_lan_m,i_sub_m,n_relays\na,b,1,2,x\n")
    with pytest.raises(FormatError, match=":2:"):
        load_paths(out)
