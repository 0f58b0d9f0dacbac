import json
import socket

import pytest

from cloudlat.fixture import ThrottledServer

ACCEPTANCE_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker and (report.when == "call" or (report.when == "setup" and not report.passed)):
        number, title = marker.args
        verdict = "PASS" if report.passed else "FAIL"
        variant = f" [{item.callspec.id}]" if hasattr(item, "callspec") else ""
        ACCEPTANCE_RESULTS.append(f"[{verdict}] criterion {number:>2}: {title}{variant}")
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture
def throttled_server():
    with ThrottledServer(payload_size=1_048_576, rate=10e6) as srv:
        yield srv


@pytest.fixture
def unreachable_url():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return f"http://127.0.0.1:{port}/blob"


REGIONS = [
    {"id": "gae-ashburn", "provider": "gae", "continent": "NA", "city_name": "Ashburn",
     "lat_deg": 39.0438, "lon_deg": -77.4874},
    {"id": "gae-montreal", "provider": "gae", "continent": "NA", "city_name": "Montreal",
     "lat_deg": 45.5017, "lon_deg": -73.5673},
    {"id": "gae-oregon", "provider": "gae", "continent": "NA", "city_name": "The Dalles",
     "lat_deg": 45.6017, "lon_deg": -121.1840},
    {"id": "gae-frankfurt", "provider": "gae", "continent": "EU", "city_name": "Frankfurt",
     "lat_deg": 50.1109, "lon_deg": 8.6821},
    {"id": "gae-london", "provider": "gae", "continent": "EU", "city_name": "London",
     "lat_deg": 51.5074, "lon_deg": -0.1278},
    {"id": "gae-sydney", "provider": "gae", "continent": "OC", "city_name": "Sydney",
     "lat_deg": -33.8688, "lon_deg": 151.2093},
]


@pytest.fixture
def regions_file(tmp_path):
    path = tmp_path / "regions.json"
    path.write_text(json.dumps(REGIONS, indent=2))
    return path
