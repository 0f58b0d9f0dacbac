"""Timed HTTP downloads against server endpoints."""

from __future__ import annotations

import logging
import socket
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from cloudlat.records import MeasurementRecord, Region, _is_absolute_url

log = logging.getLogger(__name__)

READ_CHUNK = 65536


class ProbeError(Exception):
    def __init__(self, endpoint, message):
        super().__init__(f"{endpoint}: {message}")
        self.endpoint = endpoint


class ProbeTimeout(ProbeError):
    pass


class ProtocolError(ProbeError):
    pass


class TransportError(ProbeError):
    pass


@dataclass(frozen=True)
class ProbeConfig:
    repetitions: int = 5
    warmup: int = 1
    timeout: float = 60.0
    max_retries: int = 2
    parallelism: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.warmup < 0 or self.max_retries < 0:
            raise ValueError("warmup and max_retries must be >= 0")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class ProbeResult:
    elapsed_ms: float
    bytes: int
    ttfb_ms: float | None = None


def probe_once(endpoint_url: str, timeout: float = 60.0) -> ProbeResult:
    """Download ``endpoint_url`` completely and time it.

    The clock starts before the connection is opened, so DNS, TCP and TLS
    setup are included, and stops after the last body byte.
    """
    if not _is_absolute_url(endpoint_url):
        raise ValueError(f"endpoint URL is not absolute: {endpoint_url!r}")
    request = urllib.request.Request(endpoint_url, headers={"Cache-Control": "no-cache"})
    start = time.perf_counter()
    deadline = start + timeout
    ttfb = None
    received = 0
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            while True:
                chunk = resp.read(READ_CHUNK)
                if not chunk:
                    break
                if ttfb is None:
                    ttfb = time.perf_counter()
                received += len(chunk)
                if time.perf_counter() > deadline:
                    raise ProbeTimeout(endpoint_url, f"no complete body within {timeout} s")
        end = time.perf_counter()
    except urllib.error.HTTPError as exc:
        raise ProtocolError(endpoint_url, f"HTTP status {exc.code}") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise ProbeTimeout(endpoint_url, f"timed out after {timeout} s") from exc
        raise TransportError(endpoint_url, str(exc.reason)) from exc
    except (socket.timeout, TimeoutError) as exc:
        raise ProbeTimeout(endpoint_url, f"timed out after {timeout} s") from exc
    except (OSError, urllib.error.ContentTooShortError) as exc:
        raise TransportError(endpoint_url, str(exc)) from exc
    if end > deadline:
        raise ProbeTimeout(endpoint_url, f"no complete body within {timeout} s")
    return ProbeResult(
        elapsed_ms=(end - start) * 1000.0,
        bytes=received,
        ttfb_ms=None if ttfb is None else (ttfb - start) * 1000.0,
    )


def _attempt(url, config):
    for attempt in range(config.max_retries + 1):
        try:
            return probe_once(url, config.timeout)
        except ProbeError as exc:
            log.info("attempt %d failed: %s", attempt + 1, exc)
    return None


def _probe_server(client_id, server: Region, config: ProbeConfig) -> MeasurementRecord:
    ts = time.time_ns() // 1_000_000
    for _ in range(config.warmup):
        _attempt(server.endpoint_url, config)
    samples = []
    size = 0
    for _ in range(config.repetitions):
        result = _attempt(server.endpoint_url, config)
        if result is not None and result.elapsed_ms > 0:
            samples.append(result.elapsed_ms)
            size = result.bytes
    if len(samples) == config.repetitions and size > 0:
        status = "ok"
    elif samples:
        status = "partial"
    else:
        status = "failed"
    return MeasurementRecord(ts, client_id, server.id, size, tuple(samples), status)


def run_campaign(client_id: str, servers: Iterable[Region],
                 config: ProbeConfig = ProbeConfig()) -> list[MeasurementRecord]:
    """Probe every server and return one record per server, in input order.

    Failures never abort the campaign; they show up as ``partial`` or
    ``failed`` records. Up to ``config.parallelism`` servers are probed at
    once, which shares the client's bandwidth and perturbs the timings.
    """
    servers = list(servers)
    for server in servers:
        if server.endpoint_url is None:
            raise ValueError(f"server region {server.id!r} has no endpoint_url")
    if config.parallelism == 1 or len(servers) <= 1:
        return [_probe_server(client_id, s, config) for s in servers]
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(lambda s: _probe_server(client_id, s, config), servers))
