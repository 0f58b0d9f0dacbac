"""Local HTTP file server with a configurable payload and byte-rate throttle.

Used by the test suite and for demos::

    python -m cloudlat.fixture --size 1048576 --rate 10e6 --port 8000
"""

from __future__ import annotations

import argparse
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    server: "ThrottledServer"

    def log_message(self, format, *args):
        pass

    def do_GET(self):
        srv = self.server
        started = time.monotonic()
        if srv.status >= 400:
            self.send_error(srv.status)
            srv.record(started, time.monotonic())
            return
        self.send_response(srv.status)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(srv.payload_size))
        self.end_headers()
        sent = 0
        begin = time.monotonic()
        try:
            while sent < srv.payload_size:
                n = min(srv.chunk_size, srv.payload_size - sent)
                # pace before writing so the final write ends the transfer
                if srv.rate:
                    delay = begin + (sent + n) / srv.rate - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                self.wfile.write(srv.chunk[:n])
                sent += n
        except (BrokenPipeError, ConnectionResetError):
            pass
        srv.record(started, time.monotonic())


class ThrottledServer(ThreadingHTTPServer):
    """Serve ``payload_size`` bytes per GET at up to ``rate`` bytes/second.

    ``rate=None`` disables throttling. ``status`` other than 200 makes every
    request fail with that code. Each handled request appends its
    ``(start, end)`` monotonic interval to ``intervals``.
    """

    daemon_threads = True

    def __init__(self, payload_size=1_048_576, rate=10e6, status=200,
                 host="127.0.0.1", port=0, chunk_size=8192):
        super().__init__((host, port), _Handler)
        self.payload_size = int(payload_size)
        self.rate = rate
        self.status = status
        self.chunk_size = chunk_size
        self.chunk = b"\x5a" * chunk_size
        self.intervals = []
        self._lock = threading.Lock()
        self._thread = None

    def record(self, start, end):
        with self._lock:
            self.intervals.append((start, end))

    @property
    def url(self):
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/blob"

    def start(self):
        self._thread = threading.Thread(target=self.serve_forever, kwargs={"poll_interval": 0.05},
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=1_048_576, help="payload bytes")
    parser.add_argument("--rate", type=float, default=10e6, help="bytes/second, 0 for unthrottled")
    parser.add_argument("--status", type=int, default=200)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    server = ThrottledServer(args.size, args.rate or None, args.status, args.host, args.port)
    print(f"serving {args.size} bytes at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


if __name__ == "__main__":
    main()
