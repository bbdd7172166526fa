"""Lock-step links between the agent and the simulated vehicle.

Both links push every frame and report through the same newline-delimited
JSON codec, so in-process and TCP runs see identical data.
"""
from __future__ import annotations

import json
import multiprocessing as mp
import socket
from dataclasses import asdict

from .bus import LineBuffer
from .dynamics import VehicleState
from .sensors import DvlMeasurement, Measurement
from .simulator import ActuatorFrame, SensorReport, VehicleSim


class TransportError(RuntimeError):
    pass


def encode_frame(frame: ActuatorFrame) -> bytes:
    return (json.dumps(asdict(frame), separators=(",", ":"), allow_nan=False) + "\n").encode()


def decode_frame(line: bytes) -> ActuatorFrame:
    return ActuatorFrame(**json.loads(line))


def encode_report(rep: SensorReport) -> bytes:
    obj = {"tick": rep.tick, "t": rep.t,
           "measurement": None if rep.measurement is None else asdict(rep.measurement),
           "dvl": None if rep.dvl is None else asdict(rep.dvl),
           "truth": asdict(rep.truth), "done": rep.done}
    return (json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n").encode()


def decode_report(line: bytes) -> SensorReport:
    o = json.loads(line)
    m = o["measurement"]
    d = o["dvl"]
    return SensorReport(o["tick"], o["t"], None if m is None else Measurement(**m),
                        None if d is None else DvlMeasurement(**d), VehicleState(**o["truth"]),
                        o["done"])


class InProcessLink:
    def __init__(self, cfg):
        self.sim = VehicleSim(cfg)

    def initial(self) -> SensorReport:
        return decode_report(encode_report(self.sim.report()))

    def exchange(self, frame: ActuatorFrame) -> SensorReport:
        rep = self.sim.step(decode_frame(encode_frame(frame)))
        return decode_report(encode_report(rep))

    def close(self) -> None:
        pass


def _serve(cfg, conn) -> None:
    sim = VehicleSim(cfg)
    srv = socket.create_server(("127.0.0.1", 0))
    conn.send(srv.getsockname()[1])
    conn.close()
    client, _ = srv.accept()
    client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    buf = LineBuffer()
    try:
        client.sendall(encode_report(sim.report()))
        while True:
            chunk = client.recv(65536)
            if not chunk:
                break
            for line in buf.feed(chunk):
                client.sendall(encode_report(sim.step(decode_frame(line))))
    finally:
        client.close()
        srv.close()


class TcpLink:
    """Vehicle server in a child process on the loopback interface; the
    agent is the client."""

    def __init__(self, cfg, timeout: float = 30.0):
        ctx = mp.get_context("spawn")
        parent, child = ctx.Pipe()
        self.proc = ctx.Process(target=_serve, args=(cfg, child), daemon=True)
        self.proc.start()
        if not parent.poll(timeout):
            raise TransportError("vehicle server did not start")
        port = parent.recv()
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.buf = LineBuffer()
        self.queue: list[bytes] = []

    def _read(self) -> SensorReport:
        while not self.queue:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise TransportError("vehicle server closed the connection")
            self.queue.extend(self.buf.feed(chunk))
        return decode_report(self.queue.pop(0))

    def initial(self) -> SensorReport:
        return self._read()

    def exchange(self, frame: ActuatorFrame) -> SensorReport:
        self.sock.sendall(encode_frame(frame))
        return self._read()

    def close(self) -> None:
        try:
            self.sock.close()
        finally:
            self.proc.join(timeout=5)
            if self.proc.is_alive():
                self.proc.terminate()


def open_link(cfg, transport: str = "inproc"):
    if transport == "inproc":
        return InProcessLink(cfg)
    if transport == "tcp":
        return TcpLink(cfg)
    raise TransportError(f"unknown transport {transport!r}")

