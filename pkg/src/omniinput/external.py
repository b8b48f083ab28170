"""Line-delimited JSON wire protocol for out-of-process scoring.

Server handshake (one line on start):
    {"protocol":"omniinput-score","version":1,"direction":"lower"|"higher"}
Request:  {"id":int,"tokens":[int,...]}
Response: {"id":int,"z":float}

One UTF-8 JSON object per line; responses may arrive out of order and are
matched by id.  Any in-process model can be served over stdio with
``run_stdio_server``; ``ExternalModel`` is the client side and satisfies
the normal scoring interface.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys

import numpy as np

from .models import Direction, EnergyModel
from .space import InputSpace

__all__ = ["ScoringError", "ExternalModel", "run_stdio_server"]

PROTOCOL = "omniinput-score"
VERSION = 1


class ScoringError(RuntimeError):
    def __init__(self, message, seq=None):
        super().__init__(message)
        self.seq = None if seq is None else np.asarray(seq)


class ExternalModel(EnergyModel):
    """Client for a scoring process speaking the line protocol."""

    def __init__(self, command, space: InputSpace, name: str | None = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = command
        self.space = space
        self.name = name or f"external:{command[0]}"
        self._next_id = 0
        self._pending: dict[int, float] = {}
        self._proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        handshake = self._read_line()
        if handshake.get("protocol") != PROTOCOL:
            raise ScoringError(f"bad handshake: {handshake!r}")
        if handshake.get("version") != VERSION:
            raise ScoringError(f"unsupported protocol version: {handshake!r}")
        self.direction = (Direction.LOWER_IS_CONFIDENT
                          if handshake["direction"] == "lower"
                          else Direction.HIGHER_IS_CONFIDENT)

    def _read_line(self) -> dict:
        line = self._proc.stdout.readline()
        if not line:
            raise ScoringError("scoring process closed its output")
        return json.loads(line)

    def _send(self, tokens) -> int:
        req_id = self._next_id
        self._next_id += 1
        try:
            self._proc.stdin.write(json.dumps(
                {"id": req_id, "tokens": [int(t) for t in tokens]}) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScoringError(f"transport failure: {exc}", tokens) from exc
        return req_id

    def _receive(self, req_id: int, seq) -> float:
        while req_id not in self._pending:
            try:
                resp = self._read_line()
            except ScoringError as exc:
                raise ScoringError(str(exc), seq) from exc
            if "error" in resp:
                raise ScoringError(resp["error"], seq)
            self._pending[int(resp["id"])] = float(resp["z"])
        return self._pending.pop(req_id)

    def score(self, seq) -> float:
        return self._receive(self._send(seq), seq)

    def score_batch(self, seqs) -> np.ndarray:
        seqs = np.asarray(seqs)
        ids = [self._send(s) for s in seqs]
        # batch fails atomically: any transport error aborts the whole call
        return np.array([self._receive(i, s) for i, s in zip(ids, seqs)])

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def run_stdio_server(model: EnergyModel, stdin=None, stdout=None) -> None:
    """Serve one model over the line protocol until input closes."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    direction = ("lower" if model.direction is Direction.LOWER_IS_CONFIDENT
                 else "higher")
    stdout.write(json.dumps({"protocol": PROTOCOL, "version": VERSION,
                             "direction": direction}) + "\n")
    stdout.flush()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        try:
            z = model.score(np.asarray(req["tokens"], dtype=np.int64))
            stdout.write(json.dumps({"id": req["id"], "z": float(z)}) + "\n")
        except Exception as exc:  # report per-request, keep serving
            stdout.write(json.dumps({"id": req.get("id"),
                                     "error": str(exc)}) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    """``python -m omniinput.external MODEL`` — serve a model over stdio.

    MODEL is ``sum:D,N`` or ``ngram:/path/to/model.json``.
    """
    import argparse

    from .models import NGramModel, SumEnergy

    parser = argparse.ArgumentParser(prog="omniinput.external")
    parser.add_argument("model", help="sum:D,N or ngram:<path>")
    args = parser.parse_args(argv)
    kind, _, rest = args.model.partition(":")
    if kind == "sum":
        d, n = (int(x) for x in rest.split(","))
        model = SumEnergy(InputSpace(n + 1, d))
    elif kind == "ngram":
        with open(rest) as fh:
            model = NGramModel.from_json(fh.read())
    else:
        parser.error(f"unknown model kind {kind!r}")
    run_stdio_server(model)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
