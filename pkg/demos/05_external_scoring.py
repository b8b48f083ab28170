"""Scoring through an out-of-process model over the line protocol.

Any scorer that prints a one-line JSON handshake and answers
{"id", "tokens"} requests with {"id", "z"} can stand in for the built-in
models -- the samplers never know the difference.  Here an n-gram model is
saved to JSON, served by a subprocess, and queried through the client
adapter; the scores match the in-process model exactly.

Run:  python3 demos/05_external_scoring.py
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from omniinput import InputSpace, NGramModel
from omniinput.external import ExternalModel

space = InputSpace(vocab_size=8, length=6)
rng = np.random.default_rng(0)
corpus = [rng.integers(0, 8, size=6) for _ in range(60)]
model = NGramModel(space, order=2, alpha=0.3).fit(corpus)

path = Path(tempfile.mkdtemp()) / "model.json"
path.write_text(model.to_json())
print(f"saved n-gram model to {path}")

command = [sys.executable, "-m", "omniinput.external", f"ngram:{path}"]
with ExternalModel(command, space) as ext:
    print(f"handshake ok: direction={ext.direction.value}")
    probes = np.array([rng.integers(0, 8, size=6) for _ in range(5)])
    remote = ext.score_batch(probes)
    local = model.score_batch(probes)
    for seq, r, l in zip(probes, remote, local):
        print(f"  {seq} -> remote {r:.6f}  local {l:.6f}")
    print(f"max deviation: {np.max(np.abs(remote - local)):.2e}")
