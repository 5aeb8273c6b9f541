"""Helpers for writing a backend worker that speaks the line protocol.

A worker prints one hello line, then answers each call line with exactly one
result line. Values use the engine's JSON encoding: tensors are
{"kind": "tensor", "dtype", "shape", "data"} with non-finite numbers as the
strings "NaN", "Infinity" and "-Infinity".
"""

import json
import math
import sys

from ._core import wire

_SPECIAL = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def decode_real(v):
    return _SPECIAL[v] if isinstance(v, str) else float(v)


def encode_real(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return x


def serve(backend_id, ops, version="", stdin=None, stdout=None):
    """Run the protocol loop. `ops` maps qualified API names to callables
    taking the decoded argument list and returning a list of output values."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stdout.write(wire.hello(backend_id, sorted(ops), version) + "\n")
    stdout.flush()
    for line in stdin:
        if not line.strip():
            continue
        try:
            call = json.loads(wire.parse_call(line))
        except Exception as e:  # malformed request
            reply = wire.result_error(0, str(e))
        else:
            fn = ops.get(call["api"])
            if fn is None:
                reply = wire.result_error(call["id"], "unsupported api " + call["api"])
            else:
                try:
                    reply = wire.result_ok(call["id"], json.dumps(fn(call["args"])))
                except Exception as e:
                    reply = wire.result_error(call["id"], f"{type(e).__name__}: {e}")
        stdout.write(reply + "\n")
        stdout.flush()
