"""JSON wire format for matrices, states and channels.

Matrices are ``{"rows": m, "cols": n, "data": [[re, im], ...]}`` in
row-major order. States are ``{"dims": [...], "matrix": <matrix>}``.
Channels are ``{"dim_in": n, "dim_out": m, "kraus": [<matrix>, ...]}`` or
the same with ``"choi"`` (output factor first) in place of ``"kraus"``.
"""

from __future__ import annotations

import numpy as np

from .channels import QuantumChannel
from .linalg import is_density_matrix


class WireFormatError(ValueError):
    """Malformed or inconsistent serialized object."""


def matrix_to_wire(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise WireFormatError("only 2-d matrices are serializable")
    flat = m.reshape(-1)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "data": [[float(z.real), float(z.imag)] for z in flat]}


def wire_to_matrix(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise WireFormatError(f"matrix needs integer rows, cols and data: {exc}") from None
    if rows < 1 or cols < 1 or not isinstance(data, list) or len(data) != rows * cols:
        raise WireFormatError(f"matrix data has {len(data) if isinstance(data, list) else '?'} "
                              f"entries, expected {rows}*{cols}")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in data])
    except (TypeError, ValueError):
        raise WireFormatError("matrix entries must be [re, im] pairs") from None
    if not np.all(np.isfinite(arr)):
        raise WireFormatError("matrix entries must be finite")
    return arr.reshape(rows, cols)


def state_to_wire(rho, dims) -> dict:
    return {"dims": [int(d) for d in dims], "matrix": matrix_to_wire(rho)}


def wire_to_state(obj, tol: float = 1e-8):
    """Returns ``(rho, dims)``; rejects non-density matrices."""
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise WireFormatError("state needs a 'matrix' field")
    rho = wire_to_matrix(obj["matrix"])
    dims = obj.get("dims", [rho.shape[0]])
    if not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims):
        raise WireFormatError("dims must be a list of positive integers")
    if rho.shape != (int(np.prod(dims)),) * 2:
        raise WireFormatError(f"matrix shape {rho.shape} does not match dims {dims}")
    if not is_density_matrix(rho, tol):
        raise WireFormatError("matrix is not a density matrix")
    return 0.5 * (rho + rho.conj().T), dims


def channel_to_wire(ch: QuantumChannel) -> dict:
    return {"dim_in": ch.dim_in, "dim_out": ch.dim_out,
            "kraus": [matrix_to_wire(k) for k in ch.kraus]}


def wire_to_channel(obj) -> QuantumChannel:
    if not isinstance(obj, dict):
        raise WireFormatError("channel must be an object")
    try:
        d_in, d_out = int(obj["dim_in"]), int(obj["dim_out"])
    except (KeyError, TypeError, ValueError):
        raise WireFormatError("channel needs integer dim_in and dim_out") from None
    try:
        if "kraus" in obj:
            ks = [wire_to_matrix(k) for k in obj["kraus"]]
            if any(k.shape != (d_out, d_in) for k in ks):
                raise WireFormatError("Kraus operator shape does not match dim_out x dim_in")
            return QuantumChannel(ks)
        if "choi" in obj:
            return QuantumChannel.from_choi(wire_to_matrix(obj["choi"]), d_in, d_out)
    except WireFormatError:
        raise
    except ValueError as exc:
        raise WireFormatError(str(exc)) from None
    raise WireFormatError("channel needs 'kraus' or 'choi'")
