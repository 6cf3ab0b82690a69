"""Completely positive maps in Kraus and Choi form.

Choi convention: ``J(N) = sum_ij N(|i><j|) ⊗ |i><j|`` with the output factor
first and an unnormalized maximally entangled reference, so that
``Tr_out J = 1_in`` is exactly the trace-preservation condition. With
row-major vectorization this gives ``J = sum_k vec(K_k) vec(K_k)^†``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .linalg import (
    DimensionError,
    as_operator,
    dag,
    hermitian_part,
    partial_trace,
    tensor_product,
    trace_norm,
)

TP_TOL = 1e-8
KRAUS_CUTOFF = 1e-10


class ChannelValidationError(ValueError):
    """Raised when an operator set does not describe a valid CP(TP) map."""


class QuantumChannel:
    """A CP map ``X -> sum_k K_k X K_k^†`` from ``dim_in`` to ``dim_out``.

    ``trace_preserving=False`` relaxes the TP check; this is how adjoints of
    channels and trace non-increasing pieces are represented.
    """

    def __init__(self, kraus, trace_preserving: bool = True, validate: bool = True):
        ks = [as_operator(k) for k in kraus]
        if not ks:
            raise ChannelValidationError("need at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise ChannelValidationError("Kraus operators have non-uniform shapes")
        self.kraus = np.array(ks)
        self.kraus.setflags(write=False)
        self.dim_out, self.dim_in = shape
        self.trace_preserving = trace_preserving
        self._choi = None
        if validate and trace_preserving:
            err = self.tp_error()
            if err > TP_TOL:
                raise ChannelValidationError(
                    f"not trace preserving: ||sum K^dag K - 1|| = {err:.3e}"
                )

    def __repr__(self):
        return (
            f"QuantumChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, "
            f"kraus_rank={len(self.kraus)}, tp={self.trace_preserving})"
        )

    def tp_error(self) -> float:
        s = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return float(np.linalg.norm(s - np.eye(self.dim_in), 2))

    @property
    def choi(self) -> np.ndarray:
        if self._choi is None:
            v = self.kraus.reshape(len(self.kraus), -1)
            self._choi = v.T @ v.conj()
            self._choi.setflags(write=False)
        return self._choi

    @classmethod
    def from_choi(cls, choi, dim_in: int, dim_out: int, trace_preserving: bool = True,
                  cutoff: float = KRAUS_CUTOFF) -> "QuantumChannel":
        """Minimal Kraus set from the eigendecomposition of a Choi matrix."""
        choi = as_operator(choi)
        if choi.shape != (dim_in * dim_out, dim_in * dim_out):
            raise DimensionError(f"Choi shape {choi.shape} vs dims ({dim_out}x{dim_in})")
        w, v = np.linalg.eigh(hermitian_part(choi))
        if w.min() < -max(1e-8, 1e-8 * abs(w).max()):
            raise ChannelValidationError(f"Choi matrix not PSD (min eigenvalue {w.min():.3e})")
        keep = w > cutoff
        if not keep.any():
            kraus = [np.zeros((dim_out, dim_in))]
        else:
            kraus = [np.sqrt(w[i]) * v[:, i].reshape(dim_out, dim_in) for i in np.flatnonzero(keep)]
        return cls(kraus, trace_preserving=trace_preserving)

    def superoperator(self) -> np.ndarray:
        """Matrix S with ``vec(N(X)) = S vec(X)`` (row-major vec)."""
        return np.einsum("kab,kcd->acbd", self.kraus, self.kraus.conj()).reshape(
            self.dim_out**2, self.dim_in**2
        )

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return np.einsum("kab,bc,kdc->ad", self.kraus, x, self.kraus.conj())

    def apply(self, state, dims: Sequence[int] | None = None, on: int | None = None) -> np.ndarray:
        """Apply on tensor factor ``on`` of a state with factor dims ``dims``.

        ``on=None`` applies the channel to the whole operator.
        """
        state = np.asarray(state, dtype=complex)
        if on is None:
            if state.shape != (self.dim_in, self.dim_in):
                raise DimensionError(f"state {state.shape} vs channel input {self.dim_in}")
            return self(state)
        dims = list(dims)
        if dims[on] != self.dim_in:
            raise DimensionError(f"factor {on} has dim {dims[on]}, channel takes {self.dim_in}")
        if int(np.prod(dims)) != state.shape[0]:
            raise DimensionError(f"dims {dims} do not match state {state.shape}")
        left = int(np.prod(dims[:on]))
        right = int(np.prod(dims[on + 1:]))
        t = state.reshape(left, self.dim_in, right, left, self.dim_in, right)
        out = np.einsum("kab,xbyzcw,kdc->xayzdw", self.kraus, t, self.kraus.conj())
        d = left * self.dim_out * right
        return out.reshape(d, d)

    def adjoint(self) -> "QuantumChannel":
        """Heisenberg-picture map with Kraus operators ``K^†`` (unital when self is TP)."""
        return QuantumChannel(dag(self.kraus), trace_preserving=False, validate=False)

    def compose(self, other: "QuantumChannel") -> "QuantumChannel":
        """``self ∘ other``."""
        if other.dim_out != self.dim_in:
            raise DimensionError("composition dimension mismatch")
        ks = [a @ b for a in self.kraus for b in other.kraus]
        return QuantumChannel(ks, trace_preserving=self.trace_preserving and other.trace_preserving,
                              validate=False)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        ks = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return QuantumChannel(ks, trace_preserving=self.trace_preserving and other.trace_preserving,
                              validate=False)

    def kraus_rank(self, tol: float = 1e-9) -> int:
        w = np.linalg.eigvalsh(hermitian_part(self.choi))
        return int(np.sum(w > tol * max(1.0, w.max())))

    def is_unitary(self, tol: float = 1e-9) -> bool:
        return self.dim_in == self.dim_out and self.tp_error() <= TP_TOL and self.kraus_rank(tol) == 1


def make_channel(kraus) -> QuantumChannel:
    """Validated CPTP channel from a Kraus list."""
    return QuantumChannel(kraus)


def to_choi(ch: QuantumChannel) -> np.ndarray:
    return np.array(ch.choi)


def apply(ch: QuantumChannel, state, dims=None, on=None) -> np.ndarray:
    return ch.apply(state, dims, on)


def adjoint(ch: QuantumChannel) -> QuantumChannel:
    return ch.adjoint()


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel([np.eye(d)])


def unitary_channel(u) -> QuantumChannel:
    return QuantumChannel([as_operator(u)])


def replacer_channel(sigma, dim_in: int) -> QuantumChannel:
    """``X -> Tr[X] sigma``."""
    sigma = as_operator(sigma)
    w, v = np.linalg.eigh(hermitian_part(sigma))
    ks = []
    for a in range(len(w)):
        if w[a] <= 0:
            continue
        for b in range(dim_in):
            k = np.zeros((len(w), dim_in), dtype=complex)
            k[:, b] = np.sqrt(w[a]) * v[:, a]
            ks.append(k)
    return QuantumChannel(ks)


def depolarizing_channel(d: int, p: float) -> QuantumChannel:
    """``X -> (1-p) X + p Tr[X] 1/d``."""
    ks = [np.sqrt(1 - p) * np.eye(d)] if p < 1 else []
    for a in range(d):
        for b in range(d):
            k = np.zeros((d, d), dtype=complex)
            k[a, b] = np.sqrt(p / d)
            ks.append(k)
    return QuantumChannel(ks)


def validate_projectors(projectors, complete: bool = True, tol: float = 1e-9) -> list[np.ndarray]:
    ps = [as_operator(p) for p in projectors]
    if not ps:
        raise ChannelValidationError("empty projector set")
    d = ps[0].shape[0]
    for i, p in enumerate(ps):
        if p.shape != (d, d):
            raise ChannelValidationError("projectors have non-uniform shapes")
        if np.linalg.norm(p @ p - p) > tol or np.linalg.norm(p - dag(p)) > tol:
            raise ChannelValidationError(f"projector {i} is not a Hermitian idempotent")
        for j in range(i):
            if np.linalg.norm(p @ ps[j]) > tol:
                raise ChannelValidationError(f"projectors {j} and {i} are not orthogonal")
    if complete and np.linalg.norm(sum(ps) - np.eye(d)) > tol:
        raise ChannelValidationError("projector set is not complete")
    return ps


def pinching(projectors, tol: float = 1e-9) -> QuantumChannel:
    """``X -> sum_k P_k X P_k`` for a complete orthogonal projector set."""
    return QuantumChannel(validate_projectors(projectors, complete=True, tol=tol))


def choi_distance(a: QuantumChannel, b: QuantumChannel) -> float:
    """Trace distance between the normalized Choi states of two maps (range [0, 1] for channels)."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise DimensionError("channels act between different spaces")
    return 0.5 * trace_norm(a.choi - b.choi) / a.dim_in


def is_cptp(ch: QuantumChannel, tol: float = 1e-8) -> bool:
    j = ch.choi
    psd = np.linalg.eigvalsh(hermitian_part(j)).min() >= -tol
    tr = partial_trace(j, [ch.dim_out, ch.dim_in], keep=[1])
    return bool(psd and np.linalg.norm(tr - np.eye(ch.dim_in)) <= tol)


def local(ch: QuantumChannel, dims: Sequence[int], on: int) -> QuantumChannel:
    """Extend ``ch`` acting on factor ``on`` by identities on the other factors."""
    left = int(np.prod(dims[:on]))
    right = int(np.prod(dims[on + 1:]))
    ks = [tensor_product(np.eye(left), k, np.eye(right)) for k in ch.kraus]
    return QuantumChannel(ks, trace_preserving=ch.trace_preserving, validate=False)
