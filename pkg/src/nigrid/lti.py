"""Rational transfer functions, block-diagonal transfer matrices and state-space models.

Polynomial coefficients are stored in ascending powers of ``s``:
``(a0, a1, a2)`` means ``a0 + a1*s + a2*s**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg


class PoleEvaluationError(ZeroDivisionError):
    """Raised when a transfer function is evaluated at one of its poles."""


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


def _horner(coeffs, s):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


@dataclass(frozen=True)
class RationalTF:
    """Proper SISO transfer function ``num(s) / den(s)`` with a monic denominator."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num, den = _trim(self.num), _trim(self.den)
        if den == (0.0,):
            raise ValueError("denominator is identically zero")
        if len(num) > len(den):
            raise ValueError("transfer function is improper")
        lead = den[-1]
        object.__setattr__(self, "num", tuple(c / lead for c in num))
        object.__setattr__(self, "den", tuple(c / lead for c in den))

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def strictly_proper(self) -> bool:
        return self.num == (0.0,) or len(self.num) < len(self.den)

    def __call__(self, s):
        return eval_at(self, s)

    def response(self, s) -> np.ndarray:
        """Vectorised evaluation on an array of complex points (no pole check)."""
        s = np.asarray(s, dtype=complex)
        return _horner(self.num, s) / _horner(self.den, s)

    def dc_gain(self) -> float:
        return float(eval_at(self, 0.0).real)

    def at_infinity(self) -> float:
        return self.num[-1] if len(self.num) == len(self.den) else 0.0

    def poles(self) -> list[complex]:
        return poles(self)

    def __repr__(self):
        return f"RationalTF(num={self.num}, den={self.den})"


def eval_at(tf: RationalTF, s) -> complex:
    s = complex(s)
    den = _horner(tf.den, s)
    # backward-error style test: |den(s)| small relative to sum |a_k||s|^k
    scale = _horner([abs(c) for c in tf.den], abs(s))
    if abs(den) <= 64 * np.finfo(float).eps * scale:
        raise PoleEvaluationError(f"s={s} is a pole of {tf}")
    return _horner(tf.num, s) / den


def _quadratic_roots(c0: float, c1: float) -> list[complex]:
    # roots of s^2 + c1 s + c0
    disc = c1 * c1 - 4.0 * c0
    if disc >= 0:
        if disc == 0:
            return [complex(-c1 / 2)] * 2
        q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
        r1 = q
        r2 = c0 / q if q != 0 else -c1 - q
        return sorted([complex(r1), complex(r2)], key=lambda z: z.real)
    im = math.sqrt(-disc) / 2
    return [complex(-c1 / 2, -im), complex(-c1 / 2, im)]


def companion_matrix(den: Sequence[float]) -> np.ndarray:
    """Frobenius companion matrix of a monic polynomial given in ascending order."""
    d = len(den) - 1
    C = np.zeros((d, d))
    C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -np.asarray(den[:-1], dtype=float)
    return C


def poles(tf: RationalTF) -> list[complex]:
    """Roots of the denominator, with multiplicity."""
    den = tf.den
    d = len(den) - 1
    if d == 0:
        return []
    if d == 1:
        return [complex(-den[0])]
    if d == 2:
        return _quadratic_roots(den[0], den[1])
    return [complex(z) for z in np.linalg.eigvals(companion_matrix(den))]


def bus_plant_tf(bus, strict: bool = True) -> RationalTF:
    """``1 / (M s^2 + D s + K)`` from the bus constants.

    With ``strict=False`` non-positive damping or stiffness are accepted so
    the resulting (non-SNI) plant can be classified rather than rejected.
    """
    m, d, k = bus.m_inertia, bus.d_damping, bus.k_stiffness
    if strict and not (m > 0 and d > 0 and k > 0):
        raise ValueError(f"bus {bus.id}: M, D and K must all be positive (got {m}, {d}, {k})")
    return RationalTF((1.0,), (k, d, m))


def first_order_lag(gain: float, tau: float) -> RationalTF:
    return RationalTF((gain,), (1.0, tau))


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A, B, C, D = (np.atleast_2d(np.asarray(x, dtype=float)) for x in
                      (self.A, self.B, self.C, self.D))
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n or D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(f"incompatible shapes A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        for name, arr in zip("ABCD", (A, B, C, D)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def eval_at(self, s) -> np.ndarray:
        n = self.n_states
        return self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B) + self.D

    def dc_gain(self) -> np.ndarray:
        return self.C @ np.linalg.solve(-self.A, self.B) + self.D


def realize_first_order(tf: RationalTF) -> StateSpaceModel:
    """Realise ``k / (tau s + 1)`` as ``A=-1/tau, B=1/tau, C=k, D=0``."""
    if tf.order != 1 or len(tf.num) != 1:
        raise ValueError(f"expected k/(tau s + 1), got {tf}")
    # monic form is (k/tau) / (s + 1/tau)
    pole = tf.den[0]
    if pole <= 0:
        raise ValueError(f"time constant must be positive, got {tf}")
    tau = 1.0 / pole
    k = tf.num[0] * tau
    return StateSpaceModel([[-1.0 / tau]], [[1.0 / tau]], [[k]], [[0.0]])


def bus_plant_ss(bus) -> StateSpaceModel:
    """Per-bus model with state ``[angle deviation rate, angle deviation]`` and angle output."""
    m, d, k = bus.m_inertia, bus.d_damping, bus.k_stiffness
    return StateSpaceModel([[-d / m, -k / m], [1.0, 0.0]], [[1.0 / m], [0.0]], [[0.0, 1.0]], [[0.0]])


@dataclass(frozen=True, eq=False)
class TFMatrix:
    """Square block-diagonal transfer matrix ``diag(blocks)``."""

    blocks: tuple[RationalTF, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("a transfer matrix needs at least one block")

    @property
    def size(self) -> int:
        return len(self.blocks)

    def eval_at(self, s) -> np.ndarray:
        return np.diag([eval_at(b, s) for b in self.blocks])

    def response(self, s) -> np.ndarray:
        """Stack of responses with shape ``(len(s), size, size)``."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        g = np.stack([b.response(s) for b in self.blocks], axis=-1)
        out = np.zeros(s.shape + (self.size, self.size), dtype=complex)
        idx = np.arange(self.size)
        out[..., idx, idx] = g
        return out

    def dc_gain(self) -> np.ndarray:
        return np.diag([b.dc_gain() for b in self.blocks])

    def at_infinity(self) -> np.ndarray:
        return np.diag([b.at_infinity() for b in self.blocks])

    def poles(self) -> list[complex]:
        return [p for b in self.blocks for p in b.poles()]

    def congruence(self, Q) -> "CongruentTF":
        return CongruentTF(self, np.asarray(Q, dtype=float))


@dataclass(frozen=True, eq=False)
class CongruentTF:
    """``Q^T G(s) Q`` for a block-diagonal ``G``; evaluated frequency-wise."""

    inner: TFMatrix
    Q: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.Q.shape[0] != self.inner.size:
            raise ValueError(f"Q has {self.Q.shape[0]} rows, G has size {self.inner.size}")

    @property
    def size(self) -> int:
        return self.Q.shape[1]

    def _wrap(self, G):
        return self.Q.T @ G @ self.Q

    def eval_at(self, s) -> np.ndarray:
        return self._wrap(self.inner.eval_at(s))

    def response(self, s) -> np.ndarray:
        return self._wrap(self.inner.response(s))

    def dc_gain(self) -> np.ndarray:
        return self._wrap(self.inner.dc_gain())

    def at_infinity(self) -> np.ndarray:
        return self._wrap(self.inner.at_infinity())

    def poles(self) -> list[complex]:
        return self.inner.poles()


def block_diag(systems):
    """Direct sum of state-space models, or a :class:`TFMatrix` from transfer functions."""
    systems = list(systems)
    if not systems:
        raise ValueError("block_diag needs at least one system")
    if all(isinstance(s, RationalTF) for s in systems):
        return TFMatrix(tuple(systems))
    if all(isinstance(s, StateSpaceModel) for s in systems):
        return StateSpaceModel(*(scipy.linalg.block_diag(*(getattr(s, name) for s in systems))
                                 for name in "ABCD"))
    raise TypeError("block_diag expects only RationalTF or only StateSpaceModel items")


def positive_feedback_matrix(plant: StateSpaceModel, controller: StateSpaceModel, Q) -> np.ndarray:
    """State matrix of ``u = Q K(s) Q^T y`` closed around a strictly proper plant.

    State ordering is ``[plant states, controller states]``.
    """
    Q = np.asarray(Q, dtype=float)
    if plant.D.any():
        raise ValueError("plant must be strictly proper")
    if Q.shape != (plant.B.shape[1], controller.B.shape[1]) or controller.C.shape[0] != Q.shape[1]:
        raise ValueError(f"dimension mismatch: plant inputs {plant.B.shape[1]}, "
                         f"Q {Q.shape}, controller {controller.C.shape[0]}x{controller.B.shape[1]}")
    A, B, C = plant.A, plant.B, plant.C
    top_left = A + B @ Q @ controller.D @ Q.T @ C
    return np.block([[top_left, B @ Q @ controller.C],
                     [controller.B @ Q.T @ C, controller.A]])
