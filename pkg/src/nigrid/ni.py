"""Negative-imaginary classification and internal-stability certificates.

The "for all frequencies" quantifier of the NI/SNI definitions is replaced
by a finite logarithmic grid plus the point ``alpha = 0``.  This is a
numerical surrogate, not a proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Topology, laplacian_max_eigenvalue
from .lti import PoleEvaluationError, StateSpaceModel, TFMatrix, positive_feedback_matrix

PSD_TOL = 1e-9
POLE_TOL = 1e-9
CERT_TOL = 1e-9
INFINITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    points: np.ndarray  # rad/s, strictly increasing, > 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("frequency grid must be a nonempty 1-D array")
        if not (np.all(pts > 0) and np.all(np.diff(pts) > 0)):
            raise ValueError("frequency grid must be positive and strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def logspace(cls, lo: float = 1e-3, hi: float = 1e3, num: int = 2000) -> "FrequencyGrid":
        return cls(np.logspace(np.log10(lo), np.log10(hi), num))


DEFAULT_GRID = FrequencyGrid.logspace()


@dataclass(frozen=True)
class NIVerdict:
    is_ni: bool
    is_sni: bool
    pole_check: bool
    worst_frequency: float
    worst_eigenvalue: float
    worst_relative_margin: float = float("nan")

    def to_dict(self):
        return {k: (v if not isinstance(v, np.generic) else v.item()) for k, v in self.__dict__.items()}


def _hermitian_part(M):
    H = 1j * (M - np.conj(np.swapaxes(M, -1, -2)))
    return 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))


def ni_defect(tfm, alpha: float) -> np.ndarray:
    """``j [M(j alpha) - M(j alpha)^*]``, symmetrised to be exactly Hermitian."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return _hermitian_part(np.atleast_2d(tfm.eval_at(1j * alpha)))


def _defect_sweep(tfm, alphas: np.ndarray):
    """Minimum defect eigenvalue and response norm at each frequency."""
    with np.errstate(divide="ignore", invalid="ignore"):
        M = tfm.response(1j * alphas)
    if not np.all(np.isfinite(M)):
        bad = alphas[~np.isfinite(M).all(axis=(-1, -2))][0]
        raise PoleEvaluationError(f"pole on the imaginary axis at alpha={bad}")
    lam_min = np.linalg.eigvalsh(_hermitian_part(M))[..., 0]
    scale = np.linalg.norm(M, ord=2, axis=(-2, -1))
    return lam_min, scale


def classify_ni(tfm, grid: FrequencyGrid | None = None, tol: float = PSD_TOL,
                tol_pole: float = POLE_TOL) -> NIVerdict:
    """Check the NI and SNI conditions on a frequency grid.

    NI requires the defect's smallest eigenvalue to be ``>= -tol`` at
    ``alpha = 0`` and on the grid.  SNI requires it to be ``> tol`` times the
    spectral norm of ``M(j alpha)`` at every grid point, so plants whose
    response rolls off like ``1/alpha^2`` are not rejected for being small.
    """
    grid = grid or DEFAULT_GRID
    pole_check = all(p.real < -tol_pole for p in tfm.poles())
    alphas = np.concatenate([[0.0], grid.points])
    try:
        lam, scale = _defect_sweep(tfm, alphas)
    except PoleEvaluationError:
        if pole_check:
            raise
        return NIVerdict(False, False, False, float("nan"), float("nan"))
    k = int(np.argmin(lam))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale[1:] > 0, lam[1:] / scale[1:], -np.inf)
    is_ni = pole_check and bool(np.all(lam >= -tol))
    is_sni = pole_check and bool(np.all(rel > tol))
    return NIVerdict(is_ni, is_sni and is_ni, pole_check, float(alphas[k]), float(lam[k]),
                     float(np.min(rel)))


@dataclass(frozen=True)
class DCGainCheck:
    holds: bool
    difference: np.ndarray = field(repr=False)
    min_eigenvalue: float


def dc_gain_lemma_check(tfm, tol: float = PSD_TOL) -> DCGainCheck:
    """``M(0) - M(inf)`` and whether it is positive semidefinite."""
    diff = np.real(np.asarray(tfm.dc_gain()) - np.asarray(tfm.at_infinity()))
    lam = float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])
    return DCGainCheck(lam >= -tol, diff, lam)


def lambda_max(X) -> float:
    """Largest real part over the spectrum of a square matrix."""
    X = np.atleast_2d(X)
    if X.size == 0:
        return 0.0
    return float(np.max(np.linalg.eigvals(X).real))


@dataclass(frozen=True)
class ProductBound:
    holds: bool
    lhs: float
    rhs: float


def eigen_product_bound(m, n, tol: float = PSD_TOL) -> ProductBound:
    """Check ``lambda_max(m n) <= lambda_max(m) lambda_max(n)``."""
    m = np.atleast_2d(np.asarray(m))
    n = np.atleast_2d(np.asarray(n))
    for name, X in (("m", m), ("n", n)):
        if not np.allclose(X, X.conj().T, atol=1e-12):
            raise ValueError(f"{name} must be Hermitian")
    lam_m = np.linalg.eigvalsh(m)
    lam_n = np.linalg.eigvalsh(n)
    if lam_m[-1] < 0:
        raise ValueError("lambda_max(m) must be >= 0")
    if lam_n[0] < -tol:
        raise ValueError("n must be positive semidefinite")
    lhs = lambda_max(m @ n)
    rhs = float(lam_m[-1] * lam_n[-1])
    return ProductBound(lhs <= rhs + tol, lhs, rhs)


@dataclass(frozen=True)
class SideConditions:
    plant_ni: bool
    controller_sni: bool
    infinity_product_zero: bool
    controller_infinity_psd: bool

    @property
    def ok(self) -> bool:
        return all(self.__dict__.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.__dict__.items() if not v]


def side_conditions(plant, controller, grid=None, tol=PSD_TOL) -> SideConditions:
    plant_v = classify_ni(plant, grid, tol)
    ctrl_v = classify_ni(controller, grid, tol)
    P_inf = np.asarray(plant.at_infinity())
    C_inf = np.asarray(controller.at_infinity())
    prod_zero = np.linalg.norm(P_inf @ C_inf, "fro") < INFINITY_TOL
    c_psd = np.linalg.eigvalsh(0.5 * (C_inf + C_inf.T))[0] >= -tol
    return SideConditions(plant_v.is_ni, ctrl_v.is_sni, bool(prod_zero), bool(c_psd))


@dataclass(frozen=True)
class StabilityCertificate:
    value: float
    eigen_test: bool
    conditions: SideConditions

    @property
    def holds(self) -> bool:
        return self.eigen_test and self.conditions.ok


def theorem1_certificate(plant, controller, grid=None, tol: float = CERT_TOL) -> StabilityCertificate:
    """DC-gain eigenvalue test for the positive-feedback loop of an NI plant and SNI controller.

    ``plant`` is the edge-level plant ``Q^T G(s) Q`` (e.g. ``G.congruence(Q)``).
    The eigenvalue test and the side conditions are reported separately.
    """
    conds = side_conditions(plant, controller, grid)
    try:
        value = lambda_max(np.real(np.asarray(plant.dc_gain()) @ np.asarray(controller.dc_gain())))
    except PoleEvaluationError:
        # pole at s = 0: no finite DC gain, so the test cannot pass
        value = float("inf")
    return StabilityCertificate(value, value < 1 - tol, conds)


@dataclass(frozen=True)
class Prop1Verdict:
    plant_dc_max: float
    controller_dc_max: float
    inverse_laplacian_max: float
    conditions: SideConditions

    @property
    def product(self) -> float:
        return self.plant_dc_max * self.controller_dc_max

    @property
    def eigen_test(self) -> bool:
        return self.product < self.inverse_laplacian_max

    @property
    def holds(self) -> bool:
        return self.eigen_test and self.conditions.ok


def prop1_sufficient(plant: TFMatrix, controller, topo: Topology, grid=None) -> Prop1Verdict:
    """Sufficient condition ``lambda_max(G(0)) lambda_max(Gc(0)) < 1/lambda_max(Q Q^T)``."""
    conds = side_conditions(plant.congruence(topo.incidence), controller, grid)
    lap = laplacian_max_eigenvalue(topo)
    inv = 1.0 / lap if lap > 0 else float("inf")
    try:
        g0 = np.real(plant.dc_gain())
        c0 = np.real(np.asarray(controller.dc_gain()))
    except PoleEvaluationError:
        return Prop1Verdict(float("inf"), float("inf"), inv, conds)
    return Prop1Verdict(float(np.linalg.eigvalsh(g0)[-1]),
                        float(np.linalg.eigvalsh(0.5 * (c0 + c0.T))[-1]), inv, conds)


@dataclass(frozen=True, eq=False)
class HurwitzVerdict:
    eigenvalues: np.ndarray
    max_real: float
    stable: bool


def closed_loop_hurwitz(plant_ss: StateSpaceModel, controller_ss: StateSpaceModel, topo,
                        tol: float = CERT_TOL) -> HurwitzVerdict:
    """Eigenvalues of the assembled closed loop ``u = Q Gc(s) Q^T y``."""
    Q = topo.incidence if isinstance(topo, Topology) else np.asarray(topo)
    A_cl = positive_feedback_matrix(plant_ss, controller_ss, Q)
    eig = np.linalg.eigvals(A_cl)
    max_re = float(np.max(eig.real))
    return HurwitzVerdict(eig, max_re, max_re < -tol)
