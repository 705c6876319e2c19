"""Tomography engine: T-operators, sampling kernels and quadrature assembly.

The reconstruction sums measured count probabilities against kernel
operators K(n, alpha) = prefactor * base^n * T(-alpha/Delta, -s); with unit
efficiency and no squeezing this is the plain s-ordered sampling formula,
and the efficiency / squeeze variants only change (prefactor, base) and the
T argument scale.
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import (
    ConvergenceError,
    DensityMatrix,
    ValidationError,
    displacement_operator,
)
from .measurement import MeasurementTable


def admissible_s_range(eta, delta):
    """Interval of ordering parameters with a bounded kernel, or None.

    Returns (low, high) for the half-open interval (low, high]; low is always
    -1.  Empty (None) when the efficiency is too low for the given squeeze
    scale, i.e. when (1 - eta) / (eta delta^2) >= 1.
    """
    if not 0 < eta <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    if delta < 1:
        raise ValidationError("delta must be >= 1")
    high = -(1.0 - eta) / (eta * delta**2)
    if high <= -1.0:
        return None
    return (-1.0, high)


def effective_efficiency(eta, delta) -> float:
    """Squeeze-boosted efficiency delta^2 / [delta^2 + (1 - eta)/eta]."""
    if not 0 < eta <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    if delta < 1:
        raise ValidationError("delta must be >= 1")
    d2 = delta * delta
    return d2 / (d2 + (1.0 - eta) / eta)


@dataclass(frozen=True)
class KernelParams:
    """Ordering parameter, detector efficiency and squeeze scale of a kernel."""

    s: float
    eta: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValidationError("eta must lie in (0, 1]")
        if self.delta < 1:
            raise ValidationError("delta must be >= 1")

    @property
    def base(self) -> float:
        """Per-photon kernel weight (eta s d^2 - eta + 2)/(eta s d^2 - eta)."""
        x = self.eta * self.s * self.delta**2 - self.eta
        return (x + 2.0) / x

    @property
    def prefactor(self) -> float:
        return 2.0 / (1.0 - self.s * self.delta**2)

    def require_admissible(self):
        interval = admissible_s_range(self.eta, self.delta)
        if interval is None:
            need = (1.0 - self.eta) / self.eta
            raise ValidationError(
                f"no admissible s for eta={self.eta}, delta^2={self.delta**2:.4g}; "
                f"requires delta^2 >= {need:.4g}"
            )
        low, high = interval
        if not low < self.s <= high + 1e-12:
            raise ValidationError(
                f"s={self.s} outside admissible interval ({low}, {high:.6g}]"
            )
        if abs(abs(self.base) - 1.0) < 1e-12:
            warnings.warn(
                "s at the admissibility boundary: photon sum does not decay",
                RuntimeWarning,
            )

    @staticmethod
    def auto_s(eta, delta) -> float:
        """Midpoint of the admissible interval (the default policy)."""
        interval = admissible_s_range(eta, delta)
        if interval is None:
            need = (1.0 - eta) / eta
            raise ValidationError(
                f"no admissible s for eta={eta}, delta^2={delta**2:.4g}; "
                f"requires delta^2 >= {need:.4g}"
            )
        return 0.5 * (interval[0] + interval[1])


def _coherent_projector(alpha, dim):
    col = displacement_operator(alpha, dim)[:, 0]
    return np.outer(col, col.conj())


def t_operator(alpha, s, dim) -> np.ndarray:
    """Matrix of T(alpha, s) = 2/(1-s) D(alpha) ((s+1)/(s-1))^n D(alpha)^dag.

    Elements come from the associated-Laguerre closed form

        <m+d| T |m> = 2/(1-s) tau^m sqrt(m!/(m+d)!) (2 alpha/(1-s))^d
                      exp(-2|alpha|^2/(1-s)) L_m^(d)(4|alpha|^2/(1-s^2))

    with tau = (s+1)/(s-1), the upper triangle by Hermitian conjugation.
    The naive photon-sum construction over displacement elements is an
    alternating series whose terms exceed the result by tens of orders of
    magnitude whenever |tau| > 1 (every kernel evaluation does this), so the
    closed form is the only float-stable route; the sum survives in the test
    oracle at parameters where it is benign.
    """
    if s >= 1:
        raise ValidationError("t_operator needs s < 1")
    if s == -1.0:
        # tau = 0 kills every n > 0 term: exact coherent-state projector.
        return _coherent_projector(alpha, dim)
    tau = (s + 1.0) / (s - 1.0)
    x = abs(alpha) ** 2
    z = 4.0 * x / (1.0 - s * s)
    phi = cmath.phase(alpha) if alpha != 0 else 0.0
    lg = _gammaln_cache(dim)
    m_all = np.arange(dim)
    log_tau = math.log(abs(tau))
    sign_tau = np.sign(tau) ** m_all
    out = np.zeros((dim, dim), dtype=complex)
    log_side = math.log(2.0 * abs(alpha) / (1.0 - s)) if alpha != 0 else -math.inf
    for d in range(dim):
        if d > 0 and alpha == 0:
            break
        k = dim - d
        lag = np.empty(k)
        lag[0] = 1.0
        if k > 1:
            lag[1] = 1.0 + d - z
        for j in range(1, k - 1):
            lag[j + 1] = ((2 * j + 1 + d - z) * lag[j] - (j + d) * lag[j - 1]) / (j + 1)
        m = np.arange(k)
        logmag = (
            m * log_tau
            + 0.5 * (lg[m] - lg[m + d])
            + (d * log_side if d else 0.0)
            - 2.0 * x / (1.0 - s)
        )
        vals = (2.0 / (1.0 - s)) * sign_tau[:k] * np.exp(logmag) * lag
        lower = vals * cmath.exp(1j * d * phi)
        out[m + d, m] = lower
        if d > 0:
            out[m, m + d] = lower.conj()
    return out


_GAMMALN = {}


def _gammaln_cache(dim):
    if dim not in _GAMMALN:
        _GAMMALN[dim] = gammaln(np.arange(dim + 1) + 1.0)
    return _GAMMALN[dim]


def kernel(n, alpha, params: KernelParams, dim) -> np.ndarray:
    """Sampling kernel prefactor * base^n * T(-alpha/delta, -s)."""
    if n < 0:
        raise ValidationError("photon number must be >= 0")
    params.require_admissible()
    t_mat = t_operator(-alpha / params.delta, -params.s, dim)
    return params.prefactor * params.base**n * t_mat


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Polar quadrature for integrals d^2 alpha / pi over a disk."""

    nodes: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    radial_weights: np.ndarray
    thetas: np.ndarray
    r_max: float
    n_r: int
    n_theta: int

    def meta(self) -> dict:
        return {"r_max": self.r_max, "n_r": self.n_r, "n_theta": self.n_theta}


def make_grid(r_max, n_r, n_theta) -> PhaseSpaceGrid:
    """Gauss-Legendre radii on [0, r_max] crossed with uniform angles.

    Weights satisfy sum_j w_j f(alpha_j) ~ integral d^2alpha/pi f(alpha); in
    particular sum w_j = r_max^2 exactly up to quadrature roundoff.
    """
    if n_r < 2 or n_theta < 4:
        raise ValidationError("grid needs n_r >= 2 and n_theta >= 4")
    x, w = np.polynomial.legendre.leggauss(n_r)
    radii = 0.5 * r_max * (x + 1.0)
    radial_w = 0.5 * r_max * w
    thetas = 2.0 * math.pi * np.arange(n_theta) / n_theta
    dtheta = 2.0 * math.pi / n_theta
    nodes = (radii[:, None] * np.exp(1j * thetas)[None, :]).ravel()
    weights = (radii * radial_w)[:, None].repeat(n_theta, axis=1) * (dtheta / math.pi)
    return PhaseSpaceGrid(
        nodes=nodes,
        weights=weights.ravel(),
        radii=radii,
        radial_weights=radial_w,
        thetas=thetas,
        r_max=float(r_max),
        n_r=int(n_r),
        n_theta=int(n_theta),
    )


@dataclass(frozen=True)
class ReconstructionReport:
    rho_hat: DensityMatrix
    raw_trace: float
    hermiticity_defect: float
    min_eigenvalue_before_clip: float
    n_truncation_error_estimate: float
    params: KernelParams
    grid_meta: dict

    def to_json_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat.to_json_dict(),
            "raw_trace": self.raw_trace,
            "hermiticity_defect": self.hermiticity_defect,
            "min_eig_before_clip": self.min_eigenvalue_before_clip,
            "n_trunc_err": self.n_truncation_error_estimate,
            "params": {"s": self.params.s, "eta": self.params.eta, "delta": self.params.delta},
            "grid": self.grid_meta,
        }

    @classmethod
    def from_json_dict(cls, obj) -> "ReconstructionReport":
        params = KernelParams(**obj["params"])
        return cls(
            rho_hat=DensityMatrix.from_json_dict(obj["rho_hat"]),
            raw_trace=obj["raw_trace"],
            hermiticity_defect=obj["hermiticity_defect"],
            min_eigenvalue_before_clip=obj["min_eig_before_clip"],
            n_truncation_error_estimate=obj["n_trunc_err"],
            params=params,
            grid_meta=obj["grid"],
        )


def _repair(raw) -> tuple[DensityMatrix, float, float, float]:
    raw_trace = float(raw.trace().real)
    defect = float(np.max(np.abs(raw - raw.conj().T)))
    herm = 0.5 * (raw + raw.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    min_eig = float(vals[0])
    clipped = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    tr = clipped.trace().real
    if tr <= 0:
        raise ConvergenceError("reconstruction collapsed to zero trace")
    rho_hat = DensityMatrix(0.5 * (clipped / tr + (clipped / tr).conj().T))
    return rho_hat, raw_trace, defect, min_eig


def reconstruct(table: MeasurementTable, params: KernelParams, grid: PhaseSpaceGrid, dim) -> ReconstructionReport:
    """Assemble rho_hat = sum_j w_j sum_n P(n, alpha_j) K(n, alpha_j).

    Kernels are evaluated once per radius: T(R e^{i theta}) differs from
    T(R) only by conjugation with diag(e^{i m theta}), so angular sums reduce
    to per-diagonal phase sums.  The returned matrix is symmetrized,
    eigenvalue-clipped at zero and renormalized, with all pre-repair defects
    recorded in the report.
    """
    params.require_admissible()
    if abs(table.eta - params.eta) > 1e-12:
        raise ValidationError("table efficiency does not match kernel params")
    table_delta = table.squeeze.delta if table.squeeze else 1.0
    if abs(table_delta - params.delta) > 1e-9:
        raise ValidationError("table squeeze scale does not match kernel params")
    expected = (grid.radii[:, None] * np.exp(1j * grid.thetas)[None, :]).ravel()
    if table.alphas.shape != expected.shape or np.max(np.abs(table.alphas - expected)) > 1e-9:
        raise ValidationError("table amplitudes do not match the quadrature grid")

    base = params.base
    if abs(base) >= 1 - 1e-12 and table.n_max > 8:
        warnings.warn(
            "|base| ~ 1 with large n_max: photon sum converges slowly",
            RuntimeWarning,
        )
    powers = base ** np.arange(table.n_max + 1)
    coeff = params.prefactor * (table.probs @ powers)
    coeff = coeff.reshape(grid.n_r, grid.n_theta)
    w = grid.weights.reshape(grid.n_r, grid.n_theta)

    diag_idx = np.arange(dim)[:, None] - np.arange(dim)[None, :]
    phase = np.exp(1j * np.outer(np.arange(-(dim - 1), dim), grid.thetas))
    raw = np.zeros((dim, dim), dtype=complex)
    t_norm = 0.0
    for i, radius in enumerate(grid.radii):
        t_mat = t_operator(-radius / params.delta, -params.s, dim)
        t_norm = max(t_norm, float(np.max(np.abs(t_mat))))
        g = phase @ (w[i] * coeff[i])
        raw += t_mat * g[diag_idx + dim - 1]

    if abs(base) < 1:
        tail = abs(base) ** (table.n_max + 1) / (1.0 - abs(base))
    else:
        tail = math.inf
    n_trunc = abs(params.prefactor) * tail * float(np.max(table.probs)) * t_norm * (grid.r_max**2)

    rho_hat, raw_trace, defect, min_eig = _repair(raw)
    return ReconstructionReport(
        rho_hat=rho_hat,
        raw_trace=raw_trace,
        hermiticity_defect=defect,
        min_eigenvalue_before_clip=min_eig,
        n_truncation_error_estimate=n_trunc,
        params=params,
        grid_meta=grid.meta(),
    )


def q_from_zero_counts(table: MeasurementTable):
    """Zero-count probabilities read as a Q-type distribution over the grid.

    Valid at eta = 1 (where P(0, alpha) = <-alpha| rho |-alpha> under this
    displacement convention) or for squeezed tables, where the shortcut
    ordering s = (1 - 2/eta)/delta^2 stays admissible.  Returns the node
    values plus the implied shortcut ordering parameter.
    """
    if table.eta < 1.0 and table.squeeze is None:
        raise ValidationError(
            "zero-count shortcut needs eta = 1 without squeezing: "
            "s = 1 - 2/eta falls below -1 (forbidden ordering)"
        )
    delta = table.squeeze.delta if table.squeeze else 1.0
    s_shortcut = (1.0 - 2.0 / table.eta) / delta**2
    if s_shortcut <= -1.0 - 1e-12:
        raise ValidationError(
            f"shortcut ordering s = {s_shortcut:.4g} is forbidden (< -1); "
            "increase the squeeze scale"
        )
    return table.probs[:, 0].copy(), s_shortcut
