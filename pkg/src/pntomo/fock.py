"""Truncated Fock-space states, operators and comparison metrics.

Everything works with dense complex matrices over the photon-number basis
|0>, ..., |dim-1>.  Operators built here are dimensionless; the Fock cutoff
``dim`` is always explicit.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
LEAKAGE_TOL = 1e-6


class ValidationError(ValueError):
    """A constructed object violates its contract (dims, hermiticity, psd...)."""


class TruncationError(ValidationError):
    """The requested cutoff is too small for the requested object."""


class ConvergenceError(RuntimeError):
    """An internal series did not converge within the allowed cutoff."""


@dataclass(frozen=True)
class SqueezeSpec:
    """Squeeze parameter zeta = magnitude * exp(i * phase)."""

    magnitude: float
    phase: float = 0.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValidationError("squeeze magnitude must be >= 0")

    @property
    def zeta(self) -> complex:
        return self.magnitude * cmath.exp(1j * self.phase)

    @property
    def delta(self) -> float:
        """Scale factor exp(|zeta|) >= 1."""
        return math.exp(self.magnitude)


@dataclass(frozen=True)
class StateSpec:
    """Test-state factory input.

    kind is one of "fock", "coherent", "thermal", "cat", "squeezed_vacuum";
    the relevant parameter fields are read per kind, the rest ignored.
    """

    kind: str
    n: int = 0
    beta: complex = 0.0
    nbar: float = 0.0
    parity_phase: float = 0.0
    squeeze: SqueezeSpec | None = None

    KINDS = ("fock", "coherent", "thermal", "cat", "squeezed_vacuum")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown state kind {self.kind!r}")
        if self.kind == "fock" and self.n < 0:
            raise ValidationError("fock n must be >= 0")
        if self.kind == "thermal" and self.nbar < 0:
            raise ValidationError("thermal nbar must be >= 0")
        if self.kind == "cat" and not 0 <= self.parity_phase < 2 * math.pi:
            raise ValidationError("cat parity phase must lie in [0, 2pi)")
        if self.kind == "squeezed_vacuum" and self.squeeze is None:
            raise ValidationError("squeezed_vacuum needs a SqueezeSpec")


@dataclass(frozen=True)
class DensityMatrix:
    """Validated dim x dim density matrix.

    ``leakage`` records the truncation mass lost by the constructor before
    renormalization (0 for exact finite-support states).
    """

    mat: np.ndarray
    leakage: float = 0.0

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def validated(cls, mat, leakage=0.0, psd_tol=PSD_TOL):
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValidationError("density matrix must be square and non-empty")
        defect = np.max(np.abs(mat - mat.conj().T))
        if defect > HERMITICITY_TOL:
            raise ValidationError(f"non-Hermitian input (defect {defect:.3e})")
        tr = mat.trace().real
        if not (1.0 - max(leakage, LEAKAGE_TOL) <= tr <= 1.0 + 1e-12):
            raise ValidationError(f"trace {tr} outside [1 - leakage, 1]")
        mat = 0.5 * (mat + mat.conj().T)
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < -psd_tol:
            raise ValidationError(f"negative eigenvalue {min_eig:.3e}")
        return cls(mat, float(leakage))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.mat.real.tolist(),
            "im": self.mat.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj) -> "DensityMatrix":
        dim = int(obj["dim"])
        mat = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if mat.shape != (dim, dim):
            raise ValidationError("serialized matrix shape does not match dim")
        return cls.validated(mat, leakage=LEAKAGE_TOL)


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ValidationError(f"invalid dimension {dim!r}")


def annihilation_operator(dim) -> np.ndarray:
    """Matrix of a with <m|a|n> = sqrt(n) delta_{m,n-1}."""
    _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_operator(dim) -> np.ndarray:
    _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def displacement_operator(alpha, dim) -> np.ndarray:
    """Displacement matrix <m|D(alpha)|n> from the associated-Laguerre closed form.

    Elements are exact (no truncation error); a three-term recurrence in the
    Laguerre degree runs along each diagonal, with log-scaled factorial
    prefactors so the construction stays finite up to dim of a few hundred.
    """
    _check_dim(dim)
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(dim, dtype=complex)
    x = abs(alpha) ** 2
    phi = cmath.phase(alpha)
    lg = gammaln(np.arange(dim + 1) + 1.0)
    out = np.zeros((dim, dim), dtype=complex)
    for d in range(dim):
        k = dim - d
        lag = np.empty(k)
        lag[0] = 1.0
        if k > 1:
            lag[1] = 1.0 + d - x
        for j in range(1, k - 1):
            lag[j + 1] = ((2 * j + 1 + d - x) * lag[j] - (j + d) * lag[j - 1]) / (j + 1)
        n = np.arange(k)
        mag = np.exp(0.5 * (lg[n] - lg[n + d]) + d * 0.5 * math.log(x) - 0.5 * x) if d else np.exp(-0.5 * x)
        if d == 0:
            out[n, n] = mag * lag
        else:
            out[n + d, n] = mag * cmath.exp(1j * d * phi) * lag
            out[n, n + d] = mag * (-cmath.exp(-1j * phi)) ** d * lag
    return out


def displacement_pad(alpha, dim=0) -> int:
    """Construction pad needed so displaced products stay accurate on a dim block.

    Matrix elements <m|D(alpha)|n> only fall off once |m - n| clears the
    classical spread ~ 2|alpha| sqrt(n), hence the sqrt(dim) scaling
    (calibrated to ~1e-12 block accuracy for |alpha| <= 2, dim <= 60).
    """
    return max(16, math.ceil(6 * abs(alpha) * math.sqrt(dim + 1)) + 16)


def squeeze_pad(spec: SqueezeSpec, dim=0) -> int:
    """Extra cutoff needed so a squeeze product is accurate on a dim block.

    Pair creation couples |n> to every |n + 2k>, and the two-photon ladder
    only decays like tanh^k |zeta|, so the construction space must scale like
    dim * e^{2|zeta|} plus a fixed slack (calibrated against high-cutoff
    references to give ~1e-10 block accuracy for |zeta| <= 1).
    """
    grown = math.ceil((dim + 20) * math.exp(2 * spec.magnitude)) + 40
    return max(16, grown - dim)


def squeeze_operator(spec: SqueezeSpec, dim) -> np.ndarray:
    """Squeeze matrix S(zeta) = exp[(zeta* a^2 - zeta a^dag^2)/2], truncated.

    Built at a padded cutoff and cut back to dim x dim, so the leading block
    is accurate; the convention fixes S^dag a S = a cosh|z| - a^dag e^{i phase} sinh|z|.
    """
    _check_dim(dim)
    if dim < 2 and spec.magnitude > 0:
        raise ValidationError("squeeze_operator needs dim >= 2")
    if spec.magnitude == 0:
        return np.eye(dim, dtype=complex)
    if math.exp(2 * spec.magnitude) > dim:
        warnings.warn("squeeze cutoff is severely truncated for this |zeta|", RuntimeWarning)
    npad = dim + squeeze_pad(spec, dim)
    a = annihilation_operator(npad)
    z = spec.zeta
    gen = 0.5 * (np.conj(z) * (a @ a) - z * (a.conj().T @ a.conj().T))
    return expm(gen)[:dim, :dim]


def coherent_vector(beta, dim) -> np.ndarray:
    """Amplitudes <n|beta> = exp(-|beta|^2/2) beta^n / sqrt(n!)."""
    beta = complex(beta)
    n = np.arange(dim)
    if beta == 0:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    logmag = -0.5 * abs(beta) ** 2 + n * math.log(abs(beta)) - 0.5 * gammaln(n + 1.0)
    return np.exp(logmag) * np.exp(1j * n * cmath.phase(beta))


def _required_dim(mean, spread) -> int:
    return int(math.ceil(mean + 12 * math.sqrt(spread + 1) + 10))


def build_state(spec: StateSpec, dim) -> DensityMatrix:
    """Density matrix of the requested test state at cutoff dim.

    Raises TruncationError (with a usable-dim hint) when more than
    LEAKAGE_TOL of the state mass falls beyond the cutoff.
    """
    _check_dim(dim)
    if spec.kind == "fock":
        if spec.n >= dim:
            raise TruncationError(f"fock({spec.n}) needs dim >= {spec.n + 1}")
        mat = np.zeros((dim, dim), dtype=complex)
        mat[spec.n, spec.n] = 1.0
        return DensityMatrix.validated(mat)
    if spec.kind == "coherent":
        vec = coherent_vector(spec.beta, dim)
        leak = 1.0 - float(np.vdot(vec, vec).real)
        if leak > LEAKAGE_TOL:
            need = _required_dim(abs(spec.beta) ** 2, abs(spec.beta) ** 2)
            raise TruncationError(f"coherent leakage {leak:.2e}; use dim >= {need}")
        vec = vec / np.linalg.norm(vec)
        return DensityMatrix.validated(np.outer(vec, vec.conj()), leakage=leak)
    if spec.kind == "thermal":
        nbar = spec.nbar
        if nbar == 0:
            return build_state(StateSpec("fock", n=0), dim)
        p = nbar ** np.arange(dim) / (1.0 + nbar) ** (np.arange(dim) + 1.0)
        leak = 1.0 - float(p.sum())
        if leak > LEAKAGE_TOL:
            need = _required_dim(nbar, nbar * (nbar + 1))
            raise TruncationError(f"thermal leakage {leak:.2e}; use dim >= {need}")
        return DensityMatrix.validated(np.diag(p / p.sum()).astype(complex), leakage=leak)
    if spec.kind == "cat":
        plus = coherent_vector(spec.beta, dim)
        minus = coherent_vector(-spec.beta, dim)
        leak = 1.0 - float(np.vdot(plus, plus).real)
        if leak > LEAKAGE_TOL:
            need = _required_dim(abs(spec.beta) ** 2, abs(spec.beta) ** 2)
            raise TruncationError(f"cat leakage {leak:.2e}; use dim >= {need}")
        vec = plus + cmath.exp(1j * spec.parity_phase) * minus
        vec = vec / np.linalg.norm(vec)
        return DensityMatrix.validated(np.outer(vec, vec.conj()), leakage=leak)
    # squeezed_vacuum
    sq = spec.squeeze
    vec = squeeze_operator(sq, dim)[:, 0]
    leak = 1.0 - float(np.vdot(vec, vec).real)
    if leak > LEAKAGE_TOL:
        mean = math.sinh(sq.magnitude) ** 2
        need = _required_dim(mean, 2 * mean * (mean + 1))
        raise TruncationError(f"squeezed vacuum leakage {leak:.2e}; use dim >= {need}")
    vec = vec / np.linalg.norm(vec)
    return DensityMatrix.validated(np.outer(vec, vec.conj()), leakage=leak)


def _psd_sqrt(mat):
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise ValidationError("fidelity needs equal dims")
    root = _psd_sqrt(rho.mat)
    inner = root @ sigma.mat @ root
    vals = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    f = float(np.sqrt(vals).sum() ** 2)
    return min(f, 1.0)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) ||rho - sigma||_1 for Hermitian inputs."""
    if rho.dim != sigma.dim:
        raise ValidationError("trace_distance needs equal dims")
    diff = rho.mat - sigma.mat
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())
