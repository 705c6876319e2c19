"""Forward model: displaced photon-count probabilities with loss and squeezing.

Produces the per-amplitude count probability tables that the reconstruction
consumes, plus the direct Bernoulli (binomial) smearing of detector
efficiency and its alternating-series inverse.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import (
    DensityMatrix,
    SqueezeSpec,
    ValidationError,
    displacement_operator,
    squeeze_operator,
)

TAIL_WARN = 0.01


def displaced_number_probabilities(rho: DensityMatrix, alpha, n_max) -> np.ndarray:
    """P(n) = <n| D(alpha) rho D(alpha)^dag |n> for n = 0..n_max.

    Uses exact closed-form displacement rows, so the only unreported mass is
    the tail n > n_max (1 - sum of the returned vector).
    """
    if n_max >= rho.dim:
        raise ValidationError("n_max must be < rho.dim")
    big = max(rho.dim, n_max + 1)
    d_op = displacement_operator(alpha, big)
    rows = d_op[: n_max + 1, : rho.dim]
    probs = np.einsum("nk,kl,nl->n", rows, rho.mat, rows.conj()).real
    probs = np.clip(probs, 0.0, None)
    tail = 1.0 - probs.sum()
    if tail > TAIL_WARN:
        warnings.warn(
            f"displaced-number tail mass {tail:.3f} above n_max={n_max}", RuntimeWarning
        )
    return probs


def _binomial_smearing_matrix(size, eta) -> np.ndarray:
    """Column-stochastic matrix B[m, n] = C(n, m) eta^m (1-eta)^(n-m)."""
    n = np.arange(size)
    log_c = gammaln(n[None, :] + 1) - gammaln(n[:, None] + 1) - gammaln(n[None, :] - n[:, None] + 1)
    with np.errstate(divide="ignore"):
        log_eta = n[:, None] * math.log(eta)
        log_loss = (n[None, :] - n[:, None]) * (math.log1p(-eta) if eta < 1 else 0.0)
    mat = np.exp(log_c + log_eta + log_loss)
    mat[n[:, None] > n[None, :]] = 0.0
    if eta == 1.0:
        mat = np.eye(size)
    return mat


def apply_efficiency(probs, eta) -> np.ndarray:
    """Binomial thinning of a count distribution by detector efficiency eta.

    Mass-preserving; equivalent to the normally ordered loss map evaluated in
    the Fock basis (checked against that construction in the tests).
    """
    if not 0 < eta <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    probs = np.asarray(probs, dtype=float)
    return _binomial_smearing_matrix(probs.size, eta) @ probs


def loss_map_operator_diagonal(n, eta, dim) -> np.ndarray:
    """Diagonal of the normally ordered POVM element :e^{-eta n} (eta n)^n / n!:.

    Fock-basis matrix elements of the eta-efficiency n-click POVM,
    <k| Pi_n |k> = C(k, n) eta^n (1-eta)^(k-n).  Test oracle for
    apply_efficiency; kept here so the CLI can expose it for diagnostics.
    """
    k = np.arange(dim)
    out = np.zeros(dim)
    ok = k >= n
    log_c = gammaln(k[ok] + 1) - gammaln(n + 1.0) - gammaln(k[ok] - n + 1.0)
    out[ok] = np.exp(log_c + n * math.log(eta) + (k[ok] - n) * (math.log1p(-eta) if eta < 1 else 0.0))
    if eta == 1.0:
        out = (k == n).astype(float)
    return out


@dataclass(frozen=True)
class InversionReport:
    values: np.ndarray
    amplification: float
    warning: str | None


def invert_efficiency(probs_eta, eta, n_max) -> InversionReport:
    """Alternating-series Bernoulli deconvolution of the smeared distribution.

    P(n) = eta^-n sum_k P_eta(n+k) C(n+k, n) ((1-eta)/eta)^k (-1)^k, truncated
    at the end of the input vector.  Output may go slightly negative for noisy
    input; the amplification factor quantifies the conditioning.
    """
    if not 0 < eta <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    probs_eta = np.asarray(probs_eta, dtype=float)
    if probs_eta.size < n_max + 1:
        raise ValidationError("input vector shorter than n_max + 1")
    size = probs_eta.size
    ratio = (1.0 - eta) / eta
    out = np.zeros(n_max + 1)
    amp = 0.0
    for n in range(n_max + 1):
        k = np.arange(size - n)
        log_c = gammaln(n + k + 1.0) - gammaln(n + 1.0) - gammaln(k + 1.0)
        terms = np.exp(log_c + (k * math.log(ratio) if eta < 1 else 0.0) - n * math.log(eta))
        if eta == 1.0:
            terms = np.where(k == 0, 1.0, 0.0)
        out[n] = float(np.sum(probs_eta[n:] * terms * (-1.0) ** k))
        amp = max(amp, float(np.sum(terms)))
    warning = None
    if eta <= 0.5:
        warning = "eta <= 0.5: the deconvolution series is not absolutely summable in general"
        warnings.warn(warning, RuntimeWarning)
    return InversionReport(out, amp, warning)


def pre_squeeze(rho: DensityMatrix, spec: SqueezeSpec, out_dim=None) -> DensityMatrix:
    """Squeeze kick rho -> S(zeta) rho S(zeta)^dag, truncated to out_dim.

    out_dim defaults to rho.dim; the product itself is evaluated at a padded
    cutoff so the retained block is accurate.
    """
    dim = out_dim or rho.dim
    if spec.magnitude == 0:
        if dim == rho.dim:
            return rho
        big = np.zeros((dim, dim), dtype=complex)
        big[: rho.dim, : rho.dim] = rho.mat
        return DensityMatrix(big, leakage=rho.leakage)
    npad = max(dim, rho.dim)
    s_op = squeeze_operator(spec, npad)
    big = np.zeros((npad, npad), dtype=complex)
    big[: rho.dim, : rho.dim] = rho.mat
    full = s_op @ big @ s_op.conj().T
    out = full[:dim, :dim]
    leak = 1.0 - float(out.trace().real)
    if leak > 1e-4:
        need = math.ceil(dim * math.exp(2 * spec.magnitude)) + 16
        raise ValidationError(f"pre_squeeze leakage {leak:.2e}; use dim >= {need}")
    purity_in = float((rho.mat @ rho.mat).trace().real)
    purity_out = float((out @ out).trace().real)
    if abs(purity_in - purity_out) > 1e-6:
        warnings.warn(
            f"pre_squeeze purity drift {abs(purity_in - purity_out):.2e}", RuntimeWarning
        )
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, leakage=max(leak, rho.leakage))


def sample_counts(probs, shots, seed):
    """Multinomial draw from probs; residual tail mass lands in an overflow bin.

    Returns (counts over the probs bins, overflow count).  Deterministic for a
    fixed seed.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    probs = np.asarray(probs, dtype=float)
    tail = max(0.0, 1.0 - probs.sum())
    full = np.concatenate([probs, [tail]])
    full = np.clip(full, 0.0, None)
    full = full / full.sum()
    rng = np.random.default_rng(seed)
    draw = rng.multinomial(shots, full)
    return draw[:-1], int(draw[-1])


@dataclass(frozen=True)
class MeasurementTable:
    """Per-amplitude photon statistics plus the metadata needed to invert them.

    ``probs`` rows hold exact probabilities (shots is None) or empirical
    frequencies with ``counts`` retained alongside.  ``phase_locked`` marks
    tables whose squeeze phase follows 2*arg(alpha) node by node.
    """

    alphas: np.ndarray
    probs: np.ndarray
    eta: float
    squeeze: SqueezeSpec | None
    n_max: int
    shots: int | None = None
    counts: np.ndarray | None = None
    overflow: np.ndarray | None = None
    phase_locked: bool = False
    grid_meta: dict | None = None

    def __post_init__(self):
        if len(np.unique(np.round(self.alphas, 12))) != len(self.alphas):
            raise ValidationError("reference amplitudes must be pairwise distinct")
        if np.any(self.probs < -1e-12) or np.any(self.probs.sum(axis=1) > 1 + 1e-9):
            raise ValidationError("invalid probability rows in table")

    @property
    def tail_mass(self) -> np.ndarray:
        return 1.0 - self.probs.sum(axis=1)

    def sidecar_dict(self) -> dict:
        return {
            "eta": self.eta,
            "zeta_mag": self.squeeze.magnitude if self.squeeze else 0.0,
            "zeta_phase": self.squeeze.phase if self.squeeze else 0.0,
            "phase_locked": self.phase_locked,
            "n_max": self.n_max,
            "shots": self.shots if self.shots is not None else "exact",
            "grid": self.grid_meta or {},
        }

    def write(self, csv_path, sidecar_path):
        sampled = self.shots is not None
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha_re", "alpha_im", "n", "count" if sampled else "p"])
            for j, alpha in enumerate(self.alphas):
                for n in range(self.n_max + 1):
                    value = int(self.counts[j, n]) if sampled else f"{self.probs[j, n]:.17g}"
                    writer.writerow([f"{alpha.real:.17g}", f"{alpha.imag:.17g}", n, value])
        with open(sidecar_path, "w") as fh:
            json.dump(self.sidecar_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, csv_path, sidecar_path) -> "MeasurementTable":
        with open(sidecar_path) as fh:
            meta = json.load(fh)
        shots = None if meta["shots"] == "exact" else int(meta["shots"])
        n_max = int(meta["n_max"])
        rows = {}
        order = []
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            sampled = "count" in reader.fieldnames
            for rec in reader:
                key = (float(rec["alpha_re"]), float(rec["alpha_im"]))
                if key not in rows:
                    rows[key] = np.zeros(n_max + 1)
                    order.append(key)
                rows[key][int(rec["n"])] = float(rec["count" if sampled else "p"])
        alphas = np.array([complex(re, im) for re, im in order])
        data = np.array([rows[key] for key in order])
        squeeze = None
        if meta.get("zeta_mag", 0.0) > 0:
            squeeze = SqueezeSpec(meta["zeta_mag"], meta.get("zeta_phase", 0.0))
        if sampled:
            counts = data.astype(int)
            overflow = shots - counts.sum(axis=1)
            probs = counts / shots
        else:
            counts = None
            overflow = None
            probs = data
        return cls(
            alphas=alphas,
            probs=probs,
            eta=float(meta["eta"]),
            squeeze=squeeze,
            n_max=n_max,
            shots=shots,
            counts=counts,
            overflow=overflow,
            phase_locked=bool(meta.get("phase_locked", False)),
            grid_meta=meta.get("grid") or None,
        )


def build_table(
    rho: DensityMatrix,
    grid,
    eta=1.0,
    squeeze: SqueezeSpec | None = None,
    n_max=None,
    shots=None,
    seed=0,
    phase_locking=False,
) -> MeasurementTable:
    """Simulate the full measurement pipeline over a phase-space grid.

    Per node: squeeze kick with the fixed phase from `squeeze`, displaced
    photon-number probabilities, binomial efficiency smearing, optional
    multinomial sampling.  With phase_locking=True the squeeze phase is
    instead set to 2*arg(alpha) + squeeze.phase node by node, mimicking the
    direction-by-direction scaling argument; neither variant makes the
    rescaled-kernel inversion exact (see the notes in `reconstruction`).
    """
    if n_max is None:
        n_max = rho.dim - 1
    if not 0 < eta <= 1:
        raise ValidationError("eta must lie in (0, 1]")
    alphas = np.asarray(grid.nodes)
    probs = np.empty((alphas.size, n_max + 1))
    cache = {}
    for j, alpha in enumerate(alphas):
        if squeeze is not None and squeeze.magnitude > 0:
            if phase_locking:
                phase = (2.0 * cmath.phase(alpha) + squeeze.phase) % (2 * math.pi)
            else:
                phase = squeeze.phase
            key = round(phase, 12)
            if key not in cache:
                fwd_dim = math.ceil(rho.dim * math.exp(2 * squeeze.magnitude)) + 24
                cache[key] = pre_squeeze(rho, SqueezeSpec(squeeze.magnitude, phase), out_dim=fwd_dim)
            state = cache[key]
        else:
            state = rho
        row = displaced_number_probabilities(state, alpha, n_max)
        if eta < 1:
            row = apply_efficiency(row, eta)
        probs[j] = row
    counts = overflow = None
    if shots is not None:
        counts = np.empty((alphas.size, n_max + 1), dtype=int)
        overflow = np.empty(alphas.size, dtype=int)
        seq = np.random.SeedSequence(seed).spawn(alphas.size)
        for j in range(alphas.size):
            counts[j], overflow[j] = sample_counts(probs[j], shots, seq[j])
        probs = counts / shots
    return MeasurementTable(
        alphas=alphas,
        probs=probs,
        eta=eta,
        squeeze=squeeze,
        n_max=n_max,
        shots=shots,
        counts=counts,
        overflow=overflow,
        phase_locked=bool(squeeze is not None and squeeze.magnitude > 0 and phase_locking),
        grid_meta={"r_max": grid.r_max, "n_r": grid.n_r, "n_theta": grid.n_theta},
    )
