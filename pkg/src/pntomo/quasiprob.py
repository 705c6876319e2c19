"""s-parametrized weight functions and characteristic functions.

Diagnostic layer: values here are computed straight from the operator
definitions and serve as independent cross-checks for the measurement and
reconstruction paths (and as plot-ready scan data for the CLI).
"""

from __future__ import annotations

import cmath
import math
import warnings

import numpy as np

from .fock import DensityMatrix, SqueezeSpec, displacement_operator
from .measurement import pre_squeeze
from .reconstruction import t_operator

IMAG_DEFECT_TOL = 1e-10


def weight_function(rho: DensityMatrix, alpha, s) -> float:
    """W(alpha, s) = Tr{rho T(alpha, s)}.

    W(alpha, -1) is the Q value <alpha|rho|alpha>; W(alpha, 0) is the
    Wigner-type value in the T-operator normalization (2 at the origin for
    vacuum -- this library never rescales to the 1/pi textbook convention).
    """
    if s > 0:
        warnings.warn("weight_function with s > 0 relies on series convergence", RuntimeWarning)
    t_mat = t_operator(alpha, s, rho.dim)
    value = complex(np.einsum("ij,ji->", rho.mat, t_mat))
    if abs(value.imag) > IMAG_DEFECT_TOL:
        warnings.warn(f"weight_function imaginary defect {value.imag:.2e}", RuntimeWarning)
    return value.real


def characteristic_function(rho: DensityMatrix, xi, s=0.0) -> complex:
    """chi(xi, s) = Tr{rho D(xi)} exp(s |xi|^2 / 2)."""
    xi = complex(xi)
    d_op = displacement_operator(xi, rho.dim)
    bare = complex(np.einsum("ij,ji->", rho.mat, d_op))
    return bare * math.exp(0.5 * s * abs(xi) ** 2)


def verify_squeeze_scaling(rho: DensityMatrix, spec: SqueezeSpec, xi_samples, s) -> dict:
    """Check the characteristic-function squeeze-scaling identities.

    Locked form: with the squeeze phase set to 2*arg(xi) sample by sample,
    chi(xi, s) must equal chi~(xi/Delta, s Delta^2) computed from the
    squeezed state.  General form: chi~(xi, s) must equal
    chi(xi mu + conj(xi) nu) exp(s |xi|^2 / 2) for the fixed-phase squeeze.
    Returns the max deviation of each form over the samples.
    """
    delta = spec.delta
    mu = math.cosh(spec.magnitude)
    nu = math.sinh(spec.magnitude) * cmath.exp(1j * spec.phase)
    rho_fixed = pre_squeeze(rho, spec)
    locked_dev = 0.0
    general_dev = 0.0
    cache = {}
    for xi in np.asarray(xi_samples, dtype=complex):
        phase = (2.0 * cmath.phase(xi)) % (2 * math.pi)
        key = round(phase, 12)
        if key not in cache:
            cache[key] = pre_squeeze(rho, SqueezeSpec(spec.magnitude, phase))
        lhs = characteristic_function(rho, xi, s)
        rhs = characteristic_function(cache[key], xi / delta, s * delta**2)
        locked_dev = max(locked_dev, abs(lhs - rhs))
        tilde = characteristic_function(rho_fixed, xi, s)
        mapped = characteristic_function(rho, mu * xi + nu * np.conj(xi), 0.0)
        mapped *= math.exp(0.5 * s * abs(xi) ** 2)
        general_dev = max(general_dev, abs(tilde - mapped))
    return {"locked_max_dev": locked_dev, "general_max_dev": general_dev}
