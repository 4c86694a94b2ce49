"""Gaussian phase-jitter model for the first beam splitter, and its inversion.

A random phase rotation with zero-mean Gaussian distribution (variance
``sigma2``) acting on the first input mode of a beam splitter maps Gaussian
second moments to Gaussian second moments.  The forward map and its exact
algebraic inverse are implemented here; the inverse lets one reconstruct the
pre-jitter two-mode covariance matrix from the measured output matrix and
output mean vector, e.g. to certify that the input was a classical
(non-squeezed) state.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .states import beam_splitter

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class DephasingParams:
    """Phase-jitter variance (radians^2) and beam-splitter transmittance."""

    sigma2: float
    transmittance: float = 0.5

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ValidationError("sigma2 must be finite and non-negative")
        if not 0.0 <= self.transmittance <= 1.0:
            raise ValidationError("transmittance must lie in [0, 1]")

    @property
    def sigma_matrix(self):
        """diag(e^{-sigma2/2}, e^{-sigma2/2}, 1, 1), damping mode-A amplitudes."""
        damp = np.exp(-0.5 * self.sigma2)
        return np.diag([damp, damp, 1.0, 1.0])


def phase_variance_from_degrees(value, squared_std=False):
    """Convert a phase-fluctuation variance quoted in degrees to radians^2.

    By default `value` is read as a variance in square degrees.  With
    ``squared_std=True`` it is read as a standard deviation in degrees whose
    square is the variance.
    """
    if not np.isfinite(value) or value < 0:
        raise ValidationError("phase variance must be finite and non-negative")
    rad = np.pi / 180.0
    return value * rad * rad if not squared_std else (value * rad) ** 2


def first_moment_matrix(d):
    """Rank-one matrix of first moments, D_ij = d_i * d_j."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 1:
        raise ValidationError("mean vector must be one-dimensional")
    return np.outer(d, d)


def jitter_noise_term(block, alpha, sigma2, inverse=False):
    """Second-moment correction induced by Gaussian phase jitter on one mode.

    Evaluates ``(1-e^{-s})^2/2 * M + (1-e^{-2s})/2 * J M J^T`` with
    ``M = block + alpha``; the inverse variant uses ``e^{+s}`` in place of
    ``e^{-s}``.  `block` is the jittered mode's 2x2 covariance block and
    `alpha` is twice its first-moment matrix.
    """
    block = np.asarray(block, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if block.shape != (2, 2) or alpha.shape != (2, 2):
        raise ValidationError("block and alpha must be 2x2 matrices")
    s = float(sigma2) if not inverse else -float(sigma2)
    m = block + alpha
    return 0.5 * (1.0 - np.exp(-s)) ** 2 * m + 0.5 * (1.0 - np.exp(-2.0 * s)) * (_J @ m @ _J.T)


def dephase_forward(gamma, mean, params):
    """Map a two-mode state through phase jitter on mode A and a beam splitter.

    Returns ``(gamma_out, mean_out)``.
    """
    gamma = np.asarray(gamma, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if gamma.shape != (4, 4) or mean.shape != (4,):
        raise ValidationError("dephasing maps are defined for two-mode states")
    u = beam_splitter(params.transmittance).matrix
    sig = params.sigma_matrix
    alpha = 2.0 * first_moment_matrix(mean)[:2, :2]
    noise = jitter_noise_term(gamma[:2, :2], alpha, params.sigma2)
    core = sig @ gamma @ sig
    core[:2, :2] += noise
    return u @ core @ u.T, u @ (sig @ mean)


def dephase_invert(gamma_out, mean_out, params):
    """Exact inverse of `dephase_forward` from the output matrix and mean.

    The output mean vector is the one measured after the beam splitter; it
    enters through twice its first-moment matrix, conjugated back through the
    beam splitter.
    """
    gamma_out = np.asarray(gamma_out, dtype=float)
    mean_out = np.asarray(mean_out, dtype=float)
    if gamma_out.shape != (4, 4) or mean_out.shape != (4,):
        raise ValidationError("dephasing maps are defined for two-mode states")
    if not 0.0 < params.transmittance < 1.0:
        raise ValidationError("inversion requires a mixing beam splitter, transmittance in (0, 1)")
    u = beam_splitter(params.transmittance).matrix
    core = u.T @ gamma_out @ u
    alpha_back = 2.0 * (u.T @ first_moment_matrix(mean_out) @ u)[:2, :2]
    noise = jitter_noise_term(core[:2, :2], alpha_back, params.sigma2, inverse=True)
    sig_inv = np.linalg.inv(params.sigma_matrix)
    gamma_in = sig_inv @ core @ sig_inv
    gamma_in[:2, :2] += noise
    return 0.5 * (gamma_in + gamma_in.T)
