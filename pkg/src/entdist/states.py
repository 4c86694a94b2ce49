"""Gaussian states in the covariance-matrix formalism.

Conventions used throughout the toolkit:

* quadratures are ordered ``(x1, p1, ..., xN, pN)``;
* covariance matrices are vacuum-normalized, i.e. built from doubled second
  moments so the vacuum covariance is the identity;
* the symplectic form is the N-fold direct sum of ``J = [[0, 1], [-1, 0]]``;
* a covariance matrix ``gamma`` is physical iff ``gamma + i*Omega >= 0``.

All state and operator objects are immutable values; every operation returns
a new object, which makes them safe to share between threads.
"""

from dataclasses import dataclass, field

import numpy as np

from .eigen import hermitian_eigenvalues
from .errors import ValidationError

SYMMETRY_ATOL = 1e-9
SYMPLECTIC_ATOL = 1e-9
# Minimum eigenvalue of gamma + i*Omega above which a state counts as physical.
PHYSICALITY_TOL = 1e-7

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_form(n_modes):
    """The 2N x 2N symplectic form, a direct sum of 2x2 J blocks."""
    if n_modes < 1:
        raise ValidationError("n_modes must be a positive integer")
    return np.kron(np.eye(n_modes), _J)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """An N-mode Gaussian state: covariance matrix plus mean vector.

    Attributes:
        n_modes: number of modes N.
        gamma: real symmetric 2N x 2N covariance matrix (vacuum = identity).
        mean: real length-2N vector of first moments.
    """

    n_modes: int
    gamma: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValidationError("n_modes must be a positive integer")
        gamma = np.array(self.gamma, dtype=float)
        mean = np.array(self.mean, dtype=float)
        d = 2 * self.n_modes
        if gamma.shape != (d, d):
            raise ValidationError(f"gamma must have shape {(d, d)}, got {gamma.shape}")
        if mean.shape != (d,):
            raise ValidationError(f"mean must have shape {(d,)}, got {mean.shape}")
        if not (np.all(np.isfinite(gamma)) and np.all(np.isfinite(mean))):
            raise ValidationError("state contains non-finite entries")
        asym = np.abs(gamma - gamma.T).max()
        if asym > SYMMETRY_ATOL * max(1.0, np.abs(gamma).max()):
            raise ValidationError(f"gamma is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "gamma", _frozen(0.5 * (gamma + gamma.T)))
        object.__setattr__(self, "mean", _frozen(mean))

    @property
    def physical(self):
        """True iff min-eig(gamma + i*Omega) clears the physicality tolerance."""
        return min_physicality_eigenvalue(self) >= -PHYSICALITY_TOL


@dataclass(frozen=True)
class SymplecticOp:
    """A symplectic matrix with a descriptive label.

    The matrix must satisfy ``S Omega S^T = Omega``; this is checked on
    construction.  ``acts_on`` optionally records the ordered mode indices the
    operation is meant for.
    """

    matrix: np.ndarray
    label: str = ""
    acts_on: tuple = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValidationError(f"symplectic matrix must be square of even size, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("symplectic matrix contains non-finite entries")
        omega = symplectic_form(m.shape[0] // 2)
        defect = np.abs(m @ omega @ m.T - omega).max()
        if defect > SYMPLECTIC_ATOL:
            raise ValidationError(f"matrix is not symplectic (|S Omega S^T - Omega| = {defect:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))
        if self.acts_on is not None:
            object.__setattr__(self, "acts_on", tuple(int(i) for i in self.acts_on))

    @property
    def n_modes(self):
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class QuadratureCombination:
    """A linear form u . xi over the quadratures, e.g. g*x_A + x_B."""

    coefficients: np.ndarray
    gain: float = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size % 2:
            raise ValidationError("coefficients must be a flat vector of even length")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients contain non-finite entries")
        object.__setattr__(self, "coefficients", _frozen(c))


def vacuum_state(n_modes):
    """The N-mode vacuum: identity covariance, zero mean."""
    if n_modes < 1:
        raise ValidationError("n_modes must be a positive integer")
    return GaussianState(n_modes, np.eye(2 * n_modes), np.zeros(2 * n_modes))


def squeezed_vacuum(r, axis="momentum"):
    """A single-mode squeezed vacuum.

    Args:
        r: squeezing parameter, r >= 0.
        axis: "momentum" squeezes p (variance e^{-2r}, x anti-squeezed) and
            "position" squeezes x.
    """
    if not np.isfinite(r) or r < 0:
        raise ValidationError("squeezing parameter must be finite and non-negative")
    if axis not in ("momentum", "position"):
        raise ValidationError(f"axis must be 'momentum' or 'position', got {axis!r}")
    big, small = np.exp(2.0 * r), np.exp(-2.0 * r)
    diag = (big, small) if axis == "momentum" else (small, big)
    return GaussianState(1, np.diag(diag), np.zeros(2))


def beam_splitter(transmittance):
    """The two-mode beam-splitter symplectic with transmittance T.

    Sign convention (fixed): the reflected amplitude carries the minus sign on
    the first input, so the outputs are ``sqrt(T)*in1 + sqrt(1-T)*in2`` and
    ``-sqrt(1-T)*in1 + sqrt(T)*in2``.
    """
    if not np.isfinite(transmittance) or not 0.0 <= transmittance <= 1.0:
        raise ValidationError(f"transmittance must lie in [0, 1], got {transmittance}")
    a = np.sqrt(transmittance)
    b = np.sqrt(1.0 - transmittance)
    eye = np.eye(2)
    matrix = np.block([[a * eye, b * eye], [-b * eye, a * eye]])
    return SymplecticOp(matrix, label=f"beam_splitter(T={transmittance:g})")


def phase_shift(phi):
    """Single-mode phase-space rotation by phi radians, (x, p) basis."""
    if not np.isfinite(phi):
        raise ValidationError("phase must be finite")
    c, s = np.cos(phi), np.sin(phi)
    return SymplecticOp(np.array([[c, s], [-s, c]]), label=f"phase_shift(phi={phi:g})")


def embed_operator(op, n_modes, modes):
    """Expand a symplectic acting on `modes` to the full 2N x 2N matrix."""
    modes = tuple(int(m) for m in modes)
    if len(modes) != op.n_modes:
        raise ValidationError(f"operator acts on {op.n_modes} modes, got indices {modes}")
    if len(set(modes)) != len(modes):
        raise ValidationError(f"duplicate mode index in {modes}")
    if any(m < 0 or m >= n_modes for m in modes):
        raise ValidationError(f"mode index out of range in {modes} for {n_modes} modes")
    full = np.eye(2 * n_modes)
    for a, ma in enumerate(modes):
        for b, mb in enumerate(modes):
            full[2 * ma : 2 * ma + 2, 2 * mb : 2 * mb + 2] = op.matrix[2 * a : 2 * a + 2, 2 * b : 2 * b + 2]
    return full


def apply_symplectic(state, op, modes):
    """Conjugate the state by a symplectic embedded at the given mode indices."""
    full = embed_operator(op, state.n_modes, modes)
    return GaussianState(state.n_modes, full @ state.gamma @ full.T, full @ state.mean)


def displace(state, shift):
    """Shift the mean vector; the covariance matrix is unchanged."""
    shift = np.asarray(shift, dtype=float)
    if shift.shape != state.mean.shape:
        raise ValidationError(f"shift must have shape {state.mean.shape}, got {shift.shape}")
    if not np.all(np.isfinite(shift)):
        raise ValidationError("shift contains non-finite entries")
    return GaussianState(state.n_modes, state.gamma, state.mean + shift)


def tensor(*states):
    """Direct sum of states into a single multi-mode state."""
    if not states:
        raise ValidationError("tensor requires at least one state")
    n = sum(s.n_modes for s in states)
    gamma = np.zeros((2 * n, 2 * n))
    mean = np.zeros(2 * n)
    at = 0
    for s in states:
        d = 2 * s.n_modes
        gamma[at : at + d, at : at + d] = s.gamma
        mean[at : at + d] = s.mean
        at += d
    return GaussianState(n, gamma, mean)


def reduce_to_modes(state, modes):
    """Partial trace keeping the listed modes, in the listed order."""
    modes = tuple(int(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise ValidationError(f"duplicate mode index in {modes}")
    if any(m < 0 or m >= state.n_modes for m in modes):
        raise ValidationError(f"mode index out of range in {modes}")
    idx = [2 * m + k for m in modes for k in (0, 1)]
    return GaussianState(len(modes), state.gamma[np.ix_(idx, idx)], state.mean[idx])


def partial_transpose(gamma, mode):
    """Flip the sign of one mode's p row and column of a covariance matrix."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] % 2:
        raise ValidationError(f"covariance matrix must be square of even size, got {gamma.shape}")
    n = gamma.shape[0] // 2
    if not 0 <= mode < n:
        raise ValidationError(f"mode index {mode} out of range for {n} modes")
    flip = np.ones(2 * n)
    flip[2 * mode + 1] = -1.0
    return gamma * np.outer(flip, flip)


def min_physicality_eigenvalue(state):
    """Smallest eigenvalue of gamma + i*Omega; >= -PHYSICALITY_TOL iff physical."""
    ev = hermitian_eigenvalues(state.gamma, symplectic_form(state.n_modes))
    return float(ev[-1])


def quadratic_form_variance(state, combination):
    """Variance u^T gamma u of a quadrature combination (vacuum gives u^T u)."""
    u = combination.coefficients if isinstance(combination, QuadratureCombination) else np.asarray(combination, dtype=float)
    if u.shape != (2 * state.n_modes,):
        raise ValidationError(f"combination must have length {2 * state.n_modes}, got {u.shape}")
    return float(u @ state.gamma @ u)
