"""Separability and entanglement certification for Gaussian states.

Two certificates are provided: the PPT test (necessary and sufficient for
1-vs-rest bipartitions of Gaussian states) and the product criterion on joint
quadrature combinations ``g*x_A + x_B`` and ``g*p_A - p_B`` with a variable
gain, which witnesses entanglement whenever the product of the two normalized
variances drops below one.
"""

import math
from dataclasses import dataclass

import numpy as np

from .eigen import hermitian_eigenvalues, symmetric_eigenvalues
from .errors import ValidationError
from .states import PHYSICALITY_TOL, QuadratureCombination, quadratic_form_variance, partial_transpose, symplectic_form

# A covariance eigenvalue below 1 - NO_SQUEEZING_TOL marks a squeezed state.
NO_SQUEEZING_TOL = 1e-7

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PptVerdict:
    """Outcome of a PPT test on one mode against the rest."""

    eigenvalues: tuple
    min_eigenvalue: float
    separable: bool
    transposed_mode: int
    tolerance: float = PHYSICALITY_TOL

    def to_dict(self):
        return {
            "eigenvalues": list(self.eigenvalues),
            "min_eigenvalue": self.min_eigenvalue,
            "separable": self.separable,
            "transposed_mode": self.transposed_mode,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class CriterionPoint:
    """Product criterion evaluated at one gain value."""

    gain: float
    var_x_norm: float
    var_p_norm: float
    product: float

    def to_dict(self):
        return {
            "gain": self.gain,
            "var_x_norm": self.var_x_norm,
            "var_p_norm": self.var_p_norm,
            "product": self.product,
        }


def ppt_test(state, mode):
    """PPT certificate for the bipartition isolating `mode` from the rest.

    Returns the full spectrum of ``gamma^{T_mode} + i*Omega``; the state is
    separable across this cut iff the minimum eigenvalue clears the
    physicality tolerance.
    """
    if state.n_modes < 2:
        raise ValidationError("PPT test needs at least two modes")
    if not 0 <= mode < state.n_modes:
        raise ValidationError(f"mode index {mode} out of range for {state.n_modes} modes")
    transposed = partial_transpose(state.gamma, mode)
    ev = hermitian_eigenvalues(transposed, symplectic_form(state.n_modes))
    min_ev = float(ev[-1])
    return PptVerdict(
        eigenvalues=tuple(float(v) for v in ev),
        min_eigenvalue=min_ev,
        separable=min_ev >= -PHYSICALITY_TOL,
        transposed_mode=int(mode),
    )


def duan_combinations(g):
    """The x-sum and p-difference combinations used by the product criterion."""
    return (
        QuadratureCombination(np.array([g, 0.0, 1.0, 0.0]), gain=g),
        QuadratureCombination(np.array([0.0, g, 0.0, -1.0]), gain=g),
    )


def duan_product(state, g):
    """Product criterion of a two-mode state at gain g.

    Both variances are normalized by their two-mode vacuum value ``g**2 + 1``
    so the separability boundary sits exactly at 1 for every gain.
    """
    if state.n_modes != 2:
        raise ValidationError("product criterion is defined for exactly two modes")
    if not np.isfinite(g):
        raise ValidationError("gain must be finite")
    u, v = duan_combinations(g)
    norm = g * g + 1.0
    var_x = quadratic_form_variance(state, u) / norm
    var_p = quadratic_form_variance(state, v) / norm
    return CriterionPoint(gain=float(g), var_x_norm=var_x, var_p_norm=var_p, product=var_x * var_p)


def optimize_gain(state, bracket, tol=1e-6):
    """Golden-section minimization of the criterion product over a gain bracket.

    Returns ``(g_opt, CriterionPoint)``.  If the product is constant over the
    bracket the midpoint is returned (documented tie-break for flat
    objectives such as the vacuum).
    """
    lo, hi = (float(bracket[0]), float(bracket[1]))
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ValidationError(f"bracket must satisfy g_lo < g_hi, got {bracket}")

    def product(g):
        value = duan_product(state, g).product
        if not np.isfinite(value):
            raise ValidationError(f"criterion product is not finite at g={g}")
        return value

    mid = 0.5 * (lo + hi)
    probes = [product(lo), product(mid), product(hi)]
    if max(probes) - min(probes) <= 1e-12 * max(1.0, abs(probes[1])):
        return mid, duan_product(state, mid)

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = product(c), product(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = product(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = product(d)
    g_opt = 0.5 * (a + b)
    return g_opt, duan_product(state, g_opt)


def classicality_check(state):
    """Eigenvalue test for squeezing.

    Returns ``(min_gamma_eigenvalue, squeezed_flag)``.  A physical Gaussian
    state whose covariance eigenvalues all reach 1 is a mixture of coherent
    states and cannot produce entanglement on a beam splitter.
    """
    ev = symmetric_eigenvalues(state.gamma)
    min_ev = float(ev[-1])
    return min_ev, min_ev < 1.0 - NO_SQUEEZING_TOL
