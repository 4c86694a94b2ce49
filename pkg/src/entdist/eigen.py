"""Dense eigenvalue solvers for the small matrices this toolkit works with.

Spectra of covariance-sized matrices (a handful of modes, so dimensions of
order ten) are computed with a cyclic Jacobi iteration.  Hermitian inputs are
handled through the real-symmetric embedding ``[[Re, -Im], [Im, Re]]`` whose
spectrum is the Hermitian spectrum with every eigenvalue doubled.
"""

import numpy as np

from .errors import NumericalError, ValidationError

# Off-diagonals are considered annihilated once they drop below this fraction
# of the largest input entry.
_CONVERGENCE_REL = 1e-12
_MAX_SWEEPS = 100
_HERMITICITY_ATOL = 1e-9


def symmetric_eigenvalues(matrix, rel_tol=_CONVERGENCE_REL):
    """All eigenvalues of a real symmetric matrix, sorted in descending order.

    Args:
        matrix: real symmetric array of shape (n, n).
        rel_tol: sweep convergence threshold relative to the largest entry
            of the input.

    Returns:
        numpy array of the n eigenvalues, descending.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite entries")
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > _HERMITICITY_ATOL * max(1.0, np.abs(a).max()):
        raise ValidationError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    a = 0.5 * (a + a.T)

    scale = np.abs(a).max()
    if scale == 0.0:
        return np.zeros(a.shape[0])
    threshold = rel_tol * scale

    n = a.shape[0]
    for _ in range(_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off < threshold:
            return np.sort(np.diag(a))[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < threshold * 1e-2:
                    continue
                # classic two-sided rotation zeroing a[p, q]
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    raise NumericalError(f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps")


def hermitian_eigenvalues(real_part, imag_part, rel_tol=_CONVERGENCE_REL):
    """Eigenvalues of the Hermitian matrix ``real_part + i*imag_part``, descending.

    The Hermitian problem is lifted to the real-symmetric embedding
    ``[[Re, -Im], [Im, Re]]``; its 2n eigenvalues come in exact duplicate
    pairs which are deduplicated by averaging adjacent sorted values.

    Args:
        real_part: symmetric array (n, n).
        imag_part: antisymmetric array (n, n).
        rel_tol: convergence threshold passed to the Jacobi iteration.

    Returns:
        numpy array of the n real eigenvalues, descending.
    """
    re = np.array(real_part, dtype=float)
    im = np.array(imag_part, dtype=float)
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ValidationError(
            f"real and imaginary parts must be square and congruent, got {re.shape} and {im.shape}"
        )
    scale = max(1.0, np.abs(re).max(initial=0.0), np.abs(im).max(initial=0.0))
    if np.abs(re - re.T).max(initial=0.0) > _HERMITICITY_ATOL * scale:
        raise ValidationError("real part is not symmetric: input is not Hermitian")
    if np.abs(im + im.T).max(initial=0.0) > _HERMITICITY_ATOL * scale:
        raise ValidationError("imaginary part is not antisymmetric: input is not Hermitian")

    embedding = np.block([[re, -im], [im, re]])
    doubled = np.sort(symmetric_eigenvalues(embedding, rel_tol=rel_tol))
    paired = 0.5 * (doubled[0::2] + doubled[1::2])
    return paired[::-1]
