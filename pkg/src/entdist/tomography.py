"""Covariance reconstruction from paired measurement settings, shape statistics
and block-based statistical errors.

A setting ``(theta_A, theta_B)`` measures the rotated quadratures
``cos(theta) x + sin(theta) p`` on each mode of a pair.  Five canonical
settings, (0,0), (90,0), (0,90), (90,90) and (45,45) in degrees, determine
all ten independent entries of a two-mode covariance matrix; any setting set
whose induced linear system has full rank is accepted and solved in the
least-squares sense.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

CANONICAL_SETTINGS = ((0.0, 0.0), (90.0, 0.0), (0.0, 90.0), (90.0, 90.0), (45.0, 45.0))

# index pairs of the 10 independent entries of a symmetric 4x4 matrix
_PAIRS = [(i, j) for i in range(4) for j in range(i, 4)]
_NAMES = ("x_A", "p_A", "x_B", "p_B")


@dataclass(frozen=True)
class MeasurementSetting:
    """Analysis angles (degrees) for the two modes of a pair, taken mod 180."""

    theta_a: float
    theta_b: float

    def __post_init__(self):
        for name in ("theta_a", "theta_b"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError("setting angles must be finite")
            object.__setattr__(self, name, v % 180.0)

    def projectors(self):
        """Coefficient vectors (cos, sin) for each mode, radians internally."""
        ta, tb = math.radians(self.theta_a), math.radians(self.theta_b)
        return np.array([math.cos(ta), math.sin(ta)]), np.array([math.cos(tb), math.sin(tb)])


@dataclass(frozen=True)
class PairStatistics:
    """Second moments measured at one setting."""

    setting: MeasurementSetting
    var_a: float
    var_b: float
    cov_ab: float
    n: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("pair statistics need a sample count of at least 2")
        if self.var_a < 0 or self.var_b < 0:
            raise ValidationError("variances must be non-negative")
        bound = math.sqrt(self.var_a * self.var_b)
        if abs(self.cov_ab) > bound * (1.0 + 1e-9) + 1e-12:
            raise ValidationError("covariance exceeds the Cauchy-Schwarz bound of the variances")


def project_pair_statistics(gamma, settings=CANONICAL_SETTINGS, n=2):
    """Analytic pair statistics a covariance matrix produces at given settings."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (4, 4):
        raise ValidationError("pair projection is defined for 4x4 covariance matrices")
    out = []
    for s in settings:
        setting = s if isinstance(s, MeasurementSetting) else MeasurementSetting(*s)
        ca, cb = setting.projectors()
        ua = np.concatenate([ca, [0.0, 0.0]])
        ub = np.concatenate([[0.0, 0.0], cb])
        out.append(
            PairStatistics(
                setting=setting,
                var_a=float(ua @ gamma @ ua),
                var_b=float(ub @ gamma @ ub),
                cov_ab=float(ua @ gamma @ ub),
                n=n,
            )
        )
    return out


def pair_statistics_from_samples(outcomes, setting, n_label=None):
    """Pair statistics of recorded samples ``(x_A, p_A, x_B, p_B)`` at one setting."""
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.ndim != 2 or outcomes.shape[1] != 4:
        raise ValidationError("outcomes must be an (n, 4) array of two-mode records")
    if outcomes.shape[0] < 2:
        raise ValidationError("need at least two records")
    setting = setting if isinstance(setting, MeasurementSetting) else MeasurementSetting(*setting)
    ca, cb = setting.projectors()
    proj_a = outcomes[:, :2] @ ca
    proj_b = outcomes[:, 2:] @ cb
    cov = np.cov(np.column_stack([proj_a, proj_b]), rowvar=False, ddof=1)
    return PairStatistics(
        setting=setting,
        var_a=float(cov[0, 0]),
        var_b=float(cov[1, 1]),
        cov_ab=float(cov[0, 1]),
        n=outcomes.shape[0] if n_label is None else n_label,
    )


def _design_rows(setting):
    ca, cb = setting.projectors()
    rows = np.zeros((3, len(_PAIRS)))
    for col, (i, j) in enumerate(_PAIRS):
        sym = 1.0 if i == j else 2.0
        if i < 2 and j < 2:
            rows[0, col] = sym * ca[i] * ca[j]
        elif i >= 2 and j >= 2:
            rows[1, col] = sym * cb[i - 2] * cb[j - 2]
        else:
            rows[2, col] = ca[i] * cb[j - 2]
    return rows


def reconstruct_covariance(stats):
    """Solve for the 4x4 covariance matrix from a list of PairStatistics.

    Raises a validation error naming the unconstrained entries when the
    setting set is rank deficient.
    """
    stats = list(stats)
    if not stats:
        raise ValidationError("no pair statistics given")
    design = np.vstack([_design_rows(s.setting) for s in stats])
    target = np.concatenate([[s.var_a, s.var_b, s.cov_ab] for s in stats])
    rank = np.linalg.matrix_rank(design, tol=1e-9)
    if rank < len(_PAIRS):
        _, _, vt = np.linalg.svd(design)
        missing = []
        for null_vec in vt[rank:]:
            k = int(np.argmax(np.abs(null_vec)))
            i, j = _PAIRS[k]
            missing.append(f"{_NAMES[i]}*{_NAMES[j]}")
        raise ValidationError(
            "setting set does not determine the covariance matrix; "
            f"unconstrained directions include {sorted(set(missing))}"
        )
    solution = np.linalg.lstsq(design, target, rcond=None)[0]
    gamma = np.zeros((4, 4))
    for value, (i, j) in zip(solution, _PAIRS):
        gamma[i, j] = gamma[j, i] = value
    return gamma


@dataclass(frozen=True)
class ShapeStats:
    """Skewness and kurtosis of a sample with block standard errors."""

    skewness: float
    kurtosis: float
    skewness_err: float
    kurtosis_err: float
    n: int


def _moments(x):
    mu = x.mean()
    centered = x - mu
    m2 = np.mean(centered**2)
    m3 = np.mean(centered**3)
    m4 = np.mean(centered**4)
    return m2, m3, m4


def shape_statistics(samples, k_blocks=10):
    """Third and fourth standardized moments, S = mu3/s^3 and K = mu4/s^4.

    Standard errors come from the k-block method: the statistic is evaluated
    on contiguous blocks and the spread across blocks, scaled by 1/sqrt(k),
    estimates the error of the full-sample value.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 4:
        raise ValidationError("shape statistics need at least four samples")
    m2, m3, m4 = _moments(x)
    if m2 <= 0:
        raise ValidationError("sample variance is degenerate; shape statistics undefined")
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    # Pearson bound, guaranteed for any real sample; violation means a bug.
    assert kurt >= skew**2 + 1.0 - 1e-9, "kurtosis fell below the Pearson bound"

    if x.size >= 2 * k_blocks:
        def stat(block):
            b2, b3, b4 = _moments(block)
            if b2 <= 0:
                return np.array([0.0, 1.0])
            return np.array([b3 / b2**1.5, b4 / b2**2])

        errs = block_errors(x, k=k_blocks, statistic=stat)
        skew_err, kurt_err = float(errs[0]), float(errs[1])
    else:
        skew_err = kurt_err = float("nan")
    return ShapeStats(float(skew), float(kurt), skew_err, kurt_err, x.size)


def block_errors(samples, k=10, statistic=None, shuffle=False, rng_seed=0):
    """Standard error of a statistic estimated from k equal data blocks.

    The samples are split into k contiguous blocks (a trailing remainder is
    truncated), the statistic is evaluated per block, and the elementwise
    standard deviation across blocks divided by sqrt(k) is returned.  With
    ``shuffle=True`` the records are permuted deterministically first, for
    i.i.d. data whose ordering carries structure.
    """
    data = np.asarray(samples, dtype=float)
    if k < 2:
        raise ValidationError("block count must be at least 2")
    n = data.shape[0]
    if n < k:
        raise ValidationError(f"need at least {k} records for {k} blocks, got {n}")
    if statistic is None:
        statistic = lambda block: np.mean(block, axis=0)
    if shuffle:
        order = np.random.Generator(np.random.Philox(key=np.uint64(rng_seed))).permutation(n)
        data = data[order]
    per_block = n // k
    values = np.stack([np.asarray(statistic(data[i * per_block : (i + 1) * per_block]), dtype=float) for i in range(k)])
    return values.std(axis=0, ddof=1) / math.sqrt(k)
