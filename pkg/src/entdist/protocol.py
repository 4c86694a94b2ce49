"""Three-step protocol that entangles two remote modes via a separable mediator.

Step 1: a distributor prepares mode A momentum-squeezed, mode B in vacuum and
mode C position-squeezed, then applies classical displacements driven by two
shared zero-mean Gaussian variables (x, p) of variance ``(e^{2r}-1)/2``:
``p_A -> p_A - p``, ``x_C -> x_C + x``, ``x_B -> x_B + sqrt(2) x``,
``p_B -> p_B + sqrt(2) p``.  The resulting three-mode state is built by local
operations and classical correlations only, hence fully separable.

Step 2: modes A and C interfere on a balanced beam splitter.  The transmitted
mode C' stays separable from the subsystem (A'B).

Step 3: mode C' interferes with mode B on a second balanced beam splitter,
whose kept output B' may additionally suffer intentional loss.  The output
pair (A', B') violates the product criterion for every r > 0.

The displacement of mode B can be applied before the second beam splitter,
after it, or purely digitally on recorded samples (the ``a_posteriori``
variant); all variants yield the same final covariance.  Monte Carlo sampling
uses counter-based random streams so ensembles are reproducible bit-for-bit
for any worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .separability import CriterionPoint, duan_product, optimize_gain, ppt_test
from .states import (
    GaussianState,
    beam_splitter,
    embed_operator,
    reduce_to_modes,
    tensor,
    vacuum_state,
)

VARIANTS = ("displace_B_before_BS", "displace_B_after_BS", "a_posteriori")

MODE_ORDER = ("A", "B", "C")

# Recorded sample units are shot-noise normalized (vacuum outcome variance 1),
# so sample covariances estimate gamma directly and a displacement d of the
# quadrature operators shifts recorded outcomes by sqrt(2) * d.
OUTCOME_SCALE = math.sqrt(2.0)

_GRID_EXTENT_SIGMAS = 4.0
_CONT_CHUNK = 65536
_GRID_TAG = np.uint64(1) << np.uint64(62)
_CONT_TAG = np.uint64(2) << np.uint64(62)


@dataclass(frozen=True)
class NoisePlan:
    """Correlated classical displacement scheme.

    ``injections[mode]`` is a 2x2 matrix whose columns give the shift of the
    mode's (x, p) quadratures per unit of the shared classical variables x
    and p respectively.
    """

    displacement_variance: float
    injections: dict

    def __post_init__(self):
        if not np.isfinite(self.displacement_variance) or self.displacement_variance < 0:
            raise ValidationError("displacement variance must be finite and non-negative")
        cleaned = {}
        for mode, coeffs in self.injections.items():
            m = np.array(coeffs, dtype=float)
            if m.shape != (2, 2) or not np.all(np.isfinite(m)):
                raise ValidationError(f"injection coefficients for mode {mode} must be a finite 2x2 matrix")
            m.setflags(write=False)
            cleaned[mode] = m
        object.__setattr__(self, "injections", cleaned)

    def coefficient_matrix(self, modes=MODE_ORDER):
        """Stacked (2N, 2) matrix of injection coefficients for the given modes."""
        rows = [self.injections.get(m, np.zeros((2, 2))) for m in modes]
        return np.vstack(rows)


def standard_noise_plan(r):
    """The protocol's displacement plan at squeezing parameter r."""
    if not np.isfinite(r) or r < 0:
        raise ValidationError("squeezing parameter must be finite and non-negative")
    s2 = math.sqrt(2.0)
    return NoisePlan(
        displacement_variance=(math.exp(2.0 * r) - 1.0) / 2.0,
        injections={
            "A": [[0.0, 0.0], [0.0, -1.0]],
            "B": [[s2, 0.0], [0.0, s2]],
            "C": [[1.0, 0.0], [0.0, 0.0]],
        },
    )


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters for the distribution protocol.

    Attributes:
        r: squeezing parameter of the two squeezed resource modes.
        variant: where mode B's displacement is applied (see VARIANTS).
        bob_loss: intentional loss fraction on the kept output B'.
        detector_gain: relative response of the B' detector; enters only the
            recorded samples and the criterion curve, not the physical state.
        displacement_sees_loss: if True (default) a displacement applied
            after the second beam splitter is scaled exactly as if it had
            been applied at the source, making all variants equivalent.
    """

    r: float
    variant: str = "displace_B_before_BS"
    bob_loss: float = 0.5
    detector_gain: float = 1.0
    displacement_sees_loss: bool = True

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise ValidationError("squeezing parameter r must be finite and non-negative")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.bob_loss <= 1.0:
            raise ValidationError("bob_loss must lie in [0, 1]")
        if not np.isfinite(self.detector_gain) or self.detector_gain <= 0:
            raise ValidationError("detector_gain must be finite and positive")

    def to_dict(self):
        return {
            "r": self.r,
            "variant": self.variant,
            "bob_loss": self.bob_loss,
            "detector_gain": self.detector_gain,
            "displacement_sees_loss": self.displacement_sees_loss,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class ProtocolTrace:
    """States and separability verdicts at every protocol stage."""

    config: ProtocolConfig
    stages: dict
    verdicts: dict
    criterion_curve: tuple
    g_opt: float
    optimum: CriterionPoint


@dataclass(frozen=True)
class SampleSet:
    """Seeded Monte Carlo records of quadrature outcomes.

    ``hidden`` holds the per-record classical displacement draws (x, p);
    ``outcomes`` holds the recorded quadrature samples, one column per
    measured channel in ``(x, p)`` pairs following ``mode_labels``.
    """

    seed: int
    stage: str
    scheme: str
    config: ProtocolConfig
    mode_labels: tuple
    hidden: np.ndarray
    outcomes: np.ndarray
    corrected: bool = False
    fraction_used: float = None

    def __post_init__(self):
        hidden = np.asarray(self.hidden, dtype=float)
        outcomes = np.asarray(self.outcomes, dtype=float)
        if hidden.ndim != 2 or hidden.shape[1] != 2:
            raise ValidationError("hidden draws must form an (n, 2) array")
        if outcomes.ndim != 2 or outcomes.shape[0] != hidden.shape[0]:
            raise ValidationError("outcomes must have one row per hidden draw")
        if outcomes.shape[1] != 2 * len(self.mode_labels):
            raise ValidationError("outcomes must have an (x, p) column pair per measured mode")
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "mode_labels", tuple(self.mode_labels))

    @property
    def n_records(self):
        return self.outcomes.shape[0]

    @property
    def channel_labels(self):
        return tuple(f"{m}:{q}" for m in self.mode_labels for q in ("x", "p"))

    def covariance(self):
        """Sample covariance of the recorded outcomes (estimates gamma)."""
        if self.n_records < 2:
            raise ValidationError("need at least two records to estimate a covariance")
        return np.cov(self.outcomes, rowvar=False, ddof=1)


class _Chain:
    """Quantum covariance plus propagated classical injection coefficients.

    The total covariance of any stage is ``gamma_q + 2*sd2*(L @ L.T)`` where
    L stacks the injection coefficient columns that are physically present.
    Keeping the A/C and B contributions separate is what makes the
    displacement-relocation variants and the digital correction exact.
    """

    def __init__(self, gamma_q, l_ac, l_b, sd2):
        self.gamma_q = gamma_q
        self.l_ac = l_ac
        self.l_b = l_b
        self.sd2 = sd2

    def conjugate(self, full_matrix):
        return _Chain(
            full_matrix @ self.gamma_q @ full_matrix.T,
            full_matrix @ self.l_ac,
            full_matrix @ self.l_b,
            self.sd2,
        )

    def lose_mode(self, mode, transmittance, include_b=True):
        n = self.gamma_q.shape[0] // 2
        scale = np.ones(2 * n)
        scale[2 * mode : 2 * mode + 2] = math.sqrt(transmittance)
        gamma_q = self.gamma_q * np.outer(scale, scale)
        gamma_q[2 * mode, 2 * mode] += 1.0 - transmittance
        gamma_q[2 * mode + 1, 2 * mode + 1] += 1.0 - transmittance
        l_b = self.l_b * scale[:, None] if include_b else self.l_b
        return _Chain(gamma_q, self.l_ac * scale[:, None], l_b, self.sd2)

    def keep(self, modes):
        idx = [2 * m + k for m in modes for k in (0, 1)]
        return _Chain(
            self.gamma_q[np.ix_(idx, idx)],
            self.l_ac[idx],
            self.l_b[idx],
            self.sd2,
        )

    def state(self, with_b):
        l_tot = self.l_ac + self.l_b if with_b else self.l_ac
        gamma = self.gamma_q + 2.0 * self.sd2 * (l_tot @ l_tot.T)
        return GaussianState(gamma.shape[0] // 2, gamma, np.zeros(gamma.shape[0]))


def _resource_chain(r):
    big, small = math.exp(2.0 * r), math.exp(-2.0 * r)
    gamma_q = np.diag([big, small, 1.0, 1.0, small, big])
    plan = standard_noise_plan(r)
    l_full = plan.coefficient_matrix()
    l_b = np.zeros_like(l_full)
    l_b[2:4] = l_full[2:4]
    l_ac = l_full - l_b
    return _Chain(gamma_q, l_ac, l_b, plan.displacement_variance), plan


def _protocol_chains(config):
    """Chains at each stage; the B column tracks the variant's loss exposure."""
    chain, plan = _resource_chain(config.r)
    bs = beam_splitter(0.5)
    stage_resource = chain
    chain = chain.conjugate(embed_operator(bs, 3, (0, 2)))
    stage_after_ac = chain
    chain = chain.conjugate(embed_operator(bs, 3, (1, 2)))
    include_b = config.displacement_sees_loss or config.variant == "displace_B_before_BS"
    chain = chain.lose_mode(2, 1.0 - config.bob_loss, include_b=include_b)
    stage_final = chain.keep((0, 2))
    return {
        "resource": stage_resource,
        "after_bs_ac": stage_after_ac,
        "final": stage_final,
        "plan": plan,
    }


def build_resource_state(r):
    """The fully separable three-mode resource state (modes A, B, C)."""
    chain, _ = _resource_chain(r)
    return chain.state(with_b=True)


def apply_loss(state, mode, transmittance):
    """Pure loss on one mode, realized as a beam splitter onto a vacuum ancilla."""
    if not np.isfinite(transmittance) or not 0.0 <= transmittance <= 1.0:
        raise ValidationError(f"transmittance must lie in [0, 1], got {transmittance}")
    if not 0 <= mode < state.n_modes:
        raise ValidationError(f"mode index {mode} out of range for {state.n_modes} modes")
    extended = tensor(state, vacuum_state(1))
    bs = beam_splitter(transmittance)
    full = embed_operator(bs, extended.n_modes, (mode, extended.n_modes - 1))
    mixed = GaussianState(extended.n_modes, full @ extended.gamma @ full.T, full @ extended.mean)
    return reduce_to_modes(mixed, range(state.n_modes))


def _recorded_state(state, detector_gain, gain_channels=(2, 3)):
    """Covariance of the recorded outcomes when one detector's response differs."""
    if detector_gain == 1.0:
        return state
    scale = np.ones(2 * state.n_modes)
    for c in gain_channels:
        scale[c] = detector_gain
    return GaussianState(state.n_modes, state.gamma * np.outer(scale, scale), state.mean * scale)


def run_protocol(config, gain_grid=(0.05, 2.0, 200)):
    """Run the protocol analytically and certify separability at every stage.

    Returns a ProtocolTrace holding the stage states, the PPT verdicts for
    the single-mode cuts of the resource, the two cuts after the first beam
    splitter, the (pre-correction) output pair, the final pair, and the
    criterion-vs-gain curve with its optimum.
    """
    chains = _protocol_chains(config)
    resource = chains["resource"].state(with_b=True)
    after_ac = chains["after_bs_ac"].state(with_b=True)
    b_physical_at_bs = config.variant == "displace_B_before_BS"
    after_bc = chains["final"].state(with_b=b_physical_at_bs)
    final = chains["final"].state(with_b=True)

    stages = {
        "resource": resource,
        "after_bs_ac": after_ac,
        "after_bs_bc": after_bc,
        "final": final,
    }
    verdicts = {
        "resource_A_vs_rest": ppt_test(resource, 0),
        "resource_B_vs_rest": ppt_test(resource, 1),
        "resource_C_vs_rest": ppt_test(resource, 2),
        "after_bs_ac_B_vs_rest": ppt_test(after_ac, 1),
        "after_bs_ac_C_vs_rest": ppt_test(after_ac, 2),
        "after_bs_bc_B_vs_A": ppt_test(after_bc, 1),
        "final_B_vs_A": ppt_test(final, 1),
    }

    lo, hi, n_points = gain_grid
    if not (np.isfinite(lo) and np.isfinite(hi)) or not 0 < lo < hi or int(n_points) < 2:
        raise ValidationError(f"gain grid must be (lo, hi, n) with 0 < lo < hi and n >= 2, got {gain_grid}")
    recorded = _recorded_state(final, config.detector_gain)
    curve = tuple(duan_product(recorded, g) for g in np.linspace(lo, hi, int(n_points)))
    g_opt, optimum = optimize_gain(recorded, (lo, hi))
    return ProtocolTrace(
        config=config,
        stages=stages,
        verdicts=verdicts,
        criterion_curve=curve,
        g_opt=g_opt,
        optimum=optimum,
    )


# ---------------------------------------------------------------------------
# Monte Carlo ensembles
# ---------------------------------------------------------------------------


def _stream(seed, tag, index):
    key = np.array([np.uint64(seed), tag + np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _measurement_arrays(config, stage):
    """Conditional outcome model for a stage: (chol, l_ac, l_b, sd2, labels)."""
    chains = _protocol_chains(config)
    if stage == "final":
        chain = chains["final"]
        labels = ("A'", "B'")
        gain_rows = np.array([1.0, 1.0, config.detector_gain, config.detector_gain])
    elif stage == "after_bs_ac":
        chain = chains["after_bs_ac"].keep((0, 2))
        labels = ("A'", "C'")
        gain_rows = np.ones(4)
    else:
        raise ValidationError(f"stage must be 'final' or 'after_bs_ac', got {stage!r}")
    gamma_rec = chain.gamma_q * np.outer(gain_rows, gain_rows)
    chol = np.linalg.cholesky(gamma_rec)
    l_ac = OUTCOME_SCALE * gain_rows[:, None] * chain.l_ac
    l_b = OUTCOME_SCALE * gain_rows[:, None] * chain.l_b
    if config.variant == "a_posteriori" and stage == "final":
        l_present = l_ac
    else:
        l_present = l_ac + l_b
    return chol, l_ac, l_b, l_present, chain.sd2, labels


def _grid_cells(sd2, n_outer):
    """Cell centers and Gaussian weights for the discrete displacement grid."""
    if sd2 == 0.0 or n_outer == 1:
        return np.zeros((1, 2)), np.ones(1)
    sd = math.sqrt(sd2)
    axis = np.linspace(-_GRID_EXTENT_SIGMAS * sd, _GRID_EXTENT_SIGMAS * sd, n_outer)
    cx, cp = np.meshgrid(axis, axis, indexing="ij")
    centers = np.column_stack([cx.ravel(), cp.ravel()])
    weights = np.exp(-0.5 * (centers**2).sum(axis=1) / sd2)
    return centers, weights / weights.sum()


def _apportion(weights, total):
    """Largest-remainder allocation of `total` records over cell weights."""
    raw = weights * total
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _generate_grid_span(args):
    seed, chol, l_present, centers, counts, first_cell = args
    blocks_h, blocks_o = [], []
    dim = chol.shape[0]
    for k in range(centers.shape[0]):
        m = int(counts[k])
        if m == 0:
            continue
        rng = _stream(seed, _GRID_TAG, first_cell + k)
        hidden = np.repeat(centers[k][None, :], m, axis=0)
        noise = rng.standard_normal((m, dim))
        blocks_h.append(hidden)
        blocks_o.append(hidden @ l_present.T + noise @ chol.T)
    if not blocks_h:
        return np.empty((0, 2)), np.empty((0, dim))
    return np.concatenate(blocks_h), np.concatenate(blocks_o)


def _generate_continuous_span(args):
    seed, chol, l_present, sd, chunk_sizes, first_chunk = args
    blocks_h, blocks_o = [], []
    dim = chol.shape[0]
    for k, m in enumerate(chunk_sizes):
        rng = _stream(seed, _CONT_TAG, first_chunk + k)
        hidden = sd * rng.standard_normal((int(m), 2))
        noise = rng.standard_normal((int(m), dim))
        blocks_h.append(hidden)
        blocks_o.append(hidden @ l_present.T + noise @ chol.T)
    return np.concatenate(blocks_h), np.concatenate(blocks_o)


def _run_spans(worker, args_list, workers):
    if workers <= 1 or len(args_list) <= 1:
        return [worker(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args_list))


def simulate_ensemble(config, n_outer, n_inner, seed, stage="final", scheme="continuous", workers=1):
    """Draw a seeded Monte Carlo ensemble of quadrature outcomes.

    ``n_outer**2 * n_inner`` records are generated.  In the ``grid`` scheme the
    hidden displacement pairs live on an ``n_outer x n_outer`` grid of cells
    whose occupancies follow the two-dimensional Gaussian weighting of the
    displacement distribution; in the ``continuous`` scheme (default) they are
    drawn from the Gaussian directly.  Streams are keyed on
    (seed, cell or chunk index) so the result is independent of worker count.
    """
    if n_outer < 1 or n_inner < 1:
        raise ValidationError("n_outer and n_inner must be positive")
    if scheme not in ("continuous", "grid"):
        raise ValidationError(f"scheme must be 'continuous' or 'grid', got {scheme!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must fit in 64 bits")
    total = int(n_outer) ** 2 * int(n_inner)
    chol, _, _, l_present, sd2, labels = _measurement_arrays(config, stage)

    if scheme == "grid":
        centers, weights = _grid_cells(sd2, int(n_outer))
        counts = _apportion(weights, total)
        spans = []
        span_cells = max(1, len(counts) // 64)
        for start in range(0, len(counts), span_cells):
            stop = min(start + span_cells, len(counts))
            spans.append((seed, chol, l_present, centers[start:stop], counts[start:stop], start))
        results = _run_spans(_generate_grid_span, spans, workers)
    else:
        sd = math.sqrt(sd2)
        n_chunks = (total + _CONT_CHUNK - 1) // _CONT_CHUNK
        sizes = [_CONT_CHUNK] * (n_chunks - 1) + [total - _CONT_CHUNK * (n_chunks - 1)]
        spans = []
        span_chunks = max(1, n_chunks // 64)
        for start in range(0, n_chunks, span_chunks):
            stop = min(start + span_chunks, n_chunks)
            spans.append((seed, chol, l_present, sd, sizes[start:stop], start))
        results = _run_spans(_generate_continuous_span, spans, workers)

    hidden = np.concatenate([h for h, _ in results])
    outcomes = np.concatenate([o for _, o in results])
    return SampleSet(
        seed=seed,
        stage=stage,
        scheme=scheme,
        config=config,
        mode_labels=labels,
        hidden=hidden,
        outcomes=outcomes,
    )


def a_posteriori_correct(samples, plan=None, fraction=None):
    """Digitally restore mode B's displacement on recorded samples.

    Per record, mode B's own injected noise is removed from the B' outcomes
    exactly (perfect calibration), then `fraction` times the classical
    x-noise content of the A' channel is subtracted from the B' x-outcomes
    and the same fraction of the A'-channel p-noise is added to the B'
    p-outcomes.  When `fraction` is None it is solved internally so the
    corrected ensemble covariance equals the analytic output of the
    source-displacement variant; the solved value is reported in
    ``fraction_used``.
    """
    if samples.stage != "final":
        raise ValidationError("a-posteriori correction applies to the output-pair stage only")
    if samples.corrected:
        raise ValidationError("sample set is already corrected")
    hidden = samples.hidden
    if hidden.shape != (samples.n_records, 2) or not np.all(np.isfinite(hidden)):
        raise ValidationError("sample set is missing its hidden displacement values")

    config = samples.config
    _, l_ac, l_b, _, sd2, _ = _measurement_arrays(config, "final")
    if plan is not None:
        expected = standard_noise_plan(config.r)
        if not np.isclose(plan.displacement_variance, expected.displacement_variance):
            raise ValidationError("noise plan variance does not match the sampled configuration")

    # contribution of B's own injection that is physically present in the records
    b_present = np.zeros_like(l_b) if config.variant == "a_posteriori" else l_b

    if fraction is None:
        # solve f from:  -f * a_x = l_b[x_B'],  +f * a_p = l_b[p_B']
        design = np.concatenate([-l_ac[0], l_ac[1]])
        rhs = np.concatenate([l_b[2], l_b[3]])
        denom = design @ design
        if denom <= 0:
            raise ValidationError("A'-channel carries no classical noise; fraction cannot be solved")
        fraction = float(design @ rhs / denom)
        residual = np.abs(design * fraction - rhs).max()
        if residual > 1e-9 * max(1.0, np.abs(rhs).max()):
            raise ValidationError("correction geometry is inconsistent; no single fraction matches both quadratures")
    else:
        fraction = float(fraction)
        if not np.isfinite(fraction):
            raise ValidationError("fraction must be finite")

    outcomes = samples.outcomes.copy()
    outcomes[:, 2] -= hidden @ b_present[2]
    outcomes[:, 3] -= hidden @ b_present[3]
    a_x_content = hidden @ l_ac[0]
    a_p_content = hidden @ l_ac[1]
    outcomes[:, 2] -= fraction * a_x_content
    outcomes[:, 3] += fraction * a_p_content

    return replace(samples, outcomes=outcomes, corrected=True, fraction_used=fraction)


def analytic_stage_state(config, stage):
    """Analytic recorded-units covariance the ensemble estimator converges to."""
    chol, l_ac, l_b, l_present, sd2, labels = _measurement_arrays(config, stage)
    gamma = chol @ chol.T + 2.0 * sd2 * (l_present @ l_present.T)
    return GaussianState(2, gamma, np.zeros(4)), labels


def analytic_corrected_state(config):
    """Recorded-units covariance after a perfectly calibrated correction."""
    chol, l_ac, l_b, _, sd2, _ = _measurement_arrays(config, "final")
    l_tot = l_ac + l_b
    gamma = chol @ chol.T + 2.0 * sd2 * (l_tot @ l_tot.T)
    return GaussianState(2, gamma, np.zeros(4))
