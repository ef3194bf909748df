"""CHSH experiment engine: operator construction, classical strategy bounds,
the fixed-setting hidden-variable model, correlator-polytope feasibility,
and EPR-Bohm singlet calculus (joint probabilities, collapse conditionals,
no-signaling verification).

Correlators are always assembled the way a laboratory would assemble them:
one Born-rule average per setting pair over the common refinement of the two
commuting one-party decompositions, then combined with the CHSH signs. The
direct operator expectation is computed alongside as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .config import TOLERANCES
from .errors import (
    DimensionMismatchError,
    MalformedLocalPDIError,
    NonCommutingABError,
    VerificationFailedError,
    ZeroProbabilityOutcomeError,
)
from .hilbert import (
    PDI,
    Ket,
    Observable,
    Operator,
    Projector,
    builtin_operator,
    partial_trace,
    spectral_decompose,
    tensor_product,
)

__all__ = [
    "CHSHOperators",
    "SettingPair",
    "LHVModel",
    "CorrelationData",
    "DeterministicStrategy",
    "CHSHValue",
    "DeterministicBoundReport",
    "FeasibilityReport",
    "CollapseResult",
    "NoSignalingReport",
    "NeonSetup",
    "chsh_operator",
    "chsh_value",
    "lhv_deterministic_bound",
    "lambda_model_fixed_settings",
    "lhv_feasibility",
    "singlet_state",
    "joint_probabilities",
    "collapse_conditional",
    "no_signaling_check",
    "neon_setup",
    "sigma_zx",
    "singlet_chsh_operators",
    "SINGLET_OPTIMAL_ANGLES_DEG",
]

# Default measurement directions in the z-x plane, degrees from +z, chosen so
# the canonical sign pattern E00+E01+E10-E11 reaches magnitude 2*sqrt(2) on
# the singlet (the assignment order matters; this one gives -2*sqrt(2)).
SINGLET_OPTIMAL_ANGLES_DEG = ((90.0, 0.0), (45.0, 135.0))

# Squares-to-identity check is looser than the algebraic tolerance because
# squaring doubles rounding noise on the +-1 eigenvalue scale.
SQUARE_IDENTITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CHSHOperators:
    """Two settings per party; each party's operators commute with the other's."""

    a0: Operator
    a1: Operator
    b0: Operator
    b1: Operator

    def __post_init__(self):
        ops = {"A0": self.a0, "A1": self.a1, "B0": self.b0, "B1": self.b1}
        dim = self.a0.dim
        eye = np.eye(dim)
        for name, op in ops.items():
            if op.dim != dim:
                raise DimensionMismatchError("CHSH operators live on one shared space")
            if not op.is_hermitian():
                raise ValueError(f"{name} is not Hermitian")
            square_defect = float(np.abs(op.entries @ op.entries - eye).max())
            if square_defect >= SQUARE_IDENTITY_TOL:
                raise ValueError(
                    f"{name} does not square to identity (defect {square_defect:.3g}); "
                    "eigenvalues must lie in {+1,-1}"
                )
        for an, a in (("A0", self.a0), ("A1", self.a1)):
            for bn, b in (("B0", self.b0), ("B1", self.b1)):
                defect = float(np.abs(a.entries @ b.entries - b.entries @ a.entries).max())
                if defect >= TOLERANCES.algebraic:
                    raise NonCommutingABError(
                        f"[{an}, {bn}] does not vanish (defect {defect:.3g})"
                    )

    @property
    def dim(self) -> int:
        return self.a0.dim

    def alice(self, setting: int) -> Operator:
        return (self.a0, self.a1)[setting]

    def bob(self, setting: int) -> Operator:
        return (self.b0, self.b1)[setting]


@dataclass(frozen=True)
class SettingPair:
    a: int
    b: int

    def __post_init__(self):
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise ValueError("settings are 0 or 1")


@dataclass(frozen=True, eq=False)
class CorrelationData:
    """2x2 correlator table E(a,b) plus the canonical CHSH combination."""

    e: np.ndarray
    chsh: float = 0.0

    def __post_init__(self):
        table = np.array(self.e, dtype=float)
        if table.shape != (2, 2):
            raise ValueError("correlator table must be 2x2")
        if float(np.abs(table).max()) > 1 + TOLERANCES.probability:
            raise ValueError(f"correlator magnitude exceeds 1: {table!r}")
        table.setflags(write=False)
        object.__setattr__(self, "e", table)
        object.__setattr__(
            self, "chsh", float(table[0, 0] + table[0, 1] + table[1, 0] - table[1, 1])
        )


@dataclass(frozen=True)
class DeterministicStrategy:
    """One +-1 assignment per setting per party."""

    a0: int
    a1: int
    b0: int
    b1: int

    def __post_init__(self):
        for v in (self.a0, self.a1, self.b0, self.b1):
            if v not in (1, -1):
                raise ValueError("strategy entries are +1 or -1")

    def chsh(self) -> int:
        return self.a0 * self.b0 + self.a0 * self.b1 + self.a1 * self.b0 - self.a1 * self.b1

    def correlators(self) -> tuple[int, int, int, int]:
        return (self.a0 * self.b0, self.a0 * self.b1, self.a1 * self.b0, self.a1 * self.b1)


@dataclass(frozen=True, eq=False)
class LHVModel:
    """Finite hidden-variable model: prior over lambda and per-setting responses.

    Response tables map a setting index to the vector Pr(outcome = +1 | lambda)
    over the lambda list; only the settings the model actually covers are
    present (a fixed-setting model carries exactly one per party).
    """

    lambdas: tuple[str, ...]
    prior: np.ndarray
    resp_a: dict[int, np.ndarray]
    resp_b: dict[int, np.ndarray]

    def __post_init__(self):
        lambdas = tuple(str(l) for l in self.lambdas)
        prior = np.array(self.prior, dtype=float).reshape(-1)
        if prior.shape[0] != len(lambdas):
            raise ValueError("one prior entry per lambda required")
        if float(prior.min()) < -TOLERANCES.probability:
            raise ValueError("negative prior probability")
        if abs(float(prior.sum()) - 1.0) > TOLERANCES.probability:
            raise ValueError(f"prior sums to {float(prior.sum())!r}, not 1")
        prior = np.clip(prior, 0.0, None)
        prior.setflags(write=False)

        def _clean(table: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
            out = {}
            for setting, resp in table.items():
                vec = np.array(resp, dtype=float).reshape(-1)
                if vec.shape[0] != len(lambdas):
                    raise ValueError("one response entry per lambda required")
                if float(vec.min()) < -TOLERANCES.probability or float(vec.max()) > 1 + TOLERANCES.probability:
                    raise ValueError("response probabilities must lie in [0, 1]")
                vec = np.clip(vec, 0.0, 1.0)
                vec.setflags(write=False)
                out[int(setting)] = vec
            return out

        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "resp_a", _clean(self.resp_a))
        object.__setattr__(self, "resp_b", _clean(self.resp_b))

    def _responses(self, s: SettingPair) -> tuple[np.ndarray, np.ndarray]:
        if s.a not in self.resp_a or s.b not in self.resp_b:
            raise ValueError(f"model does not cover setting pair ({s.a}, {s.b})")
        return self.resp_a[s.a], self.resp_b[s.b]

    def joint(self, s: SettingPair) -> np.ndarray:
        """2x2 outcome table, rows A in (+1,-1), columns B in (+1,-1)."""
        pa, pb = self._responses(s)
        w = self.prior
        table = np.array(
            [
                [float(np.sum(w * pa * pb)), float(np.sum(w * pa * (1 - pb)))],
                [float(np.sum(w * (1 - pa) * pb)), float(np.sum(w * (1 - pa) * (1 - pb)))],
            ]
        )
        return table

    def correlator(self, s: SettingPair) -> float:
        pa, pb = self._responses(s)
        return float(np.sum(self.prior * (2 * pa - 1) * (2 * pb - 1)))

    def correlation_data(self) -> CorrelationData:
        e = np.zeros((2, 2))
        for a, b in product((0, 1), repeat=2):
            e[a, b] = self.correlator(SettingPair(a, b))
        return CorrelationData(e)


def chsh_operator(ops: CHSHOperators) -> Operator:
    """S = A0 B0 + A0 B1 + A1 B0 - A1 B1."""
    for a in (ops.a0, ops.a1):
        for b in (ops.b0, ops.b1):
            defect = float(np.abs(a.entries @ b.entries - b.entries @ a.entries).max())
            if defect >= TOLERANCES.algebraic:
                raise NonCommutingABError(f"cross-party commutator defect {defect:.3g}")
    return (ops.a0 @ ops.b0) + (ops.a0 @ ops.b1) + (ops.a1 @ ops.b0) - (ops.a1 @ ops.b1)


@dataclass(frozen=True, eq=False)
class CHSHValue:
    correlations: CorrelationData
    direct_expectation: float
    observables: tuple[tuple[Observable, Observable], ...]  # ((A0,A1),(B0,B1))


def chsh_value(state: Ket, ops: CHSHOperators) -> CHSHValue:
    """Four per-setting Born averages plus the direct <S> cross-check.

    E(a,b) sums eigenvalue products over the common refinement of the two
    setting decompositions; by linearity the signed sum must match the
    direct expectation, which is verified here rather than assumed.
    """
    if state.dim != ops.dim:
        raise DimensionMismatchError(f"state dim {state.dim} vs operator dim {ops.dim}")
    obs_a = (spectral_decompose(ops.a0), spectral_decompose(ops.a1))
    obs_b = (spectral_decompose(ops.b0), spectral_decompose(ops.b1))
    psi = state.amplitudes
    e = np.zeros((2, 2))
    for a, b in product((0, 1), repeat=2):
        total = 0.0
        for fa, pa in zip(obs_a[a].eigenvalues, obs_a[a].pdi.projectors):
            for fb, pb in zip(obs_b[b].eigenvalues, obs_b[b].pdi.projectors):
                pr = float(np.vdot(psi, pa.entries @ (pb.entries @ psi)).real)
                total += fa * fb * pr
        e[a, b] = total
    corr = CorrelationData(e)
    direct = float(chsh_operator(ops).expectation(state).real)
    if abs(corr.chsh - direct) >= TOLERANCES.algebraic:
        raise VerificationFailedError(
            f"per-setting sum {corr.chsh!r} disagrees with direct expectation {direct!r}"
        )
    return CHSHValue(
        correlations=corr,
        direct_expectation=direct,
        observables=(obs_a, obs_b),
    )


@dataclass(frozen=True, eq=False)
class DeterministicBoundReport:
    max_s: float
    min_s: float
    argmax: tuple[DeterministicStrategy, ...]
    strategies: tuple[DeterministicStrategy, ...]
    mixture_check_max: float
    note: str


def lhv_deterministic_bound(mixture_trials: int = 100) -> DeterministicBoundReport:
    """Exhaustive 16-strategy enumeration of the classical CHSH bound.

    Every deterministic strategy lands on +-2; random convex mixtures are
    spot-checked as well, though convexity already makes the vertex maximum
    binding for them.
    """
    strategies = tuple(
        DeterministicStrategy(*vals) for vals in product((1, -1), repeat=4)
    )
    values = [s.chsh() for s in strategies]
    max_s = float(max(values))
    min_s = float(min(values))
    argmax = tuple(s for s, v in zip(strategies, values) if v == max_s)

    # deterministic spot check of mixed models; counters feed a tiny LCG so
    # no global RNG state is touched
    corr_vectors = np.array([s.correlators() for s in strategies], dtype=float)
    state = 0x2545F4914F6CDD1D
    mixture_max = 0.0
    for _ in range(mixture_trials):
        weights = np.empty(16)
        for i in range(16):
            state = (6364136223846793005 * state + 1442695040888963407) % 2**64
            weights[i] = (state >> 11) / 2**53
        weights /= weights.sum()
        e = weights @ corr_vectors
        mixture_max = max(mixture_max, abs(float(e[0] + e[1] + e[2] - e[3])))
    return DeterministicBoundReport(
        max_s=max_s,
        min_s=min_s,
        argmax=argmax,
        strategies=strategies,
        mixture_check_max=mixture_max,
        note=(
            "mixed models are convex combinations of the 16 deterministic "
            "strategies, so |S| cannot exceed the vertex maximum of 2"
        ),
    )


def _sign_label(value: float) -> str:
    return "+" if value > 0 else "-"


def lambda_model_fixed_settings(state: Ket, ops: CHSHOperators, s: SettingPair) -> LHVModel:
    """Hidden-variable model valid for one setting pair only.

    lambda ranges over the joint outcomes of that pair; its prior is the Born
    joint probability and the responses are deterministic readouts of the
    matching component. The model reproduces the quantum joints for its own
    settings exactly, and for nothing else, which is the whole obstruction.
    """
    if state.dim != ops.dim:
        raise DimensionMismatchError(f"state dim {state.dim} vs operator dim {ops.dim}")
    obs_a = spectral_decompose(ops.alice(s.a))
    obs_b = spectral_decompose(ops.bob(s.b))
    psi = state.amplitudes
    lambdas = []
    prior = []
    resp_a = []
    resp_b = []
    for fa, pa in zip(obs_a.eigenvalues, obs_a.pdi.projectors):
        for fb, pb in zip(obs_b.eigenvalues, obs_b.pdi.projectors):
            lambdas.append(_sign_label(fa) + _sign_label(fb))
            weight = float(np.vdot(psi, pa.entries @ (pb.entries @ psi)).real)
            prior.append(max(0.0, weight))
            resp_a.append(1.0 if fa > 0 else 0.0)
            resp_b.append(1.0 if fb > 0 else 0.0)
    model = LHVModel(
        lambdas=tuple(lambdas),
        prior=np.array(prior),
        resp_a={s.a: np.array(resp_a)},
        resp_b={s.b: np.array(resp_b)},
    )
    # the reproduction property is part of this function's contract
    born = np.zeros((2, 2))
    for fa, pa in zip(obs_a.eigenvalues, obs_a.pdi.projectors):
        for fb, pb in zip(obs_b.eigenvalues, obs_b.pdi.projectors):
            row = 0 if fa > 0 else 1
            col = 0 if fb > 0 else 1
            born[row, col] += float(np.vdot(psi, pa.entries @ (pb.entries @ psi)).real)
    defect = float(np.abs(model.joint(s) - born).max())
    if defect > TOLERANCES.probability:
        raise VerificationFailedError(f"lambda model misses the Born joints by {defect:.3g}")
    return model


# Correlator-polytope vertices: sign vectors with product +1. Each is realized
# by a deterministic strategy (global outcome flips collapse the 16 strategies
# onto these 8 correlator points).
_VERTEX_SIGNS = tuple(
    signs for signs in product((1, -1), repeat=4) if signs[0] * signs[1] * signs[2] * signs[3] == 1
)

_ODD_SIGNS = tuple(
    signs for signs in product((1, -1), repeat=4) if signs[0] * signs[1] * signs[2] * signs[3] == -1
)


def _vertex_strategy(signs: tuple[int, int, int, int]) -> DeterministicStrategy:
    # fix a0 = +1; the products then pin the rest
    b0 = signs[0]
    b1 = signs[1]
    a1 = signs[2] * b0
    return DeterministicStrategy(1, a1, b0, b1)


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    feasible: bool
    max_combination: float
    violated_signs: tuple[int, int, int, int] | None
    violated_value: float | None
    mixture: tuple[tuple[DeterministicStrategy, float], ...] | None


def lhv_feasibility(corr: CorrelationData) -> FeasibilityReport:
    """Decide whether any local hidden-variable model matches the correlators.

    The 2-setting/2-outcome correlator polytope is exactly the region where
    all eight odd-sign CHSH combinations stay within [-2, 2] (given each
    |E| <= 1, which CorrelationData enforces). When feasible, an explicit
    mixture over deterministic strategies is reconstructed by searching
    supports of at most five polytope vertices and solving the resulting
    square system, which must succeed for a point of a 4-dimensional
    polytope.
    """
    flat = corr.e.reshape(-1)
    worst_value = 0.0
    worst_signs = None
    for signs in _ODD_SIGNS:
        value = float(np.dot(signs, flat))
        if abs(value) > abs(worst_value):
            worst_value = value
            worst_signs = signs
    if abs(worst_value) > 2 + TOLERANCES.probability:
        return FeasibilityReport(
            feasible=False,
            max_combination=abs(worst_value),
            violated_signs=worst_signs,
            violated_value=worst_value,
            mixture=None,
        )

    columns = np.array([list(v) + [1.0] for v in _VERTEX_SIGNS], dtype=float).T  # 5 x 8
    target = np.concatenate([flat, [1.0]])
    for size in range(1, 6):
        for support in combinations(range(len(_VERTEX_SIGNS)), size):
            sub = columns[:, support]
            weights, *_ = np.linalg.lstsq(sub, target, rcond=None)
            if float(np.abs(sub @ weights - target).max()) > 1e-9:
                continue
            if float(weights.min()) < -1e-12:
                continue
            weights = np.clip(weights, 0.0, None)
            weights /= weights.sum()
            mixture = tuple(
                (_vertex_strategy(_VERTEX_SIGNS[idx]), float(w))
                for idx, w in zip(support, weights)
                if w > 0
            )
            return FeasibilityReport(
                feasible=True,
                max_combination=abs(worst_value),
                violated_signs=None,
                violated_value=None,
                mixture=mixture,
            )
    raise VerificationFailedError(
        "no vertex mixture found for a point satisfying all CHSH inequalities"
    )


def singlet_state() -> Ket:
    """(|01> - |10>)/sqrt(2)."""
    return Ket(np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2))


def joint_probabilities(state: Ket, alice_basis: PDI, bob_basis: PDI) -> np.ndarray:
    """Pr(j,k) = <psi| (A_j x B_k) |psi> for local decompositions A, B."""
    da, db = alice_basis.dim, bob_basis.dim
    if da * db != state.dim:
        raise DimensionMismatchError(
            f"local dims {da}x{db} do not compose to state dim {state.dim}"
        )
    psi = state.amplitudes
    table = np.zeros((len(alice_basis), len(bob_basis)))
    for j, pj in enumerate(alice_basis.projectors):
        for k, qk in enumerate(bob_basis.projectors):
            full = np.kron(pj.entries, qk.entries)
            table[j, k] = max(0.0, float(np.vdot(psi, full @ psi).real))
    if abs(float(table.sum()) - 1.0) > TOLERANCES.probability:
        raise VerificationFailedError(f"joint table sums to {float(table.sum())!r}")
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class CollapseResult:
    collapsed: Ket
    outcome_probability: float
    conditional_probability: float


def collapse_conditional(state: Ket, alice_outcome: Projector, bob_event: Projector) -> CollapseResult:
    """Collapse on Alice's local outcome, then read Bob's conditional probability.

    The collapsed state is (P_a x I)|psi> renormalized; the identity
    Pr(a) * Pr(b|a) = Pr(a, b) is what makes this a bookkeeping device rather
    than dynamics, and callers can verify it against joint_probabilities.
    """
    da, db = alice_outcome.dim, bob_event.dim
    if da * db != state.dim:
        raise DimensionMismatchError(
            f"local dims {da}x{db} do not compose to state dim {state.dim}"
        )
    psi = state.amplitudes
    lifted_a = np.kron(alice_outcome.entries, np.eye(db))
    projected = lifted_a @ psi
    pr_a = float(np.vdot(psi, projected).real)
    if pr_a <= TOLERANCES.probability:
        raise ZeroProbabilityOutcomeError(
            f"Alice outcome has probability {pr_a:.3g}; collapse undefined"
        )
    collapsed = Ket(projected / math.sqrt(pr_a))
    lifted_b = np.kron(np.eye(da), bob_event.entries)
    cond = float(np.vdot(collapsed.amplitudes, lifted_b @ collapsed.amplitudes).real)
    return CollapseResult(
        collapsed=collapsed,
        outcome_probability=pr_a,
        conditional_probability=cond,
    )


@dataclass(frozen=True, eq=False)
class NoSignalingReport:
    bob_marginals: tuple[np.ndarray, ...]
    max_deviation: float
    dynamics_max_deviation: float | None
    passes: bool
    tolerance: float


def _local_form_defect(proj: Projector, dims: tuple[int, int], side: int) -> float:
    """Max-entry distance from P x I (side 0) or I x Q (side 1) form."""
    da, db = dims
    if side == 0:
        local = partial_trace(proj.op, dims, keep=0).entries / db
        rebuilt = np.kron(local, np.eye(db))
    else:
        local = partial_trace(proj.op, dims, keep=1).entries / da
        rebuilt = np.kron(np.eye(da), local)
    return float(np.abs(rebuilt - proj.entries).max())


def no_signaling_check(
    state: Ket,
    alice_pdis: list[PDI],
    bob_pdi: PDI,
    dims: tuple[int, int],
    dynamics: tuple[Operator, Operator] | None = None,
) -> NoSignalingReport:
    """Bob's outcome distribution must not depend on Alice's choice of PDI.

    All PDIs live on the full space and must have one-sided product form,
    enforced to the algebraic tolerance. With `dynamics` given, the product
    unitary T_a x T_b is applied first and the marginals are re-verified:
    independent local dynamics must not open a signaling channel either.
    """
    da, db = dims
    if da * db != state.dim:
        raise DimensionMismatchError(f"dims {da}x{db} do not compose to state dim {state.dim}")
    if not alice_pdis:
        raise ValueError("at least one Alice PDI required")
    for pdi in alice_pdis:
        for label, proj in pdi.items():
            defect = _local_form_defect(proj, dims, side=0)
            if defect >= TOLERANCES.algebraic:
                raise MalformedLocalPDIError(
                    f"Alice projector {label!r} is not of (P x I) form (defect {defect:.3g})"
                )
    for label, proj in bob_pdi.items():
        defect = _local_form_defect(proj, dims, side=1)
        if defect >= TOLERANCES.algebraic:
            raise MalformedLocalPDIError(
                f"Bob projector {label!r} is not of (I x Q) form (defect {defect:.3g})"
            )

    def _marginals(psi: np.ndarray) -> tuple[tuple[np.ndarray, ...], float]:
        per_choice = []
        for pdi in alice_pdis:
            marginal = np.zeros(len(bob_pdi))
            for k, qk in enumerate(bob_pdi.projectors):
                for pj in pdi.projectors:
                    joint = pj.entries @ (qk.entries @ psi)
                    marginal[k] += float(np.vdot(psi, joint).real)
            marginal.setflags(write=False)
            per_choice.append(marginal)
        deviation = 0.0
        for m1, m2 in combinations(per_choice, 2):
            deviation = max(deviation, float(np.abs(m1 - m2).max()))
        return tuple(per_choice), deviation

    marginals, deviation = _marginals(state.amplitudes)
    dyn_deviation = None
    if dynamics is not None:
        ta, tb = dynamics
        if ta.dim != da or tb.dim != db:
            raise DimensionMismatchError("dynamics must act on the two local factors")
        for name, u in (("T_a", ta), ("T_b", tb)):
            if not u.is_unitary():
                raise ValueError(f"{name} is not unitary")
        evolved = np.kron(ta.entries, tb.entries) @ state.amplitudes
        _, dyn_deviation = _marginals(evolved)
    tol = TOLERANCES.probability
    passes = deviation <= tol and (dyn_deviation is None or dyn_deviation <= tol)
    return NoSignalingReport(
        bob_marginals=marginals,
        max_deviation=deviation,
        dynamics_max_deviation=dyn_deviation,
        passes=passes,
        tolerance=tol,
    )


@dataclass(frozen=True, eq=False)
class NeonSetup:
    ops: CHSHOperators
    m: tuple[tuple[Operator, Operator], tuple[Operator, Operator]]
    s: Operator
    top_eigenstate: Ket


def neon_setup() -> NeonSetup:
    """Spin-3/2 ground-state construction: two qubit factors standing in for
    the four hyperfine levels, products M_jk, the CHSH operator, and the
    eigenstate with eigenvalue 2*sqrt(2) (phase fixed so the first
    appreciable amplitude is real positive)."""
    eye2 = builtin_operator("I", 2)
    z = builtin_operator("Z")
    x = builtin_operator("X")
    ops = CHSHOperators(
        a0=tensor_product(z, eye2),
        a1=tensor_product(x, eye2),
        b0=tensor_product(eye2, x),
        b1=tensor_product(eye2, z),
    )
    m = (
        (ops.a0 @ ops.b0, ops.a0 @ ops.b1),
        (ops.a1 @ ops.b0, ops.a1 @ ops.b1),
    )
    s = chsh_operator(ops)
    obs = spectral_decompose(s)
    top_proj = obs.pdi.projectors[0]  # eigenvalues sorted descending
    if top_proj.rank != 1:
        raise VerificationFailedError("top eigenvalue of S is not simple")
    col = int(np.argmax(np.linalg.norm(top_proj.entries, axis=0)))
    vec = top_proj.entries[:, col]
    vec = vec / np.linalg.norm(vec)
    lead = int(np.argmax(np.abs(vec) > 1e-8))
    vec = vec * np.exp(-1j * np.angle(vec[lead]))
    return NeonSetup(ops=ops, m=m, s=s, top_eigenstate=Ket(vec))


def sigma_zx(theta_rad: float) -> Operator:
    """Spin component along (sin t, 0, cos t): the z-x measurement plane."""
    return builtin_operator((math.sin(theta_rad), 0.0, math.cos(theta_rad)))


def singlet_chsh_operators(
    alice_deg: tuple[float, float] = SINGLET_OPTIMAL_ANGLES_DEG[0],
    bob_deg: tuple[float, float] = SINGLET_OPTIMAL_ANGLES_DEG[1],
) -> CHSHOperators:
    """Lift z-x plane spin directions (given in degrees) to two-qubit CHSH operators."""
    eye2 = builtin_operator("I", 2)
    a0, a1 = (sigma_zx(math.radians(t)) for t in alice_deg)
    b0, b1 = (sigma_zx(math.radians(t)) for t in bob_deg)
    return CHSHOperators(
        a0=tensor_product(a0, eye2),
        a1=tensor_product(a1, eye2),
        b0=tensor_product(eye2, b0),
        b1=tensor_product(eye2, b1),
    )
