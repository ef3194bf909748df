"""Dense complex linear algebra and projector/PDI calculus.

Everything lives on small finite-dimensional Hilbert spaces (target dims well
under 64), so storage is dense numpy throughout and every algebraic identity
is checked in max-entry norm against the shared tolerance bundle. Degenerate
eigenspaces are kept whole: spectral decomposition yields one rank-k projector
per distinct eigenvalue, and all equality reasoning is done on projector
matrices, never on individual eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import TOLERANCES
from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    InvalidPDIError,
    NonCommutingError,
    NonUnitDirectionError,
    NotHermitianError,
    UnknownNameError,
    VerificationFailedError,
)

__all__ = [
    "Ket",
    "Operator",
    "Projector",
    "PDI",
    "PDIValidation",
    "Observable",
    "GridWavefunction",
    "Region",
    "tensor_product",
    "tensor_state",
    "spectral_decompose",
    "pdi_validate",
    "common_refinement",
    "possesses",
    "region_projector",
    "builtin_operator",
    "commutes",
    "pdi_compatible",
    "partial_trace",
]

# Norm below which an amplitude vector is treated as the (rejected) zero vector.
ZERO_NORM_CUTOFF = 1e-12


def _frozen_vector(values) -> np.ndarray:
    vec = np.array(values, dtype=complex).reshape(-1)
    vec.setflags(write=False)
    return vec


def _frozen_matrix(values) -> np.ndarray:
    mat = np.array(values, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized state vector. Constructors normalize; zero vectors are rejected."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vec = np.array(self.amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(vec))
        if norm < ZERO_NORM_CUTOFF:
            raise ValueError("cannot normalize an (effectively) zero vector into a state")
        vec = vec / norm
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def inner(self, other: "Ket") -> complex:
        """<self|other>."""
        if self.dim != other.dim:
            raise DimensionMismatchError(f"ket dims differ: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "Projector":
        """[psi] = |psi><psi|."""
        return Projector(Operator(np.outer(self.amplitudes, self.amplitudes.conj())))


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on kets of matching dimension."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_matrix(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def _check_dim(self, other: "Operator") -> None:
        if self.dim != other.dim:
            raise DimensionMismatchError(f"operator dims differ: {self.dim} vs {other.dim}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries - other.entries)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries @ other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.entries * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.entries)

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Raw matrix-vector product; callers wrap in Ket when appropriate."""
        return self.entries @ np.asarray(vec, dtype=complex)

    def expectation(self, state: Ket) -> complex:
        if state.dim != self.dim:
            raise DimensionMismatchError(f"state dim {state.dim} vs operator dim {self.dim}")
        return complex(np.vdot(state.amplitudes, self.entries @ state.amplitudes))

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = TOLERANCES.algebraic if tol is None else tol
        return float(np.abs(self.entries - self.entries.conj().T).max()) < tol

    def is_unitary(self, tol: float | None = None) -> bool:
        tol = TOLERANCES.algebraic if tol is None else tol
        defect = self.entries.conj().T @ self.entries - np.eye(self.dim)
        return float(np.abs(defect).max()) < tol


def commutes(a: Operator, b: Operator, tol: float | None = None) -> bool:
    tol = TOLERANCES.algebraic if tol is None else tol
    if a.dim != b.dim:
        raise DimensionMismatchError(f"operator dims differ: {a.dim} vs {b.dim}")
    return float(np.abs(a.entries @ b.entries - b.entries @ a.entries).max()) < tol


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector: op = op-dagger and op squared = op, entrywise."""

    op: Operator

    def __post_init__(self):
        ent = self.op.entries
        tol = TOLERANCES.algebraic
        herm = float(np.abs(ent - ent.conj().T).max())
        idem = float(np.abs(ent @ ent - ent).max())
        if herm >= tol or idem >= tol:
            raise ValueError(
                f"not a projector: hermiticity defect {herm:.3g}, idempotency defect {idem:.3g}"
            )

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @property
    def rank(self) -> int:
        # trace of a projector is its rank
        return int(round(float(np.trace(self.entries).real)))

    def complement(self) -> "Projector":
        return Projector(Operator(np.eye(self.dim) - self.entries))


@dataclass(frozen=True)
class PDIValidation:
    """Defect report for a candidate projective decomposition of the identity."""

    orthogonality_defect: float
    idempotency_defect: float
    completeness_defect: float
    tolerance: float
    passes: bool


def pdi_validate(projectors: "PDI | Sequence[Projector]") -> PDIValidation:
    """Report max pairwise-product, idempotency, and sum-to-identity defects."""
    if isinstance(projectors, PDI):
        projs = projectors.projectors
    else:
        projs = tuple(projectors)
    if not projs:
        raise ValueError("empty projector list")
    dim = projs[0].dim
    for p in projs:
        if p.dim != dim:
            raise DimensionMismatchError("projectors have mixed dimensions")
    ortho = 0.0
    idem = 0.0
    total = np.zeros((dim, dim), dtype=complex)
    for j, p in enumerate(projs):
        ent = p.entries
        idem = max(idem, float(np.abs(ent @ ent - ent).max()))
        total += ent
        for k in range(j + 1, len(projs)):
            ortho = max(ortho, float(np.abs(ent @ projs[k].entries).max()))
    complete = float(np.abs(total - np.eye(dim)).max())
    tol = TOLERANCES.algebraic
    return PDIValidation(
        orthogonality_defect=ortho,
        idempotency_defect=idem,
        completeness_defect=complete,
        tolerance=tol,
        passes=ortho < tol and idem < tol and complete < tol,
    )


@dataclass(frozen=True, eq=False)
class PDI:
    """Ordered list of mutually orthogonal projectors summing to the identity."""

    projectors: tuple[Projector, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        projs = tuple(self.projectors)
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(len(projs)))
        else:
            labels = tuple(str(l) for l in labels)
        if len(labels) != len(projs):
            raise ValueError(f"{len(projs)} projectors but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate outcome labels")
        report = pdi_validate(projs)
        if not report.passes:
            raise InvalidPDIError(
                "not a decomposition of the identity: "
                f"orthogonality {report.orthogonality_defect:.3g}, "
                f"idempotency {report.idempotency_defect:.3g}, "
                f"completeness {report.completeness_defect:.3g} "
                f"(tolerance {report.tolerance:g})"
            )
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def __len__(self) -> int:
        return len(self.projectors)

    def items(self):
        return zip(self.labels, self.projectors)

    def by_label(self, label: str) -> Projector:
        try:
            return self.projectors[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None


@dataclass(frozen=True, eq=False)
class Observable:
    """Spectral form: strictly distinct eigenvalues, one eigenspace projector each."""

    eigenvalues: tuple[float, ...]
    pdi: PDI

    def __post_init__(self):
        vals = tuple(float(v) for v in self.eigenvalues)
        if len(vals) != len(self.pdi):
            raise ValueError("one eigenvalue per projector required")
        for hi, lo in zip(vals, vals[1:]):
            if hi - lo <= TOLERANCES.eigen_grouping:
                raise ValueError(
                    f"eigenvalues must be strictly descending with gap > {TOLERANCES.eigen_grouping:g}"
                )
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def dim(self) -> int:
        return self.pdi.dim

    def operator(self) -> Operator:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for val, proj in zip(self.eigenvalues, self.pdi.projectors):
            total += val * proj.entries
        return Operator(total)


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    """Normalized wavefunction sampled on a 1-D grid, with optional named regions."""

    amplitudes: np.ndarray
    regions: dict[str, "Region"] = field(default_factory=dict)

    def __post_init__(self):
        vec = np.array(self.amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(vec))
        if norm < ZERO_NORM_CUTOFF:
            raise ValueError("cannot normalize an (effectively) zero vector")
        vec = vec / norm
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        for name, region in self.regions.items():
            if max(region.indices, default=0) >= self.points:
                raise IndexOutOfRangeError(f"region {name!r} exceeds grid of {self.points} points")

    @property
    def points(self) -> int:
        return self.amplitudes.shape[0]

    def as_ket(self) -> Ket:
        return Ket(self.amplitudes)


@dataclass(frozen=True)
class Region:
    """Set of grid indices; duplicates are rejected rather than silently merged."""

    indices: frozenset[int]

    def __init__(self, indices):
        seq = [int(i) for i in indices]
        if len(seq) != len(set(seq)):
            raise ValueError("duplicate grid indices in region")
        if any(i < 0 for i in seq):
            raise IndexOutOfRangeError("negative grid index")
        object.__setattr__(self, "indices", frozenset(seq))


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product, left factor outermost."""
    return Operator(np.kron(a.entries, b.entries))


def tensor_state(a: Ket, b: Ket) -> Ket:
    return Ket(np.kron(a.amplitudes, b.amplitudes))


def spectral_decompose(h: Operator) -> Observable:
    """Group the spectrum of a Hermitian operator into distinct eigenspaces.

    Eigenvalues closer than the grouping tolerance merge into a single
    eigenspace so degenerate spectra do not split under floating-point
    jitter; each projector covers the full eigenspace (rank k, not k rank-1
    pieces). Eigenvalues come back sorted descending.
    """
    if not h.is_hermitian():
        defect = float(np.abs(h.entries - h.entries.conj().T).max())
        raise NotHermitianError(
            f"operator is not Hermitian (defect {defect:.3g}, tolerance {TOLERANCES.algebraic:g})"
        )
    evals, evecs = np.linalg.eigh(h.entries)
    gap = TOLERANCES.eigen_grouping
    groups: list[list[int]] = [[0]]
    for i in range(1, evals.shape[0]):
        if evals[i] - evals[groups[-1][-1]] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    values = []
    projectors = []
    for members in reversed(groups):  # descending eigenvalue order
        vecs = evecs[:, members]
        proj = vecs @ vecs.conj().T
        proj = (proj + proj.conj().T) / 2.0  # scrub rounding asymmetry
        values.append(float(np.mean(evals[members])))
        projectors.append(Projector(Operator(proj)))
    obs = Observable(tuple(values), PDI(tuple(projectors)))
    defect = float(np.abs(obs.operator().entries - h.entries).max())
    if defect >= TOLERANCES.reconstruction:
        raise VerificationFailedError(f"spectral reconstruction defect {defect:.3g}")
    return obs


def common_refinement(p: PDI, q: PDI) -> PDI:
    """All nonzero products P^j Q^k, defined only when every pair commutes.

    Labels concatenate ("jk"); rank-0 products are dropped. A noncommuting
    pair means the two decompositions admit no common refinement, which is
    reported with the offending labels.
    """
    if p.dim != q.dim:
        raise DimensionMismatchError(f"PDI dims differ: {p.dim} vs {q.dim}")
    tol = TOLERANCES.algebraic
    for lj, pj in p.items():
        for lk, qk in q.items():
            defect = float(np.abs(pj.entries @ qk.entries - qk.entries @ pj.entries).max())
            if defect >= tol:
                raise NonCommutingError(
                    f"projectors {lj!r} and {lk!r} do not commute "
                    f"(defect {defect:.3g}): no common refinement",
                    pair=(lj, lk),
                )
    projectors = []
    labels = []
    for lj, pj in p.items():
        for lk, qk in q.items():
            product = pj.entries @ qk.entries
            rank = int(round(float(np.trace(product).real)))
            if rank == 0:
                continue
            product = (product + product.conj().T) / 2.0
            projectors.append(Projector(Operator(product)))
            labels.append(f"{lj}{lk}")
    return PDI(tuple(projectors), tuple(labels))


def possesses(k: Ket, p: Projector) -> bool:
    """Property possession: P|psi> = |psi> within tolerance."""
    if k.dim != p.dim:
        raise DimensionMismatchError(f"ket dim {k.dim} vs projector dim {p.dim}")
    residual = float(np.linalg.norm(p.entries @ k.amplitudes - k.amplitudes))
    return residual < TOLERANCES.algebraic


def region_projector(grid_size: int, r: Region) -> Projector:
    """Diagonal 0/1 projector masking amplitudes outside the region."""
    if grid_size < 1:
        raise ValueError("grid size must be positive")
    if any(i >= grid_size for i in r.indices):
        raise IndexOutOfRangeError(
            f"region index {max(r.indices)} out of range for grid of {grid_size} points"
        )
    mask = np.zeros(grid_size)
    mask[sorted(r.indices)] = 1.0
    return Projector(Operator(np.diag(mask).astype(complex)))


_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def builtin_operator(name, dim: int = 2) -> Operator:
    """Named operator ("I", "X", "Y", "Z") or spin along a unit 3-direction.

    A sequence of three reals is read as a direction w and yields
    w . sigma = wx*X + wy*Y + wz*Z; the direction must be unit length to
    within 1e-9. `dim` applies only to "I".
    """
    if isinstance(name, str):
        if name == "I":
            return Operator(np.eye(dim, dtype=complex))
        if name in _PAULI:
            return Operator(_PAULI[name])
        raise UnknownNameError(f"unknown operator name {name!r}")
    w = np.asarray(name, dtype=float).reshape(-1)
    if w.shape[0] != 3:
        raise UnknownNameError("direction must have exactly three components")
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) >= 1e-9:
        raise NonUnitDirectionError(f"direction norm {norm!r} differs from 1 by >= 1e-9")
    return Operator(w[0] * _PAULI["X"] + w[1] * _PAULI["Y"] + w[2] * _PAULI["Z"])


def pdi_compatible(p: "PDI | Projector", q: "PDI | Projector") -> bool:
    """True iff every projector of p commutes with every projector of q."""

    def _projs(x):
        return x.projectors if isinstance(x, PDI) else (x,)

    tol = TOLERANCES.algebraic
    for a in _projs(p):
        for b in _projs(q):
            if a.dim != b.dim:
                raise DimensionMismatchError(f"dims differ: {a.dim} vs {b.dim}")
            defect = float(np.abs(a.entries @ b.entries - b.entries @ a.entries).max())
            if defect >= tol:
                return False
    return True


def partial_trace(op: Operator, dims: tuple[int, int], keep: int) -> Operator:
    """Trace out one factor of a bipartite operator; keep=0 keeps the left."""
    da, db = dims
    if op.dim != da * db:
        raise DimensionMismatchError(f"operator dim {op.dim} is not {da}*{db}")
    blocks = op.entries.reshape(da, db, da, db)
    if keep == 0:
        return Operator(np.einsum("ijkj->ik", blocks))
    if keep == 1:
        return Operator(np.einsum("ijil->jl", blocks))
    raise ValueError("keep must be 0 or 1")
