"""History families, chain vectors, consistency, and the measurement model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histories_kit.config import TOLERANCES
from histories_kit.errors import (
    DimensionMismatchError,
    InconsistentFamilyError,
    PointerTooSmallError,
    UnknownLabelError,
    ZeroProbabilityConditionError,
)
from histories_kit.hilbert import (
    PDI,
    Ket,
    Operator,
    builtin_operator,
    spectral_decompose,
    tensor_state,
)
from histories_kit.histories import (
    HistoryFamily,
    TimeGrid,
    build_measurement_model,
    chain_vector,
    conditional_probability,
    consistency_check,
    family_probabilities,
    standard_families,
)

Z = builtin_operator("Z")
EYE2 = Operator(np.eye(2, dtype=complex))


def ket(*amps):
    return Ket(np.array(amps, dtype=complex))


def z_model(pointer_dim=3):
    return build_measurement_model(spectral_decompose(Z), pointer_dim=pointer_dim)


def interference_family():
    plus = ket(1, 1)
    minus = ket(1, -1)
    return HistoryFamily(
        grid=TimeGrid(("t0", "t1", "t2"), (EYE2, EYE2)),
        initial=ket(1, 0),
        event_pdis=(
            PDI([plus.projector(), minus.projector()], labels=("plus", "minus")),
            PDI([ket(1, 0).projector(), ket(0, 1).projector()], labels=("0", "1")),
        ),
    )


class TestTimeGrid:
    def test_requires_two_times(self):
        with pytest.raises(ValueError):
            TimeGrid(("t0",), ())

    def test_propagator_count(self):
        with pytest.raises(ValueError):
            TimeGrid(("t0", "t1"), ())

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            TimeGrid(("t0", "t1"), (Operator(np.diag([1.0, 0.5]).astype(complex)),))


class TestHistoryFamily:
    def test_pdi_count_must_match_grid(self):
        with pytest.raises(ValueError):
            HistoryFamily(
                grid=TimeGrid(("t0", "t1", "t2"), (EYE2, EYE2)),
                initial=ket(1, 0),
                event_pdis=(spectral_decompose(Z).pdi,),
            )

    def test_explicit_subset_validation(self):
        grid = TimeGrid(("t0", "t1"), (EYE2,))
        pdi = spectral_decompose(Z).pdi
        with pytest.raises(UnknownLabelError):
            HistoryFamily(grid, ket(1, 0), (pdi,), histories=(("nope",),))
        with pytest.raises(ValueError):
            HistoryFamily(grid, ket(1, 0), (pdi,), histories=(("0",), ("0",)))

    def test_all_histories_cartesian(self):
        fam = interference_family()
        assert len(fam.all_histories()) == 4
        assert fam.exhaustive


class TestChainVector:
    def test_eigenstate_projector_returns_initial(self):
        # single-time family whose event is the initial state's own projector
        fam = HistoryFamily(
            grid=TimeGrid(("t0", "t1"), (EYE2,)),
            initial=ket(1, 0),
            event_pdis=(spectral_decompose(Z).pdi,),
        )
        vec = chain_vector(fam, ("0",))
        assert np.allclose(vec, fam.initial.amplitudes)

    def test_propagator_applied_before_event(self):
        x = builtin_operator("X")
        fam = HistoryFamily(
            grid=TimeGrid(("t0", "t1"), (x,)),
            initial=ket(1, 0),
            event_pdis=(spectral_decompose(Z).pdi,),
        )
        assert np.linalg.norm(chain_vector(fam, ("0",))) < 1e-15
        assert abs(np.linalg.norm(chain_vector(fam, ("1",))) - 1) < 1e-12

    def test_unknown_label(self):
        fam = interference_family()
        with pytest.raises(UnknownLabelError):
            chain_vector(fam, ("plus", "weird"))
        with pytest.raises(UnknownLabelError):
            chain_vector(fam, ("plus",))


class TestConsistency:
    def test_interference_family_is_inconsistent(self):
        report = consistency_check(interference_family())
        assert not report.consistent
        assert abs(report.max_offdiag - 0.25) < 1e-12
        assert report.tolerance == TOLERANCES.algebraic

    def test_gram_shape_and_diagonal(self):
        report = consistency_check(interference_family())
        assert report.gram.shape == (4, 4)
        diag = np.diag(report.gram).real
        assert diag.min() >= -1e-15
        assert abs(diag.sum() - 1) < 1e-12

    def test_probabilities_refused_when_inconsistent(self):
        with pytest.raises(InconsistentFamilyError) as exc:
            family_probabilities(interference_family())
        assert exc.value.report.max_offdiag > 0.2

    def test_orthogonal_outcomes_consistent(self):
        fam = HistoryFamily(
            grid=TimeGrid(("t0", "t1"), (EYE2,)),
            initial=ket(1, 1),
            event_pdis=(spectral_decompose(Z).pdi,),
        )
        report = consistency_check(fam)
        assert report.consistent
        table = family_probabilities(fam)
        assert abs(table.probabilities[("0",)] - 0.5) < 1e-12
        assert abs(table.probabilities[("1",)] - 0.5) < 1e-12
        assert table.exhaustive and table.omitted == 0.0


class TestConditional:
    def test_prediction_and_retrodiction(self):
        model = z_model()
        fams = standard_families(model, ket(0.6, 0.8))
        # prediction: pointer outcome given system eigenspace at t1
        assert conditional_probability(fams.f2, given=(1, "0"), target=(2, "0")) == pytest.approx(1.0)
        # retrodiction: eigenspace at t1 given pointer at t2
        assert conditional_probability(fams.f2, given=(2, "1"), target=(1, "1")) == pytest.approx(1.0)
        assert conditional_probability(fams.f2, given=(2, "1"), target=(1, "0")) == pytest.approx(0.0)

    def test_zero_probability_condition(self):
        model = z_model()
        fams = standard_families(model, ket(0.6, 0.8))
        with pytest.raises(ZeroProbabilityConditionError):
            conditional_probability(fams.f2, given=(2, "rest"), target=(1, "0"))

    def test_event_validation(self):
        model = z_model()
        fams = standard_families(model, ket(0.6, 0.8))
        with pytest.raises(UnknownLabelError):
            conditional_probability(fams.f2, given=(3, "0"), target=(1, "0"))
        with pytest.raises(UnknownLabelError):
            conditional_probability(fams.f2, given=(2, "zzz"), target=(1, "0"))


class TestMeasurementModel:
    def test_pointer_must_exceed_outcomes(self):
        with pytest.raises(PointerTooSmallError):
            build_measurement_model(spectral_decompose(Z), pointer_dim=2)

    def test_interaction_is_unitary(self):
        model = z_model(pointer_dim=5)
        t = model.t.entries
        assert np.abs(t.conj().T @ t - np.eye(model.full_dim)).max() < 1e-12

    def test_pointer_records_outcome(self):
        # T (|phi_j> x |Phi_0>) = |phi_j> x |Phi_{j+1}>
        model = z_model()
        ready = model.pointer_states[0].amplitudes
        for j, proj in enumerate(model.observable.pdi.projectors):
            phi_j = proj.entries[:, np.argmax(np.diag(proj.entries.real))]
            before = np.kron(phi_j, ready)
            after = model.pointer_states[j + 1].amplitudes
            expected = np.kron(phi_j, after)
            assert np.abs(model.t.entries @ before - expected).max() < 1e-12

    def test_pointer_pdi_has_rest(self):
        model = z_model(pointer_dim=4)
        assert model.pointer_pdi.labels == ("0", "1", "rest")
        assert model.pointer_pdi.by_label("rest").rank == 2 * (4 - 2)


class TestStandardFamilies:
    def test_unitary_family_single_history(self):
        fams = standard_families(z_model(), ket(0.6, 0.8))
        table = family_probabilities(fams.f_u)
        assert table.probabilities[("psi1", "psi2")] == pytest.approx(1.0, abs=1e-12)
        assert all(
            p == pytest.approx(0.0, abs=1e-12)
            for h, p in table.probabilities.items()
            if h != ("psi1", "psi2")
        )

    def test_f1_pointer_marginals(self):
        fams = standard_families(z_model(), ket(1, 1))
        table = family_probabilities(fams.f1)
        assert not table.exhaustive
        assert table.omitted == pytest.approx(0.0, abs=1e-12)
        assert table.probabilities[("psi0", "0")] == pytest.approx(0.5, abs=1e-12)
        assert table.probabilities[("psi0", "1")] == pytest.approx(0.5, abs=1e-12)

    def test_f2_diagonal(self):
        c0, c1 = 0.6, 0.8
        fams = standard_families(z_model(), ket(c0, c1))
        table = family_probabilities(fams.f2)
        assert table.probabilities[("0", "0")] == pytest.approx(c0**2, abs=1e-12)
        assert table.probabilities[("1", "1")] == pytest.approx(c1**2, abs=1e-12)
        assert table.probabilities[("0", "1")] == pytest.approx(0.0, abs=1e-12)
        assert table.probabilities[("1", "0")] == pytest.approx(0.0, abs=1e-12)

    def test_eigenstate_input_concentrates(self):
        fams = standard_families(z_model(), ket(1, 0))
        table = family_probabilities(fams.f2)
        assert table.probabilities[("0", "0")] == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_f2_matches_born_weights_on_random_states(self, seed):
        rng = np.random.default_rng(seed)
        amps = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi = Ket(amps)
        fams = standard_families(z_model(), psi)
        table = family_probabilities(fams.f2)
        weights = np.abs(psi.amplitudes) ** 2
        for j in range(2):
            for k in range(2):
                expected = weights[j] if j == k else 0.0
                assert table.probabilities[(str(j), str(k))] == pytest.approx(
                    expected, abs=1e-10
                )

    def test_three_outcome_observable(self):
        diag = Operator(np.diag([1.0, 0.0, -1.0]).astype(complex))
        model = build_measurement_model(spectral_decompose(diag), pointer_dim=4)
        psi = ket(2, 1, 2)  # weights 4/9, 1/9, 4/9
        fams = standard_families(model, psi)
        table = family_probabilities(fams.f2)
        assert table.probabilities[("0", "0")] == pytest.approx(4 / 9, abs=1e-12)
        assert table.probabilities[("1", "1")] == pytest.approx(1 / 9, abs=1e-12)
        assert table.probabilities[("2", "2")] == pytest.approx(4 / 9, abs=1e-12)
