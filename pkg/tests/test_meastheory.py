import numpy as np
import pytest

from spinprod import meastheory as mt
from spinprod import qcore
from spinprod.exceptions import InvariantError, ShapeError
from spinprod.qcore import ZZ, DensityMatrix, StateVector, concurrence, fidelity, projector, purity

P00, P01, P10, P11 = (projector(b) for b in ("00", "01", "10", "11"))
I4 = np.eye(4)
BELL = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))


def ket(label):
    return StateVector.from_label(label)


def analytic_povm(theta):
    s = np.cos(2 * theta)
    return {1: (I4 + s * ZZ) / 2, -1: (I4 - s * ZZ) / 2}


class TestProductRule:
    @pytest.mark.parametrize("label,expected", [("++", 1), ("+-", -1), ("-+", -1), ("--", 1), ("+", 1), ("-", -1)])
    def test_rule(self, label, expected):
        assert mt.product_rule(label) == expected

    def test_bad_label(self):
        with pytest.raises(ValueError):
            mt.product_rule("+0")


class TestNmemOperators:
    def test_strong_limit(self):
        ops = mt.build_nmem_operators(0.0)
        np.testing.assert_allclose(ops["++"], (P00 + P11) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(ops["+-"], (P01 + P10) / np.sqrt(2), atol=1e-15)

    def test_zero_strength_limit(self):
        for op in mt.build_nmem_operators(np.pi / 4).operators:
            np.testing.assert_allclose(op, I4 / 2, atol=1e-15)

    def test_completeness_pi_over_8(self):
        ops = mt.build_nmem_operators(np.pi / 8)
        total = np.zeros((4, 4), dtype=complex)
        for m in ops.operators:
            total += m.conj().T @ m
        np.testing.assert_allclose(total, I4, atol=1e-15)

    def test_identities_exact(self, rng):
        for theta in rng.uniform(0, np.pi / 4, size=100):
            ops = mt.build_nmem_operators(theta)
            np.testing.assert_array_equal(ops["++"], ops["--"])
            np.testing.assert_array_equal(ops["+-"], ops["-+"])

    def test_range_checked(self):
        with pytest.raises(ValueError):
            mt.build_nmem_operators(1.0)

    def test_operators_frozen(self):
        ops = mt.build_nmem_operators(0.2)
        with pytest.raises(ValueError):
            ops["++"][0, 0] = 1


class TestMemOperators:
    def test_strong_limit(self):
        ops = mt.build_mem_operators(0.0)
        np.testing.assert_allclose(ops["++"], (P00 + P11) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(ops["--"], (P00 + P11) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(ops["+-"], (P01 + P10) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(ops["-+"], (P01 + P10) / np.sqrt(2), atol=1e-15)

    def test_quarter_pi(self):
        ops = mt.build_mem_operators(np.pi / 4)
        np.testing.assert_allclose(ops["++"], (P00 + P11 + P01 - P10) / 2, atol=1e-15)

    def test_completeness(self):
        total = sum(m.conj().T @ m for m in mt.build_mem_operators(0.3).operators)
        np.testing.assert_allclose(total, I4, atol=1e-15)

    def test_local_labels_differ(self):
        ops = mt.build_mem_operators(np.pi / 8)
        assert np.max(np.abs(ops["++"] - ops["--"])) > 0.1
        assert np.max(np.abs(ops["+-"] - ops["-+"])) > 0.1

    def test_incomplete_set_rejected(self):
        with pytest.raises(InvariantError):
            mt.MeasurementOperatorSet(("+",), (I4 / 2,))


class TestInstrumentAndPovm:
    def test_coarse_grain_groups_by_product(self):
        ops = mt.build_nmem_operators(0.2)
        instr = mt.coarse_grain(ops)
        assert instr.outcomes == (1, -1)
        assert len(instr.kraus_sets[1]) == 2
        np.testing.assert_array_equal(instr.kraus_sets[1][0], ops["++"])
        np.testing.assert_array_equal(instr.kraus_sets[1][1], ops["--"])

    def test_coarse_grain_with_explicit_map(self):
        ops = mt.build_nmem_operators(0.2)
        with pytest.raises(ValueError):
            mt.coarse_grain(ops, {"++": 1, "--": 1})
        instr = mt.coarse_grain(ops, {"++": 1, "--": 1, "+-": -1, "-+": -1})
        assert instr.outcomes == (1, -1)

    def test_identity_channel(self, rng):
        instr = mt.identity_instrument()
        rho = qcore.random_statevector(2, rng).to_density()
        out = mt.apply_instrument(instr, rho)
        assert out[1].probability == pytest.approx(1)
        assert out[1].state.allclose(rho, atol=1e-14)
        np.testing.assert_allclose(mt.povm_of(instr)[1], I4)

    def test_mem_instrument_trace_preserving(self):
        instr = mt.coarse_grain(mt.build_mem_operators(np.pi / 8))
        kraus = [k for ks in instr.kraus_sets.values() for k in ks]
        assert mt.completeness_residual(kraus) < 1e-12

    @pytest.mark.parametrize("theta", np.linspace(0, np.pi / 4, 9))
    def test_nmem_povm_law(self, theta):
        povm = mt.povm_of(mt.coarse_grain(mt.build_nmem_operators(theta)))
        for r, e in analytic_povm(theta).items():
            np.testing.assert_allclose(povm[r], e, atol=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 8, 0.7, -0.4])
    def test_mem_povm_law(self, theta):
        povm = mt.povm_of(mt.coarse_grain(mt.build_mem_operators(theta)))
        for r, e in analytic_povm(theta).items():
            np.testing.assert_allclose(povm[r], e, atol=1e-12)

    def test_bad_povm_rejected(self):
        with pytest.raises(InvariantError):
            mt.POVM({1: I4 / 2, -1: I4 / 3})


class TestStrength:
    def test_strong(self):
        assert mt.strength_of(mt.povm_of(mt.coarse_grain(mt.build_nmem_operators(0)))) == pytest.approx(1, abs=1e-14)

    def test_none(self):
        assert mt.strength_of(mt.povm_of(mt.coarse_grain(mt.build_nmem_operators(np.pi / 4)))) == pytest.approx(0, abs=1e-14)

    def test_pi_over_8(self):
        povm = mt.povm_of(mt.coarse_grain(mt.build_nmem_operators(np.pi / 8)))
        assert mt.strength_of(povm) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)

    def test_shape_error(self):
        za = np.kron(qcore.Z, qcore.I2)
        povm = mt.POVM({1: (I4 + 0.5 * za) / 2, -1: (I4 - 0.5 * za) / 2})
        with pytest.raises(ShapeError):
            mt.strength_of(povm)

    def test_single_qubit_observable(self):
        povm = mt.POVM({1: (np.eye(2) + 0.3 * qcore.Z) / 2, -1: (np.eye(2) - 0.3 * qcore.Z) / 2})
        assert mt.strength_of(povm, qcore.Z) == pytest.approx(0.3)


class TestApplyInstrument:
    def test_eigenstate_statistics(self):
        theta = np.pi / 8
        out = mt.apply_instrument(mt.coarse_grain(mt.build_nmem_operators(theta)), ket("00"))
        assert out[1].probability == pytest.approx(0.5 * (1 + np.sqrt(2) / 2), abs=1e-12)
        assert out[1].state.allclose(ket("00").to_density(), atol=1e-12)
        assert out[-1].state.allclose(ket("00").to_density(), atol=1e-12)

    def test_maximally_mixed(self):
        for instr in (
            mt.coarse_grain(mt.build_nmem_operators(0.1)),
            mt.coarse_grain(mt.build_mem_operators(0.9)),
        ):
            out = mt.apply_instrument(instr, DensityMatrix.maximally_mixed(2))
            assert out[1].probability == pytest.approx(0.5) and out[-1].probability == pytest.approx(0.5)

    def test_mem_zero_strength_purity_half(self):
        out = mt.apply_instrument(mt.coarse_grain(mt.build_mem_operators(np.pi / 4)), ket("++"))
        for r in (1, -1):
            assert purity(out[r].state) == pytest.approx(0.5, abs=1e-12)
        assert mt.purity_drop(out, ket("++")) == pytest.approx(0.5, abs=1e-12)

    def test_zero_probability_flagged(self):
        out = mt.apply_instrument(mt.coarse_grain(mt.build_nmem_operators(0.0)), ket("01"))
        assert out[1].probability == pytest.approx(0, abs=1e-15)
        assert not out[1].possible and out[-1].possible

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mt.apply_instrument(mt.identity_instrument(4), ket("0"))


class TestNmemProperties:
    def test_effective_operators(self, rng):
        for _ in range(50):
            theta = rng.uniform(0, np.pi / 4)
            instr = mt.coarse_grain(mt.build_nmem_operators(theta))
            eff = mt.nmem_effective_operators(theta)
            psi = qcore.random_statevector(2, rng)
            rho = psi.to_density().matrix
            out = mt.apply_instrument(instr, psi)
            for r in (1, -1):
                branch = eff[r] @ rho @ eff[r].conj().T
                np.testing.assert_allclose(out[r].state.matrix, branch / np.trace(branch), atol=1e-12)

    @pytest.mark.parametrize("label", ["00", "01", "10", "11"])
    def test_eigenstates_unchanged(self, label):
        psi = ket(label)
        for theta in np.linspace(0, np.pi / 4, 6)[:-1]:
            for out in mt.apply_instrument(mt.coarse_grain(mt.build_nmem_operators(theta)), psi).values():
                if out.possible:
                    assert fidelity(out.state, psi) > 1 - 1e-12

    @pytest.mark.parametrize("theta", [0.0, 0.2, np.pi / 8, 0.7])
    def test_not_entanglement_breaking(self, theta):
        out = mt.apply_instrument(mt.coarse_grain(mt.build_nmem_operators(theta)), BELL)[1]
        assert purity(out.state) == pytest.approx(1, abs=1e-12)
        vals, vecs = np.linalg.eigh(out.state.matrix)
        assert concurrence(StateVector(vecs[:, -1])) == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("theta", np.linspace(0, np.pi / 4, 11))
    def test_mem_inefficiency_closed_form(self, theta):
        s = np.cos(2 * theta)
        out = mt.apply_instrument(mt.coarse_grain(mt.build_mem_operators(theta)), ket("++"))
        assert mt.purity_drop(out, ket("++")) == pytest.approx((1 - s * s) / 2, abs=1e-10)


class TestSuperoperators:
    def test_superoperator_matches_sandwich(self, rng):
        kraus = mt.build_mem_operators(0.4).operators
        psi = qcore.random_statevector(2, rng)
        rho = psi.to_density().matrix
        direct = sum(k @ rho @ k.conj().T for k in kraus)
        np.testing.assert_allclose((mt.superoperator(kraus) @ rho.reshape(-1)).reshape(4, 4), direct, atol=1e-14)

    def test_kraus_roundtrip(self):
        instr = mt.coarse_grain(mt.build_mem_operators(0.4))
        for r, ks in instr.kraus_sets.items():
            back = mt.kraus_from_superoperator(mt.superoperator(ks))
            np.testing.assert_allclose(mt.superoperator(back), mt.superoperator(ks), atol=1e-13)

    def test_distance_requires_same_outcomes(self):
        with pytest.raises(ValueError):
            mt.superoperator_distance({1: np.eye(16)}, {1: np.eye(16), -1: np.eye(16)})
