import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdtlab.errors import ConfigurationError, ParseError, ValidationError
from sdtlab.optics import (
    BHFO,
    INTERF_P1,
    INTERF_P2,
    TomographySetting,
    build_projector_set,
    catalog_operators_1296,
    catalog_operators_36,
    derive_setting,
    detector_mapping_36,
    format_settings_table,
    joint_operators,
    joint_settings_1296,
    jones_hwp,
    jones_qwp,
    measurement_vectors,
    parse_settings_table,
    pol_time_ket,
    settings_for_36,
    standard_36_targets,
    support_overlap,
    verify_catalog,
)

from conftest import angles

six_angles = st.tuples(*([angles] * 6))


def random_setting(a):
    return TomographySetting(*a)


class TestWaveplates:
    def test_hwp_zero(self):
        assert np.allclose(jones_hwp(0), np.diag([1, -1]))

    def test_hwp_22_5(self):
        assert np.allclose(jones_hwp(np.pi / 8), np.array([[1, -1], [-1, -1]]) / np.sqrt(2))

    def test_qwp_zero(self):
        assert np.allclose(jones_qwp(0), np.diag([1, 1j]))

    def test_qwp_45(self):
        h = (1 + 1j) / 2
        o = (1j - 1) / 2
        assert np.allclose(jones_qwp(np.pi / 4), [[h, o], [o, h]])

    @settings(max_examples=1000)
    @given(angles)
    def test_hwp_unitary_and_involutive(self, a):
        m = jones_hwp(a)
        assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-12)
        assert np.allclose(m @ m, np.eye(2), atol=1e-12)

    @settings(max_examples=1000)
    @given(angles)
    def test_qwp_unitary_fourth_power_scalar(self, b):
        m = jones_qwp(b)
        assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-12)
        m4 = np.linalg.matrix_power(m, 4)
        assert np.allclose(m4, m4[0, 0] * np.eye(2), atol=1e-12)


class TestInterferometer:
    def test_port_isometry(self):
        assert np.allclose(INTERF_P1.conj().T @ INTERF_P1, np.eye(2))
        assert np.allclose(INTERF_P2.conj().T @ INTERF_P2, np.eye(2))

    def test_ports_partition(self):
        total = INTERF_P1 @ INTERF_P1.conj().T + INTERF_P2 @ INTERF_P2.conj().T
        assert np.allclose(total, np.eye(4))

    def test_bhfo_diagonal(self):
        assert np.allclose(BHFO, np.diag([1, -1, 1, -1]))


class TestProjectors:
    def test_zero_angles_b1_is_ht1(self):
        v = measurement_vectors(TomographySetting())[0]
        assert support_overlap(v, pol_time_ket("H", 1)) == pytest.approx(1.0)

    def test_h_polarizer_kills_v(self):
        s = TomographySetting(0.3, 0.2, 0.5, 0.1, 0.7, 0.4, t_h=1.0, t_v=0.0)
        for op in build_projector_set(s).operators:
            for ket in (pol_time_ket("V", 1), pol_time_ket("V", 2)):
                assert np.allclose(op @ ket, 0)

    @settings(max_examples=1000)
    @given(six_angles)
    def test_completeness(self, a):
        ops = build_projector_set(random_setting(a)).operators
        assert np.allclose(sum(ops), np.eye(4), atol=1e-10)

    @settings(max_examples=1000)
    @given(six_angles)
    def test_rank_one_psd(self, a):
        for op in build_projector_set(random_setting(a)).operators:
            assert np.allclose(op, op.conj().T)
            w = np.linalg.eigvalsh(op)
            assert w.min() > -1e-12
            assert np.sum(w > 1e-9) == 1

    def test_invalid_transmission(self):
        with pytest.raises(ValidationError):
            TomographySetting(t_h=1.5)
        with pytest.raises(ValidationError):
            TomographySetting(duration_scale=0)


class TestTargets:
    def test_count_and_first(self):
        t = standard_36_targets()
        assert len(t) == 36
        assert np.allclose(t[0].state.amplitudes, [1, 0, 0, 0])

    def test_d_t1(self):
        assert np.allclose(pol_time_ket("D", 1), np.array([1, 1, 0, 0]) / np.sqrt(2))

    def test_rt1_plus_i_lt2(self):
        # R = (H - iV)/sqrt2, L = (H + iV)/sqrt2
        ket = (pol_time_ket("R", 1) + 1j * pol_time_ket("L", 2)) / np.sqrt(2)
        assert np.allclose(ket, np.array([1, -1j, 1j, -1]) / 2)
        labels = {x.label: x for x in standard_36_targets()}
        assert np.allclose(labels["Rt1+iLt2"].state.amplitudes, ket)

    def test_all_distinct_unit(self):
        kets = np.array([t.state.amplitudes for t in standard_36_targets()])
        assert np.allclose(np.linalg.norm(kets, axis=1), 1)
        g = np.abs(kets.conj() @ kets.T) ** 2
        assert np.all(g[~np.eye(36, dtype=bool)] < 1 - 1e-6)

    def test_informationally_complete(self):
        kets = [t.state.amplitudes for t in standard_36_targets()]
        m = np.array([np.outer(k, k.conj()).ravel() for k in kets])
        assert np.linalg.matrix_rank(m) == 16


class TestCatalog:
    def test_length_and_polarizer_doubling(self):
        s = settings_for_36()
        assert len(s) == 36
        pol = [x for x in s if x.uses_polarizer]
        assert len(pol) == 8
        assert all(x.duration_scale == 2 for x in pol)
        assert all(x.duration_scale == 1 for x in s if not x.uses_polarizer)

    def test_every_setting_reproduces_target(self):
        for s, t in zip(settings_for_36(), standard_36_targets()):
            assert support_overlap(measurement_vectors(s)[0], t.state.amplitudes) > 1 - 1e-9

    def test_frozen_matches_fresh_derivation(self):
        # the data file is a cache of the derivation, not an independent source
        for s, t in zip(settings_for_36(), standard_36_targets()):
            d = derive_setting(t.state.amplitudes)
            assert support_overlap(measurement_vectors(d)[0], t.state.amplitudes) > 1 - 1e-9
            assert np.allclose(s.angles_deg(), d.angles_deg(), atol=1e-5)

    def test_ht1_setting_has_hwp2_at_zero(self):
        assert settings_for_36()[0].alpha2 == pytest.approx(0.0)

    def test_time_bin_superpositions_use_22_5(self):
        for s, t in zip(settings_for_36(), standard_36_targets()):
            a = t.state.amplitudes
            if np.linalg.norm(a[:2]) > 0 and np.linalg.norm(a[2:]) > 0:
                assert abs(np.degrees(s.alpha2)) == pytest.approx(22.5, abs=1e-6)

    def test_round_trip_text(self):
        s = settings_for_36()
        back = parse_settings_table(format_settings_table(s))
        for a, b in zip(s, back):
            assert np.allclose(a.angles_deg(), b.angles_deg(), atol=1e-6)
            assert (a.t_h, a.t_v, a.duration_scale) == (b.t_h, b.t_v, b.duration_scale)

    def test_bad_version(self):
        text = format_settings_table(settings_for_36()).replace("v1", "v9", 1)
        with pytest.raises(ParseError):
            parse_settings_table(text)

    def test_bad_row_reports_line(self):
        lines = format_settings_table(settings_for_36()).splitlines()
        lines[4] = "3,abc"
        with pytest.raises(ParseError) as exc:
            parse_settings_table("\n".join(lines))
        assert exc.value.line == 5

    def test_verify_rejects_wrong_catalog(self):
        s = settings_for_36()
        with pytest.raises(ConfigurationError):
            verify_catalog(s[1:] + s[:1])

    def test_detector_mapping_covers_all_targets(self):
        m = detector_mapping_36()
        assert set(m.values()) == set(range(1, 37))
        for si in range(1, 37):
            assert m[(si, 1)] == si

    def test_operator_array_shape(self):
        assert catalog_operators_36().shape == (36, 4, 4, 4)


class TestJoint:
    def test_count(self):
        assert len(joint_settings_1296()) == 1296

    def test_first_is_product(self):
        j = joint_settings_1296()[0]
        a = build_projector_set(j.alice).operators[0]
        b = build_projector_set(j.bob).operators[0]
        assert np.allclose(joint_operators(j)[0, 0], np.kron(a, b))

    def test_catalog_matches_joint_operators(self):
        j = joint_settings_1296()[100]
        assert np.allclose(catalog_operators_1296()[100], joint_operators(j))

    def test_informational_completeness(self):
        ops = catalog_operators_1296().reshape(-1, 256)
        assert np.linalg.matrix_rank(ops) == 256
