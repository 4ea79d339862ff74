"""Threshold/gain/sensitivity model behavior against hand-computed values.

Expected numbers were derived by evaluating the closed-form expressions
independently (see comments); measured cross-checks come from the study
mean-threshold table shipped in attnfov.data.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from attnfov.csf import (
    AttentionLevel,
    ConditionModels,
    CorticalFrequencyCsf,
    CorticalMagnification,
    DEFAULT_CONDITION_MODELS,
    DEFAULT_UNIFIED_MODEL,
    ExtrapolationWarning,
    StimulusReference,
    ThresholdModel,
    attention_gain,
    lerp,
    scale_sensitivity,
    scale_stimulus,
    threshold_per_condition,
    unified_threshold,
)
from attnfov.data import MAIN_STUDY_ECCENTRICITIES, MAIN_STUDY_THRESHOLDS

MODELS = DEFAULT_CONDITION_MODELS

ECC_RANGE = st.floats(min_value=7.0, max_value=21.0)


class TestAttentionLevel:
    def test_continuous_mapping(self):
        assert AttentionLevel.LOW.as_continuous == 0.0
        assert AttentionLevel.MEDIUM.as_continuous == 0.5
        assert AttentionLevel.HIGH.as_continuous == 1.0

    def test_parse(self):
        assert AttentionLevel.parse("High") is AttentionLevel.HIGH
        assert AttentionLevel.parse(AttentionLevel.LOW) is AttentionLevel.LOW


class TestThresholdPerCondition:
    def test_low_at_7(self):
        # 9.672e-4 * sqrt(7) + 2.741e-2 = 0.029969; measured mean 0.0297
        assert threshold_per_condition(MODELS.low, 7.0) == pytest.approx(0.02997, abs=5e-6)

    def test_medium_at_14(self):
        # 2.737e-2 * sqrt(14) - 1.620e-2 = 0.086209; measured mean 0.0864
        assert threshold_per_condition(MODELS.medium, 14.0) == pytest.approx(0.08621, abs=5e-6)

    def test_intercept_at_zero(self):
        model = ThresholdModel(p0=0.01, p1=0.02)
        with pytest.warns(ExtrapolationWarning):
            assert model.threshold(0.0) == pytest.approx(0.02)

    def test_extrapolation_flag(self):
        with pytest.warns(ExtrapolationWarning):
            MODELS.low.threshold(25.0)
        with pytest.warns(ExtrapolationWarning):
            MODELS.low.threshold(2.0)

    def test_no_flag_inside_range(self, recwarn):
        MODELS.low.threshold(np.array([7.0, 14.0, 21.0]))
        assert not [w for w in recwarn if issubclass(w.category, ExtrapolationWarning)]

    def test_negative_eccentricity_rejected(self):
        with pytest.raises(ValueError):
            MODELS.low.threshold(-1.0)

    @given(e=ECC_RANGE)
    def test_positive_on_measured_range(self, e):
        for model in (MODELS.low, MODELS.medium, MODELS.high):
            assert model.threshold(e) > 0

    @given(e1=ECC_RANGE, e2=ECC_RANGE)
    def test_strictly_increasing_when_p0_positive(self, e1, e2):
        if e1 == e2:
            return
        lo, hi = sorted((e1, e2))
        for model in (MODELS.medium, MODELS.high):
            assert model.threshold(hi) > model.threshold(lo)


class TestAttentionGain:
    def test_low_is_exactly_one(self):
        assert attention_gain(MODELS, "low", 13.7) == 1.0

    def test_medium_near_2x_at_7(self):
        # t_med(7)/t_low(7) = 0.056218 / 0.029969
        assert attention_gain(MODELS, "medium", 7.0) == pytest.approx(1.876, abs=5e-4)

    def test_medium_over_3x_at_21(self):
        assert attention_gain(MODELS, "medium", 21.0) == pytest.approx(3.430, abs=5e-4)

    def test_high_at_21(self):
        assert attention_gain(MODELS, "high", 21.0) == pytest.approx(4.412, abs=5e-4)

    def test_division_guard(self):
        bad = ConditionModels(
            low=ThresholdModel(p0=-0.5, p1=0.1),
            medium=MODELS.medium,
            high=MODELS.high,
        )
        with pytest.raises(ValueError, match="positive"):
            with pytest.warns(ExtrapolationWarning):
                attention_gain(bad, "medium", 1.0)

    @given(e1=ECC_RANGE, e2=ECC_RANGE)
    def test_gain_increases_with_eccentricity(self, e1, e2):
        lo, hi = sorted((e1, e2))
        if hi - lo < 1e-6:
            return
        for a in ("medium", "high"):
            assert attention_gain(MODELS, a, hi) > attention_gain(MODELS, a, lo)

    @given(e=ECC_RANGE)
    def test_condition_ordering(self, e):
        t_low = MODELS.low.threshold(e)
        t_med = MODELS.medium.threshold(e)
        t_high = MODELS.high.threshold(e)
        assert t_high > t_med > t_low


class _ConstantCsf:
    def __init__(self, value):
        self.value = value

    def sensitivity(self, frequency_cpd, eccentricity_deg, luminance_cdm2=28.0, area_deg2=1.0):
        return self.value


class TestScaleSensitivity:
    def test_low_returns_baseline_exactly(self):
        s = scale_sensitivity(_ConstantCsf(100.0), MODELS, "low", 15.0, 2.0)
        assert s == 100.0

    def test_medium_at_21(self):
        s = scale_sensitivity(_ConstantCsf(100.0), MODELS, "medium", 21.0, 2.0)
        assert s == pytest.approx(29.15, abs=0.01)

    def test_high_at_21(self):
        s = scale_sensitivity(_ConstantCsf(100.0), MODELS, "high", 21.0, 2.0)
        assert s == pytest.approx(22.67, abs=0.01)


class TestUnifiedModel:
    def test_intercept_low(self):
        # at e=7 the slope term vanishes; a_c=0 leaves i0
        assert unified_threshold(DEFAULT_UNIFIED_MODEL, 7.0, 0.0) == pytest.approx(0.0285)

    def test_intercept_high(self):
        assert unified_threshold(DEFAULT_UNIFIED_MODEL, 7.0, 1.0) == pytest.approx(0.0844)

    def test_far_high(self):
        # 0.0307*(sqrt(21)-sqrt(7)) + 0.0844 = 0.14386
        assert unified_threshold(DEFAULT_UNIFIED_MODEL, 21.0, 1.0) == pytest.approx(
            0.14386, abs=5e-6)

    def test_domain_error(self):
        with pytest.raises(ValueError, match="a_c"):
            DEFAULT_UNIFIED_MODEL.threshold(10.0, 1.2)

    def test_gamma_s_fixed(self):
        with pytest.raises(ValueError):
            type(DEFAULT_UNIFIED_MODEL)(s0=0.1, s1=0.1, i0=0.1, i1=0.1,
                                        gamma_i=0.5, gamma_s=0.4)

    @given(alpha=st.floats(-10, 10), beta=st.floats(-10, 10))
    def test_lerp_endpoints_exact(self, alpha, beta):
        assert lerp(alpha, beta, 0.0) == alpha
        assert lerp(alpha, beta, 1.0) == beta

    def test_matches_measured_means_within_15pct(self):
        for attention, values in MAIN_STUDY_THRESHOLDS.items():
            for e, measured in zip(MAIN_STUDY_ECCENTRICITIES, values):
                predicted = DEFAULT_UNIFIED_MODEL.threshold(e, attention.as_continuous)
                assert abs(predicted - measured) / measured < 0.15

    @given(e=ECC_RANGE, a=st.floats(0.0, 1.0))
    def test_positive_over_domain(self, e, a):
        assert DEFAULT_UNIFIED_MODEL.threshold(e, a) > 0


class TestCorticalMagnification:
    def test_foveal_value(self):
        cm = CorticalMagnification()
        assert cm.mm_per_degree(0.0) == pytest.approx(29.2 / 3.67)

    def test_at_21(self):
        assert CorticalMagnification().mm_per_degree(21.0) == pytest.approx(
            29.2 / 24.67, rel=1e-9)

    @given(e1=st.floats(0, 80), e2=st.floats(0, 80))
    def test_strictly_decreasing(self, e1, e2):
        lo, hi = sorted((e1, e2))
        if hi - lo < 1e-9:
            return
        cm = CorticalMagnification()
        assert cm.mm_per_degree(hi) < cm.mm_per_degree(lo)
        assert cm.mm_per_degree(hi) > 0


class TestScaleStimulus:
    REF = StimulusReference(eccentricity_deg=21.0, frequency_cpd=2.0, diameter_deg=5.0)

    def test_row_at_7(self):
        f, d = scale_stimulus(self.REF, 7.0)
        assert f == pytest.approx(4.62, rel=5e-3)
        assert d == pytest.approx(2.16, rel=5e-3)

    def test_row_at_14(self):
        f, d = scale_stimulus(self.REF, 14.0)
        assert f == pytest.approx(2.79, rel=5e-3)
        assert d == pytest.approx(3.58, rel=5e-3)

    def test_identity_at_reference(self):
        f, d = scale_stimulus(self.REF, 21.0)
        assert f == pytest.approx(2.0, rel=1e-12)
        assert d == pytest.approx(5.0, rel=1e-12)

    @given(e=st.floats(0.5, 60))
    def test_cycles_across_patch_invariant(self, e):
        f, d = scale_stimulus(self.REF, e)
        assert f * d == pytest.approx(self.REF.frequency_cpd * self.REF.diameter_deg,
                                      rel=1e-9)

    @given(e=st.floats(0.5, 60))
    def test_round_trip(self, e):
        f, d = scale_stimulus(self.REF, e)
        back_f, back_d = scale_stimulus(
            StimulusReference(eccentricity_deg=e, frequency_cpd=f, diameter_deg=d), 21.0)
        assert back_f == pytest.approx(2.0, rel=1e-12)
        assert back_d == pytest.approx(5.0, rel=1e-12)


class TestSurrogateBaseline:
    def test_calibrated_to_low_thresholds(self):
        csf = CorticalFrequencyCsf()
        # the cortically matched study stimuli should all sit near the
        # measured low-attention threshold ~= 0.031
        for e, f in ((7.0, 4.6242), (14.0, 2.7923), (21.0, 2.0)):
            threshold = 1.0 / csf.sensitivity(f, e)
            assert threshold == pytest.approx(0.0309, rel=0.02)

    def test_high_frequency_rolloff(self):
        csf = CorticalFrequencyCsf()
        assert csf.sensitivity(8.0, 10.0) < csf.sensitivity(2.0, 10.0)
