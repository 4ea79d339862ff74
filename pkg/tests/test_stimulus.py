"""Geometry conversions, Gabor synthesis, RSVP scheduling and display
encoding."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attnfov.geometry import DisplayGeometry, study_geometry
from attnfov.stimulus import (
    GaborSpec,
    GamutError,
    RSVPSpec,
    decode_display,
    encode_display,
    gabor_image,
    measured_michelson_contrast,
    render_letter_frame,
    rsvp_sequence,
    rsvp_target_color,
)


class TestGeometry:
    def test_study_display_numbers(self):
        geom = study_geometry()
        assert geom.pixels_per_degree == pytest.approx(71.0, rel=1e-6)
        fov_w, fov_h = geom.fov_degrees
        assert fov_w == pytest.approx(46.0, abs=0.3)
        assert fov_h == pytest.approx(20.0, abs=0.2)

    def test_center_maps_to_zero(self):
        geom = study_geometry()
        cx, cy = geom.center_px
        assert geom.pixel_to_eccentricity(cx, cy) == 0.0

    def test_one_degree_offset(self):
        geom = study_geometry()
        cx, cy = geom.center_px
        e = geom.pixel_to_eccentricity(cx + 71.0, cy)
        assert e == pytest.approx(1.0, abs=1e-3)  # small-angle region

    def test_half_fov(self):
        geom = study_geometry()
        cx, cy = geom.center_px
        e = geom.pixel_to_eccentricity(cx + 3440 / 2, cy)
        assert e == pytest.approx(23.0, abs=0.2)

    @given(e=st.floats(0.0, 40.0))
    @settings(max_examples=200)
    def test_round_trip(self, e):
        geom = study_geometry()
        r = geom.eccentricity_to_radius_px(e)
        cx, cy = geom.center_px
        back = geom.pixel_to_eccentricity(cx + r, cy)
        assert back == pytest.approx(e, abs=1e-9)

    def test_kv_round_trip(self):
        geom = study_geometry()
        clone = DisplayGeometry.from_kv(geom.to_kv())
        assert clone.pixels_per_degree == pytest.approx(geom.pixels_per_degree)
        assert clone.resolution == geom.resolution
        assert clone.gamma == geom.gamma


def _patch_spec(**kw):
    defaults = dict(center_x_deg=0.0, center_y_deg=0.0, sigma_deg=0.3,
                    frequency_cpd=4.0, contrast=0.5)
    defaults.update(kw)
    return GaborSpec(**defaults)


class TestGabor:
    def test_zero_contrast_is_uniform_background(self, small_geometry):
        img = gabor_image(_patch_spec(contrast=0.0), small_geometry)
        assert np.all(img == small_geometry.background_luminance)

    def test_tails_at_background(self, small_geometry):
        # 4-sigma support fits inside the canvas; the border is untouched
        img = gabor_image(_patch_spec(sigma_deg=0.15), small_geometry)
        border = np.concatenate([img[0], img[-1], img[:, 0], img[:, -1]])
        assert np.all(border == small_geometry.background_luminance)

    def test_peak_contrast_at_center(self):
        # odd resolution puts the patch center exactly on a pixel
        geom = DisplayGeometry.from_ppd(71.0, 0.94, (129, 129))
        img = gabor_image(_patch_spec(contrast=0.5), geom)
        cx, cy = (int(v) for v in geom.center_px)
        assert img[cy, cx] == pytest.approx(geom.background_luminance * 1.5, rel=1e-9)

    def test_orientation_rotates_carrier(self, small_geometry):
        h = gabor_image(_patch_spec(orientation_deg=0.0), small_geometry)
        v = gabor_image(_patch_spec(orientation_deg=90.0), small_geometry)
        # same patch rotated a quarter turn about its center
        assert np.allclose(np.rot90(h), v, atol=1e-9)

    def test_even_symmetry_perpendicular_to_carrier(self, small_geometry):
        img = gabor_image(_patch_spec(orientation_deg=0.0), small_geometry)
        assert np.allclose(img, np.flipud(img), atol=1e-9)

    def test_metering_matches_spec_contrast(self):
        # 2 cpd at 71 ppd is 35.5 px/cycle (>= 8); the envelope must be
        # broad enough (f*sigma >= 3) that the first carrier trough inside
        # the core is barely attenuated, else the plain max/min meter
        # under-reads by more than the tolerance
        geom = DisplayGeometry.from_ppd(71.0, 0.94, (641, 641))
        spec = _patch_spec(contrast=0.4, sigma_deg=1.5, frequency_cpd=2.0)
        img = gabor_image(spec, geom)
        ppd = geom.pixels_per_degree
        cx, cy = (int(v) for v in geom.center_px)
        half = int(spec.sigma_deg / 2 * ppd)
        core = img[cy - half:cy + half + 1, cx - half:cx + half + 1]
        assert measured_michelson_contrast(core) == pytest.approx(0.4, rel=0.02)

    def test_carrier_period_at_study_scale(self):
        # stimulus 3: 2 cpd at 71 ppd -> 35.5 px per cycle
        geom = DisplayGeometry.from_ppd(71.0, 0.94, (512, 512))
        spec = _patch_spec(sigma_deg=1.0, frequency_cpd=2.0, contrast=0.5)
        img = gabor_image(spec, geom)
        row = img[int(geom.center_px[1])]
        # distance between the central peak and the next one
        c = int(round(geom.center_px[0]))
        window = row[c + 5:c + 60]
        next_peak = c + 5 + int(np.argmax(window))
        assert next_peak - c == pytest.approx(35.5, abs=1.0)

    def test_clipping_error(self, small_geometry):
        spec = _patch_spec(contrast=1.0, mean_luminance=80.0)
        with pytest.raises(GamutError):
            gabor_image(spec, small_geometry)


class TestRsvp:
    def test_single_letter_is_target(self):
        schedule = rsvp_sequence(RSVPSpec(n_letters=1), seed=3)
        assert len(schedule) == 1
        assert schedule[0].letter == "T"
        assert schedule[0].onset_ms == 0.0
        assert schedule[0].offset_ms == 500.0

    def test_six_letters_timing_and_constraint(self):
        schedule = rsvp_sequence(RSVPSpec(n_letters=6), seed=11)
        assert len(schedule) == 6
        for i, item in enumerate(schedule):
            assert item.onset_ms == pytest.approx(i * 500 / 6)
            assert item.offset_ms == pytest.approx((i + 1) * 500 / 6)
        target_idx = [i for i, it in enumerate(schedule) if it.letter == "T"]
        assert len(target_idx) == 1
        assert target_idx[0] >= 2

    def test_determinism(self):
        a = rsvp_sequence(RSVPSpec(n_letters=6), seed=123)
        b = rsvp_sequence(RSVPSpec(n_letters=6), seed=123)
        assert a == b

    def test_constraint_infeasible(self):
        with pytest.raises(ValueError):
            rsvp_sequence(RSVPSpec(n_letters=1, exclude_first_third=True), seed=0)

    def test_exactly_one_target(self):
        for seed in range(200):
            schedule = rsvp_sequence(RSVPSpec(n_letters=4), seed=seed)
            assert sum(it.letter == "T" for it in schedule) == 1

    def test_colors_strictly_alternate_and_index_uniform(self):
        # distribution checks over many seeds; chi^2 sanity bound
        counts = {2: 0, 3: 0, 4: 0, 5: 0}
        initial = {"red": 0, "green": 0}
        n = 10_000
        for seed in range(n):
            schedule = rsvp_sequence(RSVPSpec(n_letters=6), seed=seed)
            colors = [it.color for it in schedule]
            assert all(a != b for a, b in zip(colors, colors[1:]))
            initial[colors[0]] += 1
            counts[next(i for i, it in enumerate(schedule) if it.letter == "T")] += 1
        expected = n / 4
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # 3 dof, p=0.001 cutoff is 16.27
        assert chi2 < 16.27
        assert abs(initial["red"] - n / 2) < 3 * np.sqrt(n) / 2

    def test_target_color_lookup(self):
        schedule = rsvp_sequence(RSVPSpec(n_letters=4), seed=5)
        target = next(it for it in schedule if it.letter == "T")
        assert rsvp_target_color(schedule) == target.color


class TestEncodeDisplay:
    def test_min_luminance_codes_zero(self, small_geometry):
        img = np.full((4, 4), small_geometry.luminance_min)
        frame = encode_display(img, small_geometry)
        assert np.all(frame == 0)

    def test_max_luminance_codes_255(self, small_geometry):
        img = np.full((4, 4), small_geometry.luminance_max)
        frame = encode_display(img, small_geometry)
        assert np.all(frame == 255)

    def test_block_average_within_half_lsb(self, small_geometry):
        geom = small_geometry
        rng = np.random.default_rng(0)
        lum = rng.uniform(geom.luminance_min, geom.luminance_max, size=(64, 64))
        # make each 2x2 block constant so the block mean is meaningful
        lum = np.repeat(np.repeat(lum[::2, ::2], 2, axis=0), 2, axis=1)
        frame = encode_display(lum, geom).astype(float)
        ideal = ((lum - geom.luminance_min) / (geom.luminance_max - geom.luminance_min)
                 ) ** (1 / geom.gamma) * 255.0
        block_mean = frame.reshape(32, 2, 32, 2).mean(axis=(1, 3))
        ideal_mean = ideal.reshape(32, 2, 32, 2).mean(axis=(1, 3))
        assert np.max(np.abs(block_mean - ideal_mean)) <= 0.5 + 1e-9

    def test_known_dither_pattern(self, small_geometry):
        geom = small_geometry
        # luminance whose ideal code is exactly 100.25
        code = 100.25
        lum = (code / 255.0) ** geom.gamma * (geom.luminance_max - geom.luminance_min) \
            + geom.luminance_min
        frame = encode_display(np.full((2, 2), lum), geom)
        assert sorted(frame.ravel().tolist()) == [100, 100, 100, 101]

    def test_out_of_gamut_rejected(self, small_geometry):
        img = np.full((2, 2), small_geometry.luminance_max + 1.0)
        with pytest.raises(GamutError):
            encode_display(img, small_geometry)

    def test_decode_inverts_encode_for_uniform_blocks(self, small_geometry):
        geom = small_geometry
        lum = np.full((8, 8), 28.0)
        decoded = decode_display(encode_display(lum, geom), geom)
        block = decoded.reshape(4, 2, 4, 2).mean(axis=(1, 3))
        assert np.allclose(block, 28.0, atol=0.15)


class TestLetterFrame:
    def test_letter_is_isoluminant(self, small_geometry):
        geom = small_geometry
        frame = render_letter_frame("T", "red", geom)
        weights = np.asarray(geom.luminance_weights)
        luminance = frame @ weights
        assert np.allclose(luminance, geom.background_luminance, atol=1e-9)

    def test_red_and_green_differ_in_chromaticity(self, small_geometry):
        red = render_letter_frame("T", "red", small_geometry)
        green = render_letter_frame("T", "green", small_geometry)
        assert not np.allclose(red, green)
