"""Measured study datasets shipped with the package.

Mean contrast thresholds and foveation (MAR slope) thresholds from the
user studies behind the default models, used as fit inputs, regression
fixtures, and CLI defaults.
"""

from .csf import AttentionLevel, StimulusReference

# Gabor parameters of the three main-study stimuli.  The 21-degree anchor
# was chosen to use the full display field of view; the other rows follow
# from cortical-magnification scaling (csf.scale_stimulus).
MAIN_STUDY_STIMULI = (
    # (eccentricity deg, diameter deg, spatial frequency cpd, adaptation cd/m^2)
    (7.0, 2.16, 4.62, 28.0),
    (14.0, 3.58, 2.79, 28.0),
    (21.0, 5.0, 2.0, 28.0),
)

MAIN_STUDY_REFERENCE = StimulusReference(
    eccentricity_deg=21.0, frequency_cpd=2.0, diameter_deg=5.0
)

# Gabor sigma as a fraction of patch diameter for all study stimuli.
GABOR_SIGMA_DIAMETER_RATIO = 0.2

# Mean measured contrast thresholds of the main study,
# keyed by attention level, ordered by eccentricity (7, 14, 21 deg).
MAIN_STUDY_THRESHOLDS = {
    AttentionLevel.LOW: (0.0297, 0.0317, 0.0314),
    AttentionLevel.MEDIUM: (0.0561, 0.0864, 0.1091),
    AttentionLevel.HIGH: (0.0851, 0.1242, 0.1368),
}

MAIN_STUDY_ECCENTRICITIES = (7.0, 14.0, 21.0)

# Mean measured MAR slopes from the foveation study, per image.
FOVEATION_STUDY_SLOPES = {
    "tulips": {AttentionLevel.LOW: 0.0222, AttentionLevel.MEDIUM: 0.0499, AttentionLevel.HIGH: 0.0651},
    "city": {AttentionLevel.LOW: 0.0153, AttentionLevel.MEDIUM: 0.0449, AttentionLevel.HIGH: 0.0623},
    "mountain": {AttentionLevel.LOW: 0.0221, AttentionLevel.MEDIUM: 0.0369, AttentionLevel.HIGH: 0.0581},
    "forest": {AttentionLevel.LOW: 0.0197, AttentionLevel.MEDIUM: 0.0361, AttentionLevel.HIGH: 0.0531},
}

# Global mean MAR slopes across images, per attention condition.
MEAN_MAR_SLOPES = {
    AttentionLevel.LOW: 0.0198,
    AttentionLevel.MEDIUM: 0.0420,
    AttentionLevel.HIGH: 0.0596,
}

# RSVP letter counts forcing each foveal attention load.
RSVP_LETTER_COUNTS = {
    AttentionLevel.LOW: 1,
    AttentionLevel.MEDIUM: 4,
    AttentionLevel.HIGH: 6,
}


def threshold_samples():
    """Main-study means as fitting.ThresholdSample records."""
    from .fitting import ThresholdSample

    samples = []
    for attention, values in MAIN_STUDY_THRESHOLDS.items():
        for e, t in zip(MAIN_STUDY_ECCENTRICITIES, values):
            samples.append(ThresholdSample(eccentricity=e, attention=attention, contrast=t))
    return samples
