"""Bayesian adaptive staircase (QUEST) for 2AFC threshold estimation.

The posterior over log10 threshold lives on a fixed grid; each response
multiplies in the Weibull likelihood and renormalizes.  Trials are placed
at the posterior mean, the standard efficient choice.  A simulated
observer with a known threshold closes the loop for testing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np


def weibull_probability(intensity, threshold, beta: float, guess_rate: float, lapse: float):
    """P(correct) of a 2AFC Weibull observer.

    p = lapse*guess + (1-lapse) * (1 - (1-guess) * exp(-(c/t)^beta));
    rises from guess_rate at c << t to 1-lapse*(1-guess) at c >> t.
    """
    c = np.asarray(intensity, dtype=float)
    t = np.asarray(threshold, dtype=float)
    p = lapse * guess_rate + (1.0 - lapse) * (
        1.0 - (1.0 - guess_rate) * np.exp(-np.power(c / t, beta))
    )
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class StaircaseConfig:
    """QUEST free parameters.

    Defaults are conventional: Weibull slope 3.5, 2% lapse, 2AFC guess
    rate 0.5 (fixed), unit-log10 prior, 0.01 log10 grid.  The grid covers
    the displayable contrasts 10^-3.5..1 and extends half a decade past
    full contrast so the prior is truncated symmetrically (otherwise the
    fresh posterior mean would sit below the prior mean); placement is
    clamped to displayable intensities regardless.  The displayable floor
    is one dithered 8-bit step, 1/(255*4) with the 2x2 dither's four
    sub-levels.
    """

    beta: float = 3.5
    lapse: float = 0.02
    guess_rate: float = 0.5
    prior_mean_log10: float = -1.5
    prior_sd_log10: float = 1.0
    grid_step: float = 0.01
    grid_lo: float = -3.5
    grid_hi: float = 0.5
    max_trials: int = 40
    sd_stop_log10: float | None = None  # e.g. 0.08 to stop early
    min_intensity: float = 1.0 / (255.0 * 4.0)
    max_intensity: float = 1.0

    def __post_init__(self):
        if self.guess_rate != 0.5:
            raise ValueError("guess rate is fixed at 0.5 for 2AFC")
        if self.grid_lo >= self.grid_hi or self.grid_step <= 0:
            raise ValueError("bad posterior grid")


class StaircaseFinishedError(RuntimeError):
    pass


class Staircase:
    """One QUEST track.  Single writer; deterministic given responses."""

    def __init__(self, config: StaircaseConfig = StaircaseConfig()):
        self.config = config
        n = int(round((config.grid_hi - config.grid_lo) / config.grid_step)) + 1
        self.grid = config.grid_lo + np.arange(n) * config.grid_step
        log_prior = -0.5 * ((self.grid - config.prior_mean_log10) / config.prior_sd_log10) ** 2
        prior = np.exp(log_prior - log_prior.max())
        self.posterior = prior / prior.sum()
        self.history: list[tuple[float, bool]] = []

    # -- estimation ---------------------------------------------------------
    def mean_log10(self) -> float:
        return float(np.sum(self.grid * self.posterior))

    def sd_log10(self) -> float:
        m = self.mean_log10()
        return float(np.sqrt(np.sum((self.grid - m) ** 2 * self.posterior)))

    def estimate(self) -> dict:
        """Posterior mean threshold (contrast) and sd (log10 units)."""
        return {"threshold": 10.0 ** self.mean_log10(), "sd_log10": self.sd_log10()}

    # -- trial loop ---------------------------------------------------------
    @property
    def trial_count(self) -> int:
        return len(self.history)

    def is_done(self) -> bool:
        if self.trial_count >= self.config.max_trials:
            return True
        sd_stop = self.config.sd_stop_log10
        return sd_stop is not None and self.trial_count > 0 and self.sd_log10() < sd_stop

    def next_intensity(self) -> float:
        if self.is_done():
            raise StaircaseFinishedError("staircase already satisfied its stopping rule")
        c = 10.0 ** self.mean_log10()
        return float(np.clip(c, self.config.min_intensity, self.config.max_intensity))

    def update(self, intensity: float, correct: bool) -> "Staircase":
        """Fold one response into the posterior.  Returns self."""
        if not 0.0 < intensity <= 1.0:
            raise ValueError("intensity must lie in (0, 1]")
        cfg = self.config
        p_correct = weibull_probability(intensity, 10.0 ** self.grid,
                                        cfg.beta, cfg.guess_rate, cfg.lapse)
        like = p_correct if correct else 1.0 - p_correct
        post = self.posterior * like
        total = post.sum()
        if total > 0.0:  # guard: an impossible response leaves the posterior unchanged
            self.posterior = post / total
        self.history.append((float(intensity), bool(correct)))
        return self

    # -- persistence ---------------------------------------------------------
    def to_json(self) -> str:
        """Snapshot as config + history; the posterior is rebuilt on load,
        which reproduces it bit-identically (updates are deterministic)."""
        return json.dumps({"config": asdict(self.config), "history": self.history})

    @classmethod
    def from_json(cls, text: str) -> "Staircase":
        blob = json.loads(text)
        st = cls(StaircaseConfig(**blob["config"]))
        for intensity, correct in blob["history"]:
            st.update(intensity, correct)
        return st


@dataclass
class SimulatedObserver:
    """Synthetic 2AFC subject for closed-loop testing.

    Responds stochastically through a Weibull psychometric function around
    its true threshold.  The default slope is steeper than the staircase's
    assumed 3.5 (an attentive, low-lapse subject); a mismatch in that
    direction is realistic and QUEST tolerates it.  beta=None is the
    noise-free limit: always correct at or above threshold, guessing below.
    """

    true_threshold: float
    beta: float | None = 5.0
    guess_rate: float = 0.5
    lapse: float = 0.01
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def respond(self, intensity: float) -> bool:
        if self.beta is None:
            if intensity >= self.true_threshold:
                return True
            return bool(self._rng.random() < self.guess_rate)
        p = weibull_probability(intensity, self.true_threshold,
                                self.beta, self.guess_rate, self.lapse)
        return bool(self._rng.random() < p)


def run_staircase(staircase: Staircase, observer: SimulatedObserver) -> Staircase:
    """Drive a staircase against an observer until its stopping rule."""
    while not staircase.is_done():
        c = staircase.next_intensity()
        staircase.update(c, observer.respond(c))
    return staircase
