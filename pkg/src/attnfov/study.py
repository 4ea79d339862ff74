"""Live study session orchestration.

A session walks a subject through a plan of QUEST staircases, one per
(condition, attention, repetition), enforcing the trial rules of its study
kind: contrast sessions replay timed-out trials, foveation sessions
restart a step whenever the central letter task was answered wrong.

Every state change is an event appended to a JSONL log before it is
acknowledged; replaying the log rebuilds the session (and its staircase
posteriors) bit-identically, so a crashed session resumes where it
stopped.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, asdict, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import data
from .csf import AttentionLevel
from .quest import Staircase, StaircaseConfig
from .stimulus import RSVPSpec, rsvp_sequence, rsvp_target_color


class StudyKind(str, Enum):
    CSF = "csf"
    FOVEATION = "foveation"


class SessionError(RuntimeError):
    pass


class StaleTrialError(SessionError):
    """Response for a trial that is not the session's active trial."""


class SessionDoneError(SessionError):
    pass


@dataclass(frozen=True)
class TrialTiming:
    fixation_s: float = 1.2
    stimulus_s: float = 0.5
    mask_s: float = 1.0
    response_window_s: float = 10.0
    grace_s: float = 0.25

    @property
    def deadline_s(self) -> float:
        """Server-side window from trial issue to latest valid response."""
        return (self.fixation_s + self.stimulus_s + self.mask_s
                + self.response_window_s + self.grace_s)


@dataclass(frozen=True)
class SessionConfig:
    study_kind: StudyKind
    subject_id: str
    seed: int = 0
    repetitions: int | None = None  # None: 2 for csf, 1 for foveation
    attention_levels: tuple[AttentionLevel, ...] = (
        AttentionLevel.LOW, AttentionLevel.MEDIUM, AttentionLevel.HIGH,
    )
    # csf conditions: (eccentricity, diameter, frequency, luminance)
    stimuli: tuple = data.MAIN_STUDY_STIMULI
    # foveation conditions
    images: tuple[str, ...] = ("tulips", "city")
    staircase: StaircaseConfig = StaircaseConfig()
    timing: TrialTiming = TrialTiming()
    rsvp_counts: dict = field(default_factory=lambda: dict(data.RSVP_LETTER_COUNTS))

    def __post_init__(self):
        object.__setattr__(self, "study_kind", StudyKind(self.study_kind))
        levels = tuple(AttentionLevel.parse(a) for a in self.attention_levels)
        object.__setattr__(self, "attention_levels", levels)
        if self.repetitions is None:
            reps = 2 if self.study_kind is StudyKind.CSF else 1
            object.__setattr__(self, "repetitions", reps)

    def condition_ids(self) -> list[str]:
        if self.study_kind is StudyKind.CSF:
            return [f"stim{i + 1}" for i in range(len(self.stimuli))]
        return list(self.images)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["study_kind"] = self.study_kind.value
        out["attention_levels"] = [a.value for a in self.attention_levels]
        out["rsvp_counts"] = {k.value if isinstance(k, AttentionLevel) else k: v
                              for k, v in self.rsvp_counts.items()}
        return out

    @classmethod
    def from_dict(cls, blob: dict) -> "SessionConfig":
        blob = dict(blob)
        blob["staircase"] = StaircaseConfig(**blob["staircase"])
        blob["timing"] = TrialTiming(**blob["timing"])
        blob["stimuli"] = tuple(tuple(s) for s in blob["stimuli"])
        blob["images"] = tuple(blob["images"])
        blob["attention_levels"] = tuple(blob["attention_levels"])
        blob["rsvp_counts"] = {AttentionLevel.parse(k): v
                               for k, v in blob["rsvp_counts"].items()}
        return cls(**blob)


@dataclass(frozen=True)
class PlanEntry:
    condition_id: str
    attention: AttentionLevel
    repetition: int


def build_plan(config: SessionConfig) -> list[PlanEntry]:
    """Condition order randomized per subject seed; attention always runs
    low -> medium -> high within a condition; repetitions run back to back."""
    rng = np.random.default_rng(config.seed)
    conditions = config.condition_ids()
    order = rng.permutation(len(conditions))
    ordered_levels = sorted(config.attention_levels, key=lambda a: a.as_continuous)
    plan = []
    for ci in order:
        for attention in ordered_levels:
            for rep in range(config.repetitions):
                plan.append(PlanEntry(conditions[ci], attention, rep))
    return plan


class Session:
    """Event-sourced study session; one logical writer."""

    def __init__(self, config: SessionConfig, log_path: Path,
                 session_id: str | None = None, clock=time.time):
        self.config = config
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.log_path = Path(log_path)
        self.clock = clock
        self.plan = build_plan(config)
        self.staircases = [Staircase(config.staircase) for _ in self.plan]
        self.plan_index = 0
        self.active_trial: dict | None = None
        self.trial_seq = 0
        self.attempt = 0
        self.outcomes: dict[str, dict] = {}  # trial_id -> acknowledged outcome
        self._event_seq = 0

    # -- construction --------------------------------------------------------
    @classmethod
    def create(cls, config: SessionConfig, data_dir: Path, clock=time.time) -> "Session":
        data_dir = Path(data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        session_id = uuid.uuid4().hex[:12]
        session = cls(config, data_dir / f"{session_id}.jsonl", session_id, clock)
        session._append_event({
            "type": "created",
            "session_id": session.session_id,
            "config": config.to_dict(),
            "plan": [
                {"condition_id": p.condition_id, "attention": p.attention.value,
                 "repetition": p.repetition}
                for p in session.plan
            ],
        })
        return session

    @classmethod
    def load(cls, log_path: Path, clock=time.time) -> "Session":
        """Rebuild a session by replaying its event log."""
        log_path = Path(log_path)
        session: Session | None = None
        with log_path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "created":
                    config = SessionConfig.from_dict(event["config"])
                    session = cls(config, log_path, event["session_id"], clock)
                    session._event_seq = event["seq"] + 1
                elif session is None:
                    raise SessionError("event log does not start with a created event")
                else:
                    session._apply_event(event)
                    session._event_seq = event["seq"] + 1
        if session is None:
            raise SessionError("empty event log")
        return session

    # -- event plumbing -------------------------------------------------------
    def _append_event(self, event: dict) -> dict:
        event = {"seq": self._event_seq, "ts": self.clock(), **event}
        self._event_seq += 1
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()
        return event

    def _apply_event(self, event: dict) -> None:
        kind = event["type"]
        if kind == "trial":
            self.active_trial = event["descriptor"]
            self.trial_seq = max(self.trial_seq, event["trial_number"] + 1)
            self.attempt = event["descriptor"]["attempt"]
        elif kind == "response":
            self._apply_response(event["trial_id"], event["outcome"],
                                 event.get("correct"), record=event)
        else:
            raise SessionError(f"unknown event type {kind!r}")

    # -- trial issuing ---------------------------------------------------------
    @property
    def done(self) -> bool:
        return self.plan_index >= len(self.plan)

    def _trial_rng(self, ordinal: int) -> np.random.Generator:
        return np.random.default_rng(
            (self.config.seed, self.plan_index, ordinal, self.attempt)
        )

    def next_trial(self) -> dict:
        """The pending trial descriptor, issuing a fresh one if needed.

        Re-fetching without answering returns the same descriptor, so a
        client reload cannot skip or duplicate a trial.
        """
        if self.done:
            raise SessionDoneError("all staircases finished")
        if self.active_trial is not None:
            return self.active_trial

        entry = self.plan[self.plan_index]
        staircase = self.staircases[self.plan_index]
        intensity = staircase.next_intensity()
        rng = self._trial_rng(staircase.trial_count)
        trial_id = f"{self.session_id}:{self.trial_seq:05d}"

        n_letters = self.config.rsvp_counts[entry.attention]
        schedule = rsvp_sequence(RSVPSpec(n_letters=n_letters), seed=rng.integers(2 ** 31))
        rsvp_payload = {
            "n_letters": n_letters,
            "schedule": [asdict(item) for item in schedule],
            "target_color": rsvp_target_color(schedule),
        }

        if self.config.study_kind is StudyKind.CSF:
            stim_index = int(entry.condition_id.removeprefix("stim")) - 1
            ecc, diameter, freq, luminance = self.config.stimuli[stim_index]
            orientations = [float(rng.choice([0.0, 90.0])) for _ in range(2)]
            stimulus = {
                "kind": "gabor_pair",
                "eccentricity_deg": ecc,
                "diameter_deg": diameter,
                "sigma_deg": diameter * data.GABOR_SIGMA_DIAMETER_RATIO,
                "frequency_cpd": freq,
                "mean_luminance": luminance,
                "contrast": intensity,
                "orientation_left_deg": orientations[0],
                "orientation_right_deg": orientations[1],
            }
        else:
            stimulus = {
                "kind": "foveated_split",
                "image_id": entry.condition_id,
                "slope": intensity,
                "foveated_side": str(rng.choice(["left", "right"])),
                "image_url": f"/assets/images/{entry.condition_id}.png",
            }

        descriptor = {
            "trial_id": trial_id,
            "session_id": self.session_id,
            "plan_index": self.plan_index,
            "attempt": self.attempt,
            "trial_number": self.trial_seq,
            "study_kind": self.config.study_kind.value,
            "condition_id": entry.condition_id,
            "attention": entry.attention.value,
            "repetition": entry.repetition,
            "intensity": intensity,
            "timing": asdict(self.config.timing),
            "rsvp": rsvp_payload,
            "stimulus": stimulus,
            "stimulus_png_url": f"/sessions/{self.session_id}/trials/{trial_id}/stimulus.png",
            "issued_ts": self.clock(),
        }
        self.trial_seq += 1
        self.active_trial = descriptor
        self._append_event({
            "type": "trial",
            "trial_id": trial_id,
            "trial_number": descriptor["trial_number"],
            "descriptor": descriptor,
        })
        return descriptor

    # -- responses --------------------------------------------------------------
    def submit_response(self, trial_id: str, rsvp_answer: str | None,
                        afc_answer: str | None, latency_ms: float | None = None) -> dict:
        if trial_id in self.outcomes:
            return self.outcomes[trial_id]  # duplicate submission: idempotent
        if self.active_trial is None or self.active_trial["trial_id"] != trial_id:
            raise StaleTrialError(f"trial {trial_id!r} is not the active trial")

        trial = self.active_trial
        now = self.clock()
        timed_out = (
            rsvp_answer is None
            or (now - trial["issued_ts"]) > self.config.timing.deadline_s
        )

        if timed_out:
            outcome, correct = "replay", None
        elif (self.config.study_kind is StudyKind.FOVEATION
              and rsvp_answer != trial["rsvp"]["target_color"]):
            # wrong letter color: the step restarts before the 2AFC answer
            # is even collected
            outcome, correct = "restart_step", None
        elif afc_answer is None:
            outcome, correct = "replay", None
        else:
            outcome = "accepted"
            correct = self._afc_correct(trial, afc_answer)

        event = self._append_event({
            "type": "response",
            "trial_id": trial_id,
            "rsvp_answer": rsvp_answer,
            "afc_answer": afc_answer,
            "latency_ms": latency_ms,
            "rsvp_correct": (None if rsvp_answer is None
                             else rsvp_answer == trial["rsvp"]["target_color"]),
            "outcome": outcome,
            "correct": correct,
        })
        result = self._apply_response(trial_id, outcome, correct, record=event)
        self.outcomes[trial_id] = result
        return result

    @staticmethod
    def _afc_correct(trial: dict, afc_answer: str) -> bool:
        stim = trial["stimulus"]
        if stim["kind"] == "gabor_pair":
            same = stim["orientation_left_deg"] == stim["orientation_right_deg"]
            return afc_answer == ("same" if same else "different")
        return afc_answer == stim["foveated_side"]

    def _apply_response(self, trial_id: str, outcome: str, correct,
                        record: dict) -> dict:
        if self.active_trial is None or self.active_trial["trial_id"] != trial_id:
            raise StaleTrialError(f"replayed response for non-active trial {trial_id!r}")
        trial = self.active_trial
        self.active_trial = None

        if outcome == "accepted":
            staircase = self.staircases[trial["plan_index"]]
            staircase.update(trial["intensity"], bool(correct))
            self.attempt = 0
            if staircase.is_done():
                self.plan_index += 1
        else:
            # replay / restart_step: same staircase, same intensity next
            # issue, fresh randomization
            self.attempt += 1

        result = {
            "trial_id": trial_id,
            "outcome": outcome,
            "correct": correct,
            "session_done": self.done,
        }
        self.outcomes[trial_id] = result
        return result

    # -- results ------------------------------------------------------------------
    def progress(self) -> dict:
        return {
            "session_id": self.session_id,
            "subject_id": self.config.subject_id,
            "study_kind": self.config.study_kind.value,
            "plan_size": len(self.plan),
            "completed_staircases": self.plan_index,
            "current": None if self.done else {
                "condition_id": self.plan[self.plan_index].condition_id,
                "attention": self.plan[self.plan_index].attention.value,
                "repetition": self.plan[self.plan_index].repetition,
                "trials_done": self.staircases[self.plan_index].trial_count,
                "max_trials": self.config.staircase.max_trials,
            },
            "done": self.done,
        }

    def export_results(self) -> dict:
        """Per-staircase estimates plus repetition-averaged summary.

        The CSV matches the fitting CLI input schema, so a finished
        session feeds straight into the model fits.
        """
        rows = []
        for entry, staircase in zip(self.plan, self.staircases):
            if staircase.trial_count == 0:
                continue
            est = staircase.estimate()
            row = {
                "subject": self.config.subject_id,
                "condition_id": entry.condition_id,
                "attention": entry.attention.value,
                "threshold": est["threshold"],
                "sd_log10": est["sd_log10"],
                "repetition": entry.repetition,
                "trials": staircase.trial_count,
            }
            if self.config.study_kind is StudyKind.CSF:
                stim_index = int(entry.condition_id.removeprefix("stim")) - 1
                row["eccentricity_deg"] = self.config.stimuli[stim_index][0]
            rows.append(row)

        summary: dict[tuple, list[float]] = {}
        for row in rows:
            summary.setdefault((row["condition_id"], row["attention"]), []).append(
                row["threshold"])
        summary_rows = [
            {"condition_id": cid, "attention": att,
             "mean_threshold": float(np.mean(v)), "repetitions": len(v)}
            for (cid, att), v in sorted(summary.items())
        ]

        if self.config.study_kind is StudyKind.CSF:
            header = "subject,eccentricity_deg,attention,contrast,repetition"
            lines = [header] + [
                f"{r['subject']},{r['eccentricity_deg']:g},{r['attention']},"
                f"{r['threshold']:.8g},{r['repetition']}"
                for r in rows
            ]
        else:
            header = "subject,image,attention,slope,repetition"
            lines = [header] + [
                f"{r['subject']},{r['condition_id']},{r['attention']},"
                f"{r['threshold']:.8g},{r['repetition']}"
                for r in rows
            ]
        return {"rows": rows, "summary": summary_rows, "csv": "\n".join(lines) + "\n"}
