"""HTTP front of the study sessions.

JSON API consumed by the browser study runner:

    POST /sessions                      create a session
    GET  /sessions/{id}                 progress snapshot
    GET  /sessions/{id}/next-trial      pending trial descriptor
    POST /sessions/{id}/responses       submit answers
    GET  /sessions/{id}/results         per-staircase estimates + CSV
    GET  /sessions/{id}/trials/{tid}/stimulus.png   server-rendered frame
    GET  /assets/images/{image_id}.png  reference scene

Sessions are persisted as JSONL event logs under the data directory
(ATTNFOV_DATA_DIR or --data-dir) and are reloaded lazily after a restart.
Each session's mutations run under a per-session lock.
"""

from __future__ import annotations

import io
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import sample_images
from .foveation import FoveationConfig, MarModel, compose_split_screen, foveate_image
from .geometry import DisplayGeometry, study_geometry
from .quest import StaircaseConfig, StaircaseFinishedError
from .stimulus import GaborSpec, encode_display, gabor_image
from .study import (
    Session,
    SessionConfig,
    SessionDoneError,
    StaleTrialError,
    StudyKind,
    TrialTiming,
)


class CreateSessionRequest(BaseModel):
    subject_id: str
    study_kind: str = "csf"
    seed: int = 0
    repetitions: int | None = None
    images: list[str] | None = None
    staircase: dict = Field(default_factory=dict)
    timing: dict = Field(default_factory=dict)


class ResponseSubmission(BaseModel):
    trial_id: str
    rsvp_answer: str | None = None
    afc_answer: str | None = None
    latency_ms: float | None = None
    fixation_ok: bool | None = None  # from external gaze tooling, logged only


class SessionStore:
    def __init__(self, data_dir: Path, clock=None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _clock_kwargs(self):
        return {"clock": self.clock} if self.clock is not None else {}

    def create(self, config: SessionConfig) -> Session:
        session = Session.create(config, self.data_dir, **self._clock_kwargs())
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def get(self, session_id: str) -> tuple[Session, threading.Lock]:
        with self._registry_lock:
            if session_id not in self._sessions:
                path = self.data_dir / f"{session_id}.jsonl"
                if not path.exists():
                    raise KeyError(session_id)
                self._sessions[session_id] = Session.load(path, **self._clock_kwargs())
                self._locks[session_id] = threading.Lock()
            return self._sessions[session_id], self._locks[session_id]


def create_app(
    data_dir: str | os.PathLike | None = None,
    geometry: DisplayGeometry | None = None,
    clock=None,
) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("ATTNFOV_DATA_DIR", "./study-data"))
    geom = geometry or study_geometry()
    store = SessionStore(data_dir, clock=clock)

    app = FastAPI(title="attnfov study service")
    app.state.store = store
    app.state.geometry = geom

    def _get(session_id: str):
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        kwargs = {}
        if req.repetitions is not None:
            kwargs["repetitions"] = req.repetitions
        if req.images is not None:
            kwargs["images"] = tuple(req.images)
        if req.staircase:
            kwargs["staircase"] = StaircaseConfig(**req.staircase)
        if req.timing:
            kwargs["timing"] = TrialTiming(**req.timing)
        try:
            config = SessionConfig(
                study_kind=StudyKind(req.study_kind),
                subject_id=req.subject_id,
                seed=req.seed,
                **kwargs,
            )
        except (ValueError, TypeError) as exc:
            raise HTTPException(422, f"invalid session config: {exc}")
        session = store.create(config)
        return session.progress()

    @app.get("/sessions/{session_id}")
    def session_progress(session_id: str):
        session, lock = _get(session_id)
        with lock:
            return session.progress()

    @app.get("/sessions/{session_id}/next-trial")
    def next_trial(session_id: str):
        session, lock = _get(session_id)
        with lock:
            if session.done:
                return {"done": True}
            try:
                return {"done": False, "trial": session.next_trial()}
            except (SessionDoneError, StaircaseFinishedError) as exc:
                raise HTTPException(409, str(exc))

    @app.post("/sessions/{session_id}/responses")
    def submit_response(session_id: str, req: ResponseSubmission):
        session, lock = _get(session_id)
        with lock:
            try:
                return session.submit_response(
                    req.trial_id, req.rsvp_answer, req.afc_answer, req.latency_ms
                )
            except StaleTrialError as exc:
                raise HTTPException(409, str(exc))

    @app.get("/sessions/{session_id}/results")
    def results(session_id: str):
        session, lock = _get(session_id)
        with lock:
            return session.export_results()

    @app.get("/sessions/{session_id}/trials/{trial_id}/stimulus.png")
    def stimulus_png(session_id: str, trial_id: str):
        session, lock = _get(session_id)
        with lock:
            trial = session.active_trial
            if trial is None or trial["trial_id"] != trial_id:
                raise HTTPException(404, "trial is not active; stimuli render on demand")
            frame = render_trial_frame(trial, geom)
        return Response(content=_png_bytes(frame), media_type="image/png")

    @app.get("/assets/images/{image_id}.png")
    def reference_image(image_id: str):
        try:
            img = _scene_luminance(image_id, geom)
        except KeyError:
            raise HTTPException(404, f"unknown image {image_id!r}")
        return Response(content=_png_bytes(encode_display(img, geom)),
                        media_type="image/png")

    return app


def _scene_luminance(image_id: str, geom: DisplayGeometry) -> np.ndarray:
    w, h = geom.resolution
    return sample_images.sample_image(image_id, (h, w))


def render_trial_frame(trial: dict, geom: DisplayGeometry) -> np.ndarray:
    """Encoded 8-bit frame of the trial's stimulus phase (no RSVP letter)."""
    stim = trial["stimulus"]
    if stim["kind"] == "gabor_pair":
        ecc = stim["eccentricity_deg"]
        specs = [
            GaborSpec(
                center_x_deg=side * ecc,
                center_y_deg=0.0,
                sigma_deg=stim["sigma_deg"],
                frequency_cpd=stim["frequency_cpd"],
                contrast=stim["contrast"],
                orientation_deg=orientation,
                mean_luminance=stim["mean_luminance"],
            )
            for side, orientation in (
                (-1, stim["orientation_left_deg"]),
                (+1, stim["orientation_right_deg"]),
            )
        ]
        return encode_display(gabor_image(specs, geom), geom)

    reference = _scene_luminance(stim["image_id"], geom)
    blurred = foveate_image(reference, geom, MarModel(slope=stim["slope"]),
                            FoveationConfig())
    if stim["foveated_side"] == "left":
        composed = compose_split_screen(blurred, reference, geom)
    else:
        composed = compose_split_screen(reference, blurred, geom)
    return encode_display(composed, geom)


def _png_bytes(frame: np.ndarray) -> bytes:
    from PIL import Image

    mode = "L" if frame.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(frame, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
