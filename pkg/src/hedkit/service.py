"""HTTP/JSON editing service.

Sessions hold an uploaded utterance, its extracted intensity matrix, and
an edit history. Mutations use optimistic concurrency: clients send the
version they believe is current; a mismatch gets 409 and the client is
expected to refresh. Replaying the history from the initial matrix always
reproduces the current one (asserted on every mutation in debug runs).
"""

from __future__ import annotations

import json
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, File, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import audio, editor, hed
from .alignment import AlignmentHierarchy, load_alignment, serialize_alignment_json, parse_alignment_json
from .errors import HedkitError
from .features import DEFAULT_CONFIG, FeatureConfig

SERVICE_VERSION = "0.1.0"


@dataclass
class Session:
    id: str
    wav_bytes: bytes
    hierarchy: AlignmentHierarchy
    initial: hed.HedMatrix
    current: hed.HedMatrix
    version: int = 0
    history: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def replay(self) -> hed.HedMatrix:
        out = self.initial
        for script in self.history:
            out = editor.apply(out, script)
        return out


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    body = {"error": {"code": code, "message": message}}
    body.update(extra)
    return JSONResponse(status_code=status, content=body)


def _hed_body(m: hed.HedMatrix) -> dict:
    return json.loads(hed.serialize_hed_json(m))


def create_app(
    bank: hed.ModelBank | None = None,
    models_dir: str | None = None,
    persist_dir: str | None = None,
    cfg: FeatureConfig = DEFAULT_CONFIG,
) -> FastAPI:
    """Build the service; models load eagerly when a directory is given."""
    if bank is None and models_dir:
        try:
            bank = hed.load_bank(models_dir)
        except (HedkitError, OSError):
            bank = None  # POSTs answer 503 until a bank exists

    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    # persistence -------------------------------------------------------------

    def _persist_all() -> None:
        if not persist_dir:
            return
        root = Path(persist_dir)
        root.mkdir(parents=True, exist_ok=True)
        with registry_lock:
            live = list(sessions.values())
        for s in live:
            with s.lock:
                (root / f"{s.id}.wav").write_bytes(s.wav_bytes)
                doc = {
                    "id": s.id,
                    "version": s.version,
                    "alignment": json.loads(serialize_alignment_json(s.hierarchy)),
                    "initial_hed": _hed_body(s.initial),
                    "history": [
                        json.loads(script.to_json()) for script in s.history
                    ],
                }
                (root / f"{s.id}.json").write_text(
                    json.dumps(doc, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8",
                )

    def _restore_all() -> None:
        if not persist_dir:
            return
        root = Path(persist_dir)
        if not root.is_dir():
            return
        for meta_path in sorted(root.glob("*.json")):
            try:
                doc = json.loads(meta_path.read_text(encoding="utf-8"))
                wav_bytes = (root / f"{doc['id']}.wav").read_bytes()
                hierarchy = parse_alignment_json(json.dumps(doc["alignment"]))
                initial = hed.parse_hed_json(json.dumps(doc["initial_hed"]))
                history = [
                    editor.EditScript.from_json(json.dumps(item))
                    for item in doc["history"]
                ]
                session = Session(
                    id=doc["id"],
                    wav_bytes=wav_bytes,
                    hierarchy=hierarchy,
                    initial=initial,
                    current=initial,
                    version=int(doc["version"]),
                    history=history,
                )
                session.current = session.replay()
                sessions[session.id] = session
            except (HedkitError, OSError, KeyError, ValueError, json.JSONDecodeError):
                continue  # a corrupt snapshot must not block startup

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        _restore_all()
        yield
        _persist_all()

    app = FastAPI(
        title="hedkit editing service", version=SERVICE_VERSION, lifespan=lifespan
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.sessions = sessions
    app.state.bank = bank

    # helpers -------------------------------------------------------------------

    def _get_session(sid: str) -> Session | None:
        with registry_lock:
            return sessions.get(sid)

    def _mutated(s: Session) -> None:
        if __debug__:
            assert s.replay() == s.current, "history replay diverged from current matrix"

    # endpoints -------------------------------------------------------------------

    @app.get("/health")
    def health():
        with registry_lock:
            n = len(sessions)
        return {
            "status": "ok",
            "service_version": SERVICE_VERSION,
            "models_loaded": app.state.bank is not None,
            "emotions": list(app.state.bank.emotions) if app.state.bank else [],
            "sessions": n,
        }

    @app.post("/utterances", status_code=201)
    def create_utterance(
        audio_file: UploadFile = File(..., alias="audio"),
        alignment_file: UploadFile = File(..., alias="alignment"),
    ):
        if app.state.bank is None:
            return _error(503, "no_models", "no model bank is loaded")
        try:
            wav_bytes = audio_file.file.read()
            w = audio.resample(audio.decode_wav(wav_bytes), audio.ANALYSIS_RATE)
            align_text = alignment_file.file.read().decode("utf-8", errors="replace")
            h = load_alignment(align_text, filename=alignment_file.filename or "")
            matrix = hed.extract_hed(w, h, app.state.bank, cfg)
        except HedkitError as e:
            return _error(400, e.code, str(e))
        session = Session(
            id=uuid.uuid4().hex[:12],
            wav_bytes=wav_bytes,
            hierarchy=h,
            initial=matrix,
            current=matrix,
        )
        with registry_lock:
            sessions[session.id] = session
        return {"id": session.id, "version": session.version, "hed": _hed_body(matrix)}

    @app.get("/utterances/{sid}/hed")
    def get_hed(sid: str):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        with s.lock:
            return {"id": s.id, "version": s.version, "hed": _hed_body(s.current)}

    @app.patch("/utterances/{sid}/hed")
    def patch_hed(sid: str, payload: dict = Body(...)):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        if not isinstance(payload, dict) or "expected_version" not in payload:
            return _error(422, "schema_error", "body needs expected_version and script")
        expected = payload["expected_version"]
        if not isinstance(expected, int) or isinstance(expected, bool):
            return _error(422, "schema_error", "expected_version must be an integer")
        try:
            script = editor.EditScript.from_dict(payload.get("script") or {})
        except HedkitError as e:
            return _error(422, e.code, str(e))
        with s.lock:
            if expected != s.version:
                return _error(
                    409, "version_conflict",
                    f"expected version {expected}, server is at {s.version}",
                    version=s.version,
                )
            try:
                new_matrix = editor.apply(s.current, script)
            except HedkitError as e:
                return _error(422, e.code, str(e))
            s.current = new_matrix
            s.history.append(script)
            s.version += 1
            _mutated(s)
            return {"id": s.id, "version": s.version, "hed": _hed_body(s.current)}

    @app.post("/utterances/{sid}/undo")
    def undo(sid: str):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        with s.lock:
            if not s.history:
                return _error(409, "nothing_to_undo", "edit history is empty",
                              version=s.version)
            s.history.pop()
            s.current = s.replay()
            s.version += 1
            _mutated(s)
            return {"id": s.id, "version": s.version, "hed": _hed_body(s.current)}

    @app.get("/utterances/{sid}/export")
    def export(sid: str, format: str = "csv"):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        if format not in ("csv", "json"):
            return _error(422, "schema_error", f"format must be csv or json, got {format!r}")
        with s.lock:
            text = hed.serialize_hed(s.current, format)
        media = "text/csv" if format == "csv" else "application/json"
        return Response(
            content=text,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{sid}.{format}"'},
        )

    @app.get("/utterances/{sid}/audio")
    def get_audio(sid: str):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        return Response(content=s.wav_bytes, media_type="audio/wav")

    @app.get("/utterances/{sid}/alignment")
    def get_alignment(sid: str):
        s = _get_session(sid)
        if s is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        return json.loads(serialize_alignment_json(s.hierarchy))

    return app
