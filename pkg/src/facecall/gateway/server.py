"""WebSocket call server: one session per connection.

Each connection gets a single outbound queue drained by one sender task,
which is what guarantees the per-turn message ordering on the wire. A
per-session tick task drives the 8-minute warning and 10-minute close.
The session's transcript lives only as long as the connection needs it:
it is discarded after feedback delivery, on disconnect, and on shutdown.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Optional

from websockets.asyncio.server import ServerConnection, serve as ws_serve
from websockets.exceptions import ConnectionClosed

from ..config import ServerConfig, build_guardrail_policy, build_provider_set
from ..expression import ClipLibrary, load_clip_library
from ..feedback import EmptyTranscriptError, UnparseableFeedbackError, generate_feedback
from ..persona import (
    GuardrailPolicy,
    PersonaFileError,
    PersonaSpec,
    PersonaValidationError,
    load_persona_file,
)
from ..providers.base import AudioChunk, ProviderError, ProviderSet
from ..session import (
    Clock,
    CloseReason,
    MonotonicClock,
    Session,
    TickEvent,
    create_session,
)
from . import protocol
from .protocol import DecodeError, decode_message, wire_payload
from .turn import run_turn

log = logging.getLogger("facecall.server")


class BindError(Exception):
    pass


class _Connection:
    def __init__(self, server: "CallServer", ws: ServerConnection):
        self.server = server
        self.ws = ws
        self.session: Optional[Session] = None
        self.outbound: asyncio.Queue = asyncio.Queue()
        self.sender_task: Optional[asyncio.Task] = None
        self.tick_task: Optional[asyncio.Task] = None
        self.turn_task: Optional[asyncio.Task] = None
        self.pending_audio: list[AudioChunk] = []
        self.turns_started = 0
        self._shutting_down = False

    # -- plumbing --------------------------------------------------------

    def send(self, message: protocol.ServerMessage) -> None:
        self.outbound.put_nowait(message)

    async def _send_loop(self) -> None:
        while True:
            message = await self.outbound.get()
            if message is None:
                return
            try:
                await self.ws.send(wire_payload(message))
            except ConnectionClosed:
                return

    async def _flush_and_stop_sender(self) -> None:
        self.outbound.put_nowait(None)
        if self.sender_task is not None:
            await self.sender_task
            self.sender_task = None

    def _turn_running(self) -> bool:
        return self.turn_task is not None and not self.turn_task.done()

    async def _cancel_turn(self) -> None:
        if self._turn_running():
            assert self.turn_task is not None
            self.turn_task.cancel()
            try:
                await self.turn_task
            except (asyncio.CancelledError, Exception):
                pass
        self.turn_task = None

    # -- lifecycle ---------------------------------------------------------

    async def run(self) -> None:
        self.sender_task = asyncio.create_task(self._send_loop())
        try:
            async for raw in self.ws:
                try:
                    message = decode_message(raw)
                except DecodeError as exc:
                    self.send(protocol.ErrorMessage("bad_message", exc.reason))
                    continue
                await self._dispatch(message)
        except ConnectionClosed:
            pass
        finally:
            await self._teardown()

    async def _teardown(self) -> None:
        await self._cancel_turn()
        if self.tick_task is not None:
            self.tick_task.cancel()
            self.tick_task = None
        session = self.session
        if session is not None:
            if session.is_open:
                session.close(CloseReason.TRANSPORT_LOST)
            session.discard_transcript()
        await self._flush_and_stop_sender()

    async def shutdown(self) -> None:
        """Server-initiated close: notify, then drop the connection."""
        self._shutting_down = True
        await self._cancel_turn()
        if self.tick_task is not None:
            self.tick_task.cancel()
            self.tick_task = None
        session = self.session
        if session is not None and session.is_open:
            session.close(CloseReason.SERVER_SHUTDOWN)
            session.discard_transcript()
            self.send(protocol.SessionClosed(CloseReason.SERVER_SHUTDOWN))
        await self._flush_and_stop_sender()
        await self.ws.close()

    # -- message handling ----------------------------------------------------

    async def _dispatch(self, message: protocol.Message) -> None:
        if isinstance(message, protocol.Hello):
            self._on_hello(message)
        elif isinstance(message, protocol.UtteranceText):
            self._start_turn(message.text)
        elif isinstance(message, protocol.UtteranceAudioChunk):
            self._on_audio_chunk(message.chunk)
        elif isinstance(message, protocol.UtteranceEnd):
            self._on_utterance_end()
        elif isinstance(message, protocol.EndCall):
            await self._on_end_call()
        elif isinstance(message, protocol.RequestFeedback):
            await self._on_request_feedback()
        else:
            self.send(
                protocol.ErrorMessage(
                    "protocol", f"unexpected {type(message).__name__} from client"
                )
            )

    def _resolve_persona(self, hello: protocol.Hello) -> PersonaSpec:
        if hello.persona is not None:
            return hello.persona
        path = self.server.config.persona_dir_path() / f"{hello.persona_id}.json"
        if not path.exists():
            raise PersonaFileError(f"unknown persona_id {hello.persona_id!r}")
        return load_persona_file(path)

    def _on_hello(self, hello: protocol.Hello) -> None:
        if self.session is not None:
            self.send(protocol.ErrorMessage("protocol", "hello already received"))
            return
        try:
            spec = self._resolve_persona(hello)
            session = create_session(
                spec=spec,
                policy=self.server.policy,
                goal=hello.goal,
                clock=self.server.clock,
                timers=self.server.config.session_clock(),
                supported_languages=self.server.config.supported_languages,
            )
        except PersonaFileError as exc:
            self.send(protocol.ErrorMessage("unknown_persona", str(exc)))
            return
        except PersonaValidationError as exc:
            self.send(protocol.ErrorMessage("invalid_persona", str(exc)))
            return
        session.activate()
        self.session = session
        self.tick_task = asyncio.create_task(self._tick_loop())
        self.send(
            protocol.SessionReady(
                session_id=session.session_id,
                channels=self.server.library.channels,
                fps=self.server.library.fps,
            )
        )

    def _on_audio_chunk(self, chunk: AudioChunk) -> None:
        if self.session is None:
            self.send(protocol.ErrorMessage("protocol", "hello required first"))
            return
        if self._turn_running():
            self.send(protocol.ErrorMessage("turn_in_flight", "utterance rejected"))
            return
        self.pending_audio.append(chunk)

    def _on_utterance_end(self) -> None:
        chunks = self.pending_audio
        self.pending_audio = []
        self._start_turn(chunks)

    def _start_turn(self, utterance) -> None:
        session = self.session
        if session is None:
            self.send(protocol.ErrorMessage("protocol", "hello required first"))
            return
        if not session.is_open:
            self.send(protocol.ErrorMessage("session_closed", "call has ended"))
            return
        if self._turn_running():
            self.send(protocol.ErrorMessage("turn_in_flight", "utterance rejected"))
            return
        seed = self.server.config.seed + self.turns_started
        self.turns_started += 1
        self.turn_task = asyncio.create_task(self._consume_turn(session, utterance, seed))

    async def _consume_turn(self, session: Session, utterance, seed: int) -> None:
        try:
            async for message in run_turn(
                session,
                self.server.provider_set,
                self.server.library,
                utterance,
                rng_seed=seed,
            ):
                self.send(message)
        except asyncio.CancelledError:
            raise
        except Exception:
            log.exception("turn pipeline failed")
            self.send(protocol.ErrorMessage("internal", "turn failed unexpectedly"))

    async def _tick_loop(self) -> None:
        interval = self.server.config.tick_interval_s
        while True:
            await asyncio.sleep(interval)
            session = self.session
            if session is None or not session.is_open:
                return
            for event in session.tick():
                if event is TickEvent.WARNING_DUE:
                    self.send(protocol.TimeWarning(session.remaining_ms()))
                elif event is TickEvent.CLOSE_DUE:
                    await self._cancel_turn()
                    if session.is_open:
                        session.close(CloseReason.TIME_LIMIT)
                        self.send(protocol.SessionClosed(CloseReason.TIME_LIMIT))
                    return

    async def _on_end_call(self) -> None:
        session = self.session
        if session is None:
            self.send(protocol.ErrorMessage("protocol", "hello required first"))
            return
        if not session.is_open:
            self.send(protocol.ErrorMessage("session_closed", "call already ended"))
            return
        await self._cancel_turn()
        if session.is_open:
            session.close(CloseReason.USER_ENDED)
            self.send(protocol.SessionClosed(CloseReason.USER_ENDED))

    async def _on_request_feedback(self) -> None:
        session = self.session
        if session is None:
            self.send(protocol.ErrorMessage("protocol", "hello required first"))
            return
        if session.is_open:
            self.send(
                protocol.ErrorMessage(
                    "session_open", "feedback is available after the call ends"
                )
            )
            return
        if session.transcript is None:
            self.send(
                protocol.ErrorMessage("empty_transcript", "transcript no longer available")
            )
            return
        if not session.goal.strip():
            self.send(
                protocol.ErrorMessage("no_goal", "no practice goal was set for this call")
            )
            return
        try:
            report = await generate_feedback(
                self.server.provider_set.llm,
                session.transcript,
                session.goal,
                self.server.provider_set.budgets.llm,
            )
        except EmptyTranscriptError:
            self.send(
                protocol.ErrorMessage("empty_transcript", "no user turns to analyze")
            )
            return
        except (UnparseableFeedbackError, ProviderError) as exc:
            self.send(protocol.ErrorMessage("feedback_unavailable", str(exc)))
            return
        self.send(protocol.FeedbackReportMessage(report))
        session.discard_transcript()


class CallServer:
    """Owns the listening socket and the set of live connections."""

    def __init__(
        self,
        config: ServerConfig,
        provider_set: Optional[ProviderSet] = None,
        policy: Optional[GuardrailPolicy] = None,
        library: Optional[ClipLibrary] = None,
        clock: Optional[Clock] = None,
    ):
        self.config = config
        self.provider_set = provider_set or build_provider_set(config)
        self.policy = policy or build_guardrail_policy(config)
        self.library = library or load_clip_library(config.clip_library_path())
        self.clock = clock or MonotonicClock()
        self._server = None
        self._connections: set[_Connection] = set()

    async def start(self) -> None:
        try:
            self._server = await ws_serve(
                self._handle, self.config.host, self.config.port
            )
        except OSError as exc:
            raise BindError(
                f"cannot bind {self.config.host}:{self.config.port}: {exc}"
            ) from exc
        log.info("listening on %s:%d", self.config.host, self.port)

    @property
    def port(self) -> int:
        assert self._server is not None
        return self._server.sockets[0].getsockname()[1]

    async def _handle(self, ws: ServerConnection) -> None:
        connection = _Connection(self, ws)
        self._connections.add(connection)
        try:
            await connection.run()
        finally:
            self._connections.discard(connection)

    async def stop(self) -> None:
        """Graceful shutdown: every open session is told ServerShutdown."""
        for connection in list(self._connections):
            try:
                await connection.shutdown()
            except ConnectionClosed:
                pass
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None


async def serve(config: ServerConfig, stop: Optional[asyncio.Event] = None) -> None:
    """Run the server until `stop` is set (or forever)."""
    server = CallServer(config)
    await server.start()
    try:
        if stop is None:
            stop = asyncio.Event()
        await stop.wait()
    finally:
        await server.stop()
