"""Batching REST service over the pipeline.

Request flow: the HTTP layer validates a payload and submits an envelope to
the ingress queue; a single scheduler thread drains the queue and buckets
envelopes by task signature, closing a bucket when its batch window expires
or its sentence cap is reached; closed buckets become tickets on a FIFO
queue consumed by a worker pool; workers parse each ticket's documents in
one shared-encoder call and push every member's Document to its own reply
channel keyed by correlation id.

Shared state is either immutable (configs, pipelines) or owned by exactly
one component (the scheduler owns the buckets, each worker owns its ticket),
so the only synchronization points are the queues, the admission counter,
and the ticket log.  Admission is bounded: beyond ``queue_depth`` in-flight
requests the service answers 503 instead of queuing further work.

The scheduler core (:class:`BatchScheduler`) is a plain state machine driven
by explicit timestamps, so merging, capping and FIFO behavior are testable
with a simulated clock; the live service drives it with a monotonic clock.
"""

from __future__ import annotations

import itertools
import json
import queue
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .document import TASK_ORDER, TOK, Document, doc_to_json
from .pipeline import ModelRegistry, RegistryError, registry_for


@dataclass(frozen=True)
class ServerConfig:
    """Tunables of one service instance."""

    host: str = "0.0.0.0"
    port: int = 8000
    workers: int = 2
    batch_window_ms: float = 5.0
    queue_depth: int = 256
    sentence_cap: int = 128
    default_language: str = "en"
    manifest: str | None = None
    reply_timeout: float = 120.0


@dataclass(frozen=True)
class TaskSignature:
    """What makes requests batch-compatible: tasks, language, pipeline."""

    tasks: tuple[str, ...] | None
    language: str
    identifier: str


@dataclass
class RequestEnvelope:
    """One admitted request waiting for its Document."""

    correlation_id: int
    arrival: float
    signature: TaskSignature
    sentences: list[list[str]]
    reply: queue.Queue = field(default_factory=lambda: queue.Queue(maxsize=1))

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class BatchTicket:
    """A closed bucket: homogeneous members plus their slice of the batch.

    ``members`` holds ``(envelope, start, end)`` where the half-open ranges
    partition the concatenated sentence list of the assembled batch.
    """

    signature: TaskSignature
    members: tuple[tuple[RequestEnvelope, int, int], ...]

    @property
    def sentence_count(self) -> int:
        return self.members[-1][2] if self.members else 0


class BatchScheduler:
    """Time-driven bucketing of envelopes into homogeneous tickets.

    Not thread-safe by design: exactly one owner feeds it timestamps via
    :meth:`submit` and :meth:`poll`.  A bucket closes when its window
    (opened by its first envelope) expires, when its sentence count reaches
    the cap, or when an incoming envelope would overflow the cap.
    """

    def __init__(self, window: float, sentence_cap: int):
        if window < 0 or sentence_cap < 1:
            raise ValueError(f"bad scheduler settings: {window=} {sentence_cap=}")
        self.window = window
        self.sentence_cap = sentence_cap
        self._buckets: dict[TaskSignature, list[RequestEnvelope]] = {}
        self._deadlines: dict[TaskSignature, float] = {}
        self._opened: dict[TaskSignature, float] = {}

    def submit(self, envelope: RequestEnvelope, now: float) -> list[BatchTicket]:
        """Add one envelope; return any tickets this arrival closed."""
        signature = envelope.signature
        tickets = []
        bucket = self._buckets.get(signature)
        if bucket is not None:
            held = sum(e.sentence_count for e in bucket)
            if held + envelope.sentence_count > self.sentence_cap:
                tickets.append(self._close(signature))
                bucket = None
        if bucket is None:
            bucket = []
            self._buckets[signature] = bucket
            self._deadlines[signature] = now + self.window
            self._opened[signature] = now
        bucket.append(envelope)
        if sum(e.sentence_count for e in bucket) >= self.sentence_cap:
            tickets.append(self._close(signature))
        return tickets

    def poll(self, now: float) -> list[BatchTicket]:
        """Close every bucket whose window has expired, oldest first."""
        expired = sorted(
            (sig for sig, deadline in self._deadlines.items() if deadline <= now),
            key=lambda sig: (self._deadlines[sig], self._opened[sig]),
        )
        return [self._close(sig) for sig in expired]

    def flush(self) -> list[BatchTicket]:
        """Close all buckets regardless of deadlines (shutdown path)."""
        order = sorted(self._buckets, key=lambda sig: self._opened[sig])
        return [self._close(sig) for sig in order]

    def next_deadline(self) -> float | None:
        return min(self._deadlines.values(), default=None)

    def pending(self) -> int:
        return sum(len(b) for b in self._buckets.values())

    def _close(self, signature: TaskSignature) -> BatchTicket:
        bucket = self._buckets.pop(signature)
        self._deadlines.pop(signature)
        self._opened.pop(signature)
        members = []
        start = 0
        for envelope in bucket:
            end = start + envelope.sentence_count
            members.append((envelope, start, end))
            start = end
        return BatchTicket(signature, tuple(members))


@dataclass(frozen=True)
class TicketRecord:
    """Introspection entry: who was batched together and how large it was."""

    signatures: tuple[TaskSignature, ...]
    correlation_ids: tuple[int, ...]
    sentence_count: int


class ServiceError(Exception):
    """Wraps a client-visible failure with its HTTP status."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


_STOP = object()


class Service:
    """The queueing core: admission, scheduling, workers, response routing."""

    def __init__(self, config: ServerConfig, registry: ModelRegistry | None = None,
                 clock=time.monotonic):
        self.config = config
        self.registry = registry if registry is not None else registry_for(config.manifest)
        self.clock = clock
        self.ticket_log: list[TicketRecord] = []
        self._log_lock = threading.Lock()
        self._ingress: queue.Queue = queue.Queue()
        self._tickets: queue.Queue = queue.Queue()
        self._ids = itertools.count(1)
        self._inflight = 0
        self._admission = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._started = False

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        scheduler = threading.Thread(target=self._run_scheduler, daemon=True,
                                     name="parsekit-scheduler")
        scheduler.start()
        self._threads.append(scheduler)
        for i in range(self.config.workers):
            worker = threading.Thread(target=self._run_worker, daemon=True,
                                      name=f"parsekit-worker-{i}")
            worker.start()
            self._threads.append(worker)

    def stop(self) -> None:
        if not self._started:
            return
        self._ingress.put(_STOP)
        for thread in self._threads:
            thread.join(timeout=10)
        self._threads.clear()
        self._started = False

    # -- request path -------------------------------------------------------

    def submit(self, payload) -> tuple[int, Document | str]:
        """Validate, admit, schedule and await one request.

        Returns (200, Document) or (status, error message); blocks the
        calling thread until the response is routed back.
        """
        try:
            signature, sentences = self._validate(payload)
        except ServiceError as e:
            return e.status, str(e)

        with self._admission:
            if self._inflight >= self.config.queue_depth:
                return 503, "server is at capacity, retry later"
            self._inflight += 1
        try:
            envelope = RequestEnvelope(
                correlation_id=next(self._ids),
                arrival=self.clock(),
                signature=signature,
                sentences=sentences,
            )
            self._ingress.put(envelope)
            try:
                status, body = envelope.reply.get(timeout=self.config.reply_timeout)
            except queue.Empty:
                return 500, "timed out waiting for a worker"
            return status, body
        finally:
            with self._admission:
                self._inflight -= 1

    def _validate(self, payload) -> tuple[TaskSignature, list[list[str]]]:
        if not isinstance(payload, dict):
            raise ServiceError(400, "body must be a JSON object")
        unknown = set(payload) - {"text", "tokens", "models", "language"}
        if unknown:
            raise ServiceError(400, f"unknown fields: {sorted(unknown)}")
        has_text = "text" in payload
        has_tokens = "tokens" in payload
        if has_text == has_tokens:
            raise ServiceError(400, "provide exactly one of 'text' or 'tokens'")

        language = payload.get("language", self.config.default_language)
        if not isinstance(language, str) or not language:
            raise ServiceError(400, "'language' must be a non-empty string")
        language = language.lower()

        models = payload.get("models")
        if models is not None:
            if not isinstance(models, list) or not all(isinstance(m, str) for m in models):
                raise ServiceError(400, "'models' must be a list of task names")
            bad = [m for m in models if m not in TASK_ORDER]
            if bad:
                raise ServiceError(
                    422, f"unknown tasks {bad}; known tasks: {list(TASK_ORDER)}"
                )

        try:
            if models is None:
                identifier = self.registry.default_identifier(language)
                tasks = None
            else:
                wanted = tuple(sorted(set(models) - {TOK}))
                identifier = self.registry.select(wanted, language)
                tasks = wanted
        except RegistryError as e:
            raise ServiceError(422, str(e)) from e

        if has_text:
            if not isinstance(payload["text"], str):
                raise ServiceError(400, "'text' must be a string")
            sentences = self.registry.load(identifier).tokenize(payload["text"])
        else:
            tokens = payload["tokens"]
            if not isinstance(tokens, list) or not all(
                isinstance(s, list) and s and all(isinstance(t, str) for t in s)
                for s in tokens
            ):
                raise ServiceError(
                    400, "'tokens' must be a list of non-empty lists of strings"
                )
            sentences = [list(s) for s in tokens]
        return TaskSignature(tasks, language, identifier), sentences

    # -- scheduler / workers -------------------------------------------------

    def _run_scheduler(self) -> None:
        scheduler = BatchScheduler(
            window=self.config.batch_window_ms / 1000.0,
            sentence_cap=self.config.sentence_cap,
        )
        while True:
            deadline = scheduler.next_deadline()
            timeout = None if deadline is None else max(0.0, deadline - self.clock())
            try:
                item = self._ingress.get(timeout=timeout)
            except queue.Empty:
                item = None
            if item is _STOP:
                for ticket in scheduler.flush():
                    self._tickets.put(ticket)
                for _ in range(self.config.workers):
                    self._tickets.put(_STOP)
                return
            now = self.clock()
            if item is not None:
                for ticket in scheduler.submit(item, now):
                    self._tickets.put(ticket)
            for ticket in scheduler.poll(now):
                self._tickets.put(ticket)

    def _run_worker(self) -> None:
        while True:
            ticket = self._tickets.get()
            if ticket is _STOP:
                return
            self._record(ticket)
            self._execute(ticket)

    def _record(self, ticket: BatchTicket) -> None:
        record = TicketRecord(
            signatures=tuple(env.signature for env, _, _ in ticket.members),
            correlation_ids=tuple(env.correlation_id for env, _, _ in ticket.members),
            sentence_count=ticket.sentence_count,
        )
        with self._log_lock:
            self.ticket_log.append(record)

    def _execute(self, ticket: BatchTicket) -> None:
        try:
            pipeline = self.registry.load(ticket.signature.identifier)
            documents = pipeline.parse_batch(
                [env.sentences for env, _, _ in ticket.members],
                ticket.signature.tasks,
            )
            self._check_routing(ticket, documents)
        except Exception:
            # isolate the failing member(s): retry each one alone
            self._execute_individually(ticket)
            return
        for (envelope, _, _), document in zip(ticket.members, documents):
            envelope.reply.put((200, document))

    def _check_routing(self, ticket: BatchTicket, documents) -> None:
        if len(documents) != len(ticket.members):
            raise RuntimeError(
                f"{len(ticket.members)} members but {len(documents)} results"
            )
        for (envelope, start, end), document in zip(ticket.members, documents):
            if document.num_sentences != end - start:
                raise RuntimeError(
                    f"member {envelope.correlation_id} expected {end - start} "
                    f"sentences, decoded {document.num_sentences}"
                )

    def _execute_individually(self, ticket: BatchTicket) -> None:
        for envelope, _, _ in ticket.members:
            try:
                pipeline = self.registry.load(ticket.signature.identifier)
                document = pipeline.parse(envelope.sentences, ticket.signature.tasks)
                envelope.reply.put((200, document))
            except Exception as e:
                envelope.reply.put((500, f"parse failed: {e}"))

    # -- health --------------------------------------------------------------

    def health(self) -> dict:
        identifiers = getattr(self.registry, "identifiers", tuple)()
        with self._admission:
            inflight = self._inflight
        return {
            "status": "ok",
            "models": list(identifiers),
            "workers": self.config.workers,
            "queue_depth": self.config.queue_depth,
            "inflight": inflight,
            "batch_window_ms": self.config.batch_window_ms,
        }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):
        pass

    def _send(self, status: int, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, data) -> None:
        self._send(status, json.dumps(data, ensure_ascii=False).encode("utf-8"))

    def do_GET(self):
        if self.path != "/healthz":
            self._send_json(404, {"error": "not found"})
            return
        self._send_json(200, self.server.service.health())

    def do_POST(self):
        if self.path != "/parse":
            self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._send_json(400, {"error": "missing Content-Length"})
            return
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            self._send_json(400, {"error": f"body is not valid JSON: {e}"})
            return
        try:
            status, body = self.server.service.submit(payload)
        except Exception as e:
            self._send_json(500, {"error": f"internal error: {e}"})
            return
        if status == 200:
            self._send(200, doc_to_json(body).encode("utf-8"))
        else:
            self._send_json(status, {"error": body})


class _HTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, service: Service):
        self.service = service
        super().__init__(address, _Handler)


def start_server(config: ServerConfig, registry: ModelRegistry | None = None):
    """Start the service plus its HTTP front end on a background thread.

    Returns ``(httpd, service)``; the caller owns shutdown via
    ``httpd.shutdown()`` and ``service.stop()``.  ``config.port`` may be 0
    to bind an ephemeral port (``httpd.server_address`` has the real one).
    """
    service = Service(config, registry)
    service.start()
    try:
        httpd = _HTTPServer((config.host, config.port), service)
    except OSError:
        service.stop()
        raise
    thread = threading.Thread(target=httpd.serve_forever, daemon=True,
                              name="parsekit-http")
    thread.start()
    return httpd, service


def serve(config: ServerConfig, registry: ModelRegistry | None = None) -> None:
    """Run the server in the foreground until interrupted."""
    httpd, service = start_server(config, registry)
    host, port = httpd.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.shutdown()
        service.stop()
