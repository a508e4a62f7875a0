"""Run recording and structured logging helpers for benchmark sweeps."""

from __future__ import annotations

from collections import deque
from datetime import datetime, timezone
import logging
from typing import Any, Callable, Iterator

from pydantic import BaseModel, ConfigDict, Field

from .models import MetricRow


class RunEvent(BaseModel):
    """Normalized record of one benchmark run."""

    model_config = ConfigDict(extra="forbid")

    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    method: str
    loss: str
    sweep_value: float
    repetition: int | None = None
    seed: int | None = None
    hamming_error: float | None = None
    nrmse: float | None = None
    converged: bool
    iterations: int | None = None
    wall_time: float
    error: str | None = None

    def summary(self) -> dict[str, Any]:
        """Return a compact summary suitable for structured logging."""

        return {
            "timestamp": self.timestamp.isoformat(),
            "method": self.method,
            "sweep_value": self.sweep_value,
            "repetition": self.repetition,
            "hamming_error": self.hamming_error,
            "converged": self.converged,
            "wall_time": float(self.wall_time),
        }


class RunRecorder:
    """Ring buffer of the most recent benchmark runs."""

    def __init__(
        self,
        *,
        max_events: int = 200,
        clock: Callable[[], datetime] | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        self._events: deque[RunEvent] = deque(maxlen=max(1, max_events))
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._logger = logger or logging.getLogger(__name__)
        self._total = 0

    @property
    def total(self) -> int:
        """Number of runs recorded, including those evicted from the buffer."""

        return self._total

    def record(self, row: MetricRow | dict) -> RunEvent:
        """Validate a result row and append it as an event."""

        row_model = row if isinstance(row, MetricRow) else MetricRow.model_validate(row)
        event = RunEvent(
            timestamp=self._clock(),
            method=row_model.method,
            loss=row_model.loss,
            sweep_value=row_model.sweep_value,
            repetition=row_model.repetition,
            seed=row_model.seed,
            hamming_error=row_model.hamming_error,
            nrmse=row_model.nrmse,
            converged=row_model.converged,
            iterations=row_model.iterations,
            wall_time=row_model.wall_time,
            error=row_model.error,
        )
        self._events.append(event)
        self._total += 1
        self._emit_log(event)
        return event

    def iter_recent(self) -> Iterator[RunEvent]:
        """Yield stored events from oldest to newest."""

        return iter(tuple(self._events))

    def as_dicts(self) -> list[dict]:
        return [event.model_dump(mode="json") for event in self._events]

    def _emit_log(self, event: RunEvent) -> None:
        try:
            self._logger.info(
                "maximin.run method=%s sweep_value=%s converged=%s",
                event.method,
                event.sweep_value,
                event.converged,
                extra={
                    "maximin_run": event.summary(),
                    "maximin_full_event": event.model_dump(mode="json"),
                },
            )
        except Exception:  # pragma: no cover - logging failures should not break a sweep
            self._logger.debug("Failed to emit run log", exc_info=True)
