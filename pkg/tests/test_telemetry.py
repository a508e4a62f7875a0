import logging
from datetime import datetime, timezone

import pytest
from pydantic import ValidationError

from binary_maximin.models import MetricRow
from binary_maximin.telemetry import RunRecorder


def _row(method: str, sweep_value: float, **fields) -> dict:
    return {"method": method, "loss": "squared", "sweep": "sigma", "sweep_value": sweep_value, **fields}


class TestRunRecorder:
    """RunRecorder behaviors."""

    def test_validates_rows_and_truncates(self) -> None:
        """Recorded rows should validate via models and enforce max size."""

        recorder = RunRecorder(max_events=2)

        first = recorder.record(_row("maximin", 0.1, hamming_error=0.0, converged=True, wall_time=0.5))
        assert first.method == "maximin"
        assert first.hamming_error == 0.0

        recorder.record(MetricRow(**_row("lr", 0.1, hamming_error=0.25, wall_time=0.01)))
        recorder.record(_row("ste", 0.5, hamming_error=0.4, error="boom", wall_time=0.2))

        events = list(recorder.iter_recent())
        assert len(events) == 2
        assert [event.method for event in events] == ["lr", "ste"]
        assert events[-1].error == "boom"
        assert recorder.total == 3

    def test_rejects_invalid_rows(self) -> None:
        recorder = RunRecorder()
        with pytest.raises(ValidationError):
            recorder.record(_row("maximin", 0.1, hamming_error=1.5))
        assert recorder.total == 0

    def test_uses_clock_and_serializes(self) -> None:
        stamp = datetime(2024, 6, 7, 12, 0, tzinfo=timezone.utc)
        recorder = RunRecorder(clock=lambda: stamp)
        event = recorder.record(_row("maximin", 1.0, repetition=3, seed=11, iterations=40))
        assert event.timestamp == stamp
        payload = recorder.as_dicts()[0]
        assert payload["timestamp"].startswith("2024-06-07T12:00:00")
        assert payload["repetition"] == 3
        assert payload["iterations"] == 40

    def test_emits_structured_log(self, caplog) -> None:
        caplog.set_level(logging.INFO, logger="binary_maximin")
        RunRecorder().record(_row("sdr", 0.2, converged=True, wall_time=1.0))
        record = next(r for r in caplog.records if r.getMessage().startswith("maximin.run"))
        assert record.maximin_run["method"] == "sdr"
        assert record.maximin_run["converged"] is True
        assert record.maximin_full_event["loss"] == "squared"
