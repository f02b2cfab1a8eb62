"""Telemetry for simulation runs.

Wraps experiment and CLI operations with timing, success/error logging and,
when the OpenTelemetry SDK is installed, a span per call.
"""

import logging
import time
from functools import wraps
from typing import Any, Callable, Dict, List

try:
    from opentelemetry import trace
    from opentelemetry.trace import Status, StatusCode

    tracer = trace.get_tracer(__name__)
    OPENTELEMETRY_AVAILABLE = True
except ImportError:
    OPENTELEMETRY_AVAILABLE = False

    class _NoopSpan:
        def set_attribute(self, key, value):
            pass

        def set_status(self, status):
            pass

        def record_exception(self, exception):
            pass

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc_val, exc_tb):
            return False

    class _NoopTracer:
        def start_as_current_span(self, name, **kwargs):
            return _NoopSpan()

    tracer = _NoopTracer()


def _ok_status():
    return Status(StatusCode.OK) if OPENTELEMETRY_AVAILABLE else None


def _error_status():
    return Status(StatusCode.ERROR) if OPENTELEMETRY_AVAILABLE else None


class TelemetryManager:
    """Times named operations and keeps their durations for result manifests."""

    def __init__(self, component: str):
        self.component = component
        self.logger = logging.getLogger(f"critgraph.telemetry.{component}")
        self.durations: Dict[str, List[float]] = {}

    def trace(self, operation: str) -> Callable:
        """Decorator factory: ``@telemetry.trace('run_experiment')``."""
        def decorator(func: Callable) -> Callable:
            @wraps(func)
            def wrapper(*args, **kwargs) -> Any:
                span_name = f"{self.component}.{operation}"
                start = time.perf_counter()
                with tracer.start_as_current_span(span_name) as span:
                    span.set_attribute("component", self.component)
                    span.set_attribute("operation", operation)
                    for key, value in kwargs.items():
                        if isinstance(value, (int, float, str, bool)):
                            span.set_attribute(f"param.{key}", value)
                    try:
                        result = func(*args, **kwargs)
                    except Exception as exc:
                        duration_ms = (time.perf_counter() - start) * 1000
                        self._record(operation, duration_ms)
                        span.set_attribute("duration_ms", duration_ms)
                        span.set_status(_error_status())
                        span.record_exception(exc)
                        self.logger.error(f"{span_name} failed after {duration_ms:.2f}ms: {exc}")
                        raise
                    duration_ms = (time.perf_counter() - start) * 1000
                    self._record(operation, duration_ms)
                    span.set_attribute("duration_ms", duration_ms)
                    span.set_status(_ok_status())
                    self.logger.info(f"{span_name} finished in {duration_ms:.2f}ms")
                    return result
            return wrapper
        return decorator

    def _record(self, operation: str, duration_ms: float) -> None:
        self.durations.setdefault(operation, []).append(duration_ms)

    def summary(self) -> Dict[str, Dict[str, float]]:
        return {
            op: {'calls': len(values), 'total_ms': sum(values), 'max_ms': max(values)}
            for op, values in self.durations.items()
        }
