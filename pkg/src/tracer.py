"""OpenTelemetry tracer setup for solver observability."""

import functools

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor

from config import OTEL_EXPORTER_OTLP_ENDPOINT, OTEL_SERVICE_NAME

tracer_provider = TracerProvider(resource=Resource.create({"service.name": OTEL_SERVICE_NAME}))

# Export only when a collector is configured
if OTEL_EXPORTER_OTLP_ENDPOINT:
    from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter

    tracer_provider.add_span_processor(
        SimpleSpanProcessor(OTLPSpanExporter(endpoint=f"{OTEL_EXPORTER_OTLP_ENDPOINT}/v1/traces"))
    )

# Get tracer for manual instrumentation
tracer = tracer_provider.get_tracer(__name__)


# Decorator for easy tracing
def trace_function(span_kind="solver"):
    """Decorator to trace functions."""
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with tracer.start_as_current_span(
                func.__name__,
                attributes={"sim.span.kind": span_kind}
            ):
                return func(*args, **kwargs)
        return wrapper
    return decorator
