from .integrators import AdaptiveIntegrator, AutoIntegrator, ExactPropagatorIntegrator
from .result_sinks import CsvResultSink, JsonResultSink

__all__ = [
    "AdaptiveIntegrator",
    "AutoIntegrator",
    "CsvResultSink",
    "ExactPropagatorIntegrator",
    "JsonResultSink",
]
