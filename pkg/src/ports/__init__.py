from .integrator import Integrator
from .result_sink import ResultSink, ResultTable

__all__ = ["Integrator", "ResultSink", "ResultTable"]
