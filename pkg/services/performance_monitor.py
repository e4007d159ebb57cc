"""
Performance monitoring service for DSCM FEM.

This module tracks how long each numerical stage takes (assembly, solves,
quadrature, refinement), how often it fails, and samples process memory
with psutil once per refinement level of a convergence study.
"""

import time
from contextlib import contextmanager
import psutil
from typing import Dict, Iterator, List, Any, Optional
from dataclasses import dataclass, field
from collections import defaultdict, deque
from datetime import datetime, timedelta
from enum import Enum

from .logging_service import get_logger, log_operation


class MetricType(Enum):
    """Types of metrics that can be tracked."""
    STAGE_DURATION = "stage_duration"
    STAGE_COUNT = "stage_count"
    ERROR_COUNT = "error_count"
    PROCESS_RSS_MB = "process_rss_mb"
    SYSTEM_CPU = "system_cpu"


@dataclass
class MetricPoint:
    """A single metric data point."""
    timestamp: float
    value: float
    labels: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'timestamp': self.timestamp,
            'value': self.value,
            'labels': self.labels,
            'datetime': datetime.fromtimestamp(self.timestamp).isoformat()
        }


@dataclass
class RequestMetrics:
    """Call statistics of one numerical stage."""
    total_requests: int = 0
    successful_requests: int = 0
    failed_requests: int = 0
    total_duration_ms: float = 0.0
    min_duration_ms: float = float('inf')
    max_duration_ms: float = 0.0
    recent_durations: deque = field(default_factory=lambda: deque(maxlen=100))

    def add_request(self, duration_ms: float, success: bool) -> None:
        self.total_requests += 1
        self.total_duration_ms += duration_ms
        self.recent_durations.append(duration_ms)

        if success:
            self.successful_requests += 1
        else:
            self.failed_requests += 1

        self.min_duration_ms = min(self.min_duration_ms, duration_ms)
        self.max_duration_ms = max(self.max_duration_ms, duration_ms)

    @property
    def success_rate(self) -> float:
        if self.total_requests == 0:
            return 0.0
        return (self.successful_requests / self.total_requests) * 100

    @property
    def error_rate(self) -> float:
        if self.total_requests == 0:
            return 0.0
        return (self.failed_requests / self.total_requests) * 100

    @property
    def average_duration_ms(self) -> float:
        if self.total_requests == 0:
            return 0.0
        return self.total_duration_ms / self.total_requests

    def to_dict(self) -> Dict[str, Any]:
        return {
            'total_requests': self.total_requests,
            'successful_requests': self.successful_requests,
            'failed_requests': self.failed_requests,
            'success_rate': self.success_rate,
            'error_rate': self.error_rate,
            'average_duration_ms': self.average_duration_ms,
            'total_duration_ms': self.total_duration_ms,
            'min_duration_ms': self.min_duration_ms if self.min_duration_ms != float('inf') else 0.0,
            'max_duration_ms': self.max_duration_ms
        }


class PerformanceMonitor:
    """
    Stage timing and memory sampling.

    Stages are recorded by the services themselves after every operation;
    memory and CPU are sampled on demand (``sample_system``) rather than by a
    background thread, since a study is a single sequential process.
    """

    def __init__(self, max_history_points: int = 1000):
        self.logger = get_logger(__name__)
        self.max_history_points = max_history_points

        self._metrics: Dict[str, deque] = defaultdict(lambda: deque(maxlen=max_history_points))
        self._request_metrics: Dict[str, RequestMetrics] = defaultdict(RequestMetrics)
        self._process = psutil.Process()
        self._start_time = time.time()

    def record_metric(self, metric_type: MetricType, value: float, labels: Optional[Dict[str, str]] = None) -> None:
        self._metrics[metric_type.value].append(MetricPoint(
            timestamp=time.time(),
            value=value,
            labels=labels or {}
        ))

    def record_request(self, operation: str, duration_ms: float, success: bool,
                       labels: Optional[Dict[str, str]] = None) -> None:
        """
        Record one execution of a numerical stage.

        Args:
            operation: Stage name (e.g. 'cg_solve', 'refine_to_graded')
            duration_ms: Duration in milliseconds
            success: Whether the stage succeeded
            labels: Optional labels for categorization
        """
        self._request_metrics[operation].add_request(duration_ms, success)

        tagged = {**(labels or {}), 'operation': operation}
        self.record_metric(MetricType.STAGE_DURATION, duration_ms, tagged)
        self.record_metric(MetricType.STAGE_COUNT, 1, tagged)
        if not success:
            self.record_metric(MetricType.ERROR_COUNT, 1, tagged)

    def sample_system(self, labels: Optional[Dict[str, str]] = None) -> Dict[str, float]:
        """
        Sample resident memory of this process and system CPU load.

        Returns:
            {'rss_mb': ..., 'cpu_percent': ...}
        """
        rss_mb = self._process.memory_info().rss / (1024 * 1024)
        cpu_percent = psutil.cpu_percent(interval=None)
        self.record_metric(MetricType.PROCESS_RSS_MB, rss_mb, labels)
        self.record_metric(MetricType.SYSTEM_CPU, cpu_percent, labels)
        return {'rss_mb': rss_mb, 'cpu_percent': cpu_percent}

    def get_request_metrics(self, operation: Optional[str] = None) -> Dict[str, Any]:
        if operation:
            if operation in self._request_metrics:
                return {operation: self._request_metrics[operation].to_dict()}
            return {operation: RequestMetrics().to_dict()}

        return {
            op: metrics.to_dict()
            for op, metrics in self._request_metrics.items()
        }

    def stage_totals_ms(self) -> Dict[str, float]:
        """Total time spent per stage since the last reset."""
        return {op: metrics.total_duration_ms for op, metrics in self._request_metrics.items()}

    def peak_rss_mb(self) -> float:
        values: List[float] = [p.value for p in self._metrics[MetricType.PROCESS_RSS_MB.value]]
        return max(values) if values else 0.0

    def get_performance_summary(self) -> Dict[str, Any]:
        uptime_seconds = time.time() - self._start_time

        total_requests = sum(m.total_requests for m in self._request_metrics.values())
        total_failed = sum(m.failed_requests for m in self._request_metrics.values())

        return {
            'uptime_seconds': uptime_seconds,
            'uptime_formatted': str(timedelta(seconds=int(uptime_seconds))),
            'total_stages': total_requests,
            'failed_stages': total_failed,
            'peak_rss_mb': self.peak_rss_mb(),
            'stage_metrics': self.get_request_metrics(),
            'timestamp': datetime.now().isoformat()
        }

    def reset_metrics(self) -> None:
        """Reset all metrics (called at the start of every study)."""
        self._metrics.clear()
        self._request_metrics.clear()
        self._start_time = time.time()


_performance_monitor: Optional[PerformanceMonitor] = None


def get_performance_monitor() -> PerformanceMonitor:
    global _performance_monitor
    if _performance_monitor is None:
        _performance_monitor = PerformanceMonitor()
    return _performance_monitor


def record_request(operation: str, duration_ms: float, success: bool,
                   labels: Optional[Dict[str, str]] = None) -> None:
    """Record one execution of a numerical stage."""
    get_performance_monitor().record_request(operation, duration_ms, success, labels)


def sample_system(labels: Optional[Dict[str, str]] = None) -> Dict[str, float]:
    """Sample process memory and CPU load."""
    return get_performance_monitor().sample_system(labels)


def get_performance_summary() -> Dict[str, Any]:
    return get_performance_monitor().get_performance_summary()


@contextmanager
def track_stage(logger_name: str, operation: str, level: str = "DEBUG",
                extra_data: Optional[Dict[str, Any]] = None) -> Iterator[Dict[str, Any]]:
    """
    Time a numerical stage, log it and record it.

    The yielded dict is logged as extra data, so the stage body can add
    iteration counts or residuals to it. Failures are logged at ERROR and
    re-raised unchanged.
    """
    start_time = time.time()
    info: Dict[str, Any] = dict(extra_data or {})
    try:
        yield info
    except Exception as e:
        duration_ms = (time.time() - start_time) * 1000
        log_operation(logger_name, operation, level="ERROR", duration_ms=duration_ms,
                      success=False, error_message=str(e), extra_data=info)
        record_request(operation, duration_ms, False, {'error_type': type(e).__name__})
        raise
    duration_ms = (time.time() - start_time) * 1000
    log_operation(logger_name, operation, level=level, duration_ms=duration_ms,
                  success=True, extra_data=info)
    record_request(operation, duration_ms, True)
