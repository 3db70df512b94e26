from __future__ import annotations

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

VECTORS_SIMULATED_TOTAL = Counter(
    "redlab_vectors_simulated_total",
    "Input vectors pushed through gate-level evaluation",
    labelnames=("circuit",),
)

FAULT_PATTERNS_EVALUATED_TOTAL = Counter(
    "redlab_fault_patterns_evaluated_total",
    "Fault patterns checked for masking",
    labelnames=("scheme", "model"),
)

MONTE_CARLO_TRIALS_TOTAL = Counter(
    "redlab_monte_carlo_trials_total",
    "Monte Carlo reliability trials drawn",
    labelnames=("scheme",),
)

COMMAND_DURATION_SECONDS = Histogram(
    "redlab_command_duration_seconds",
    "CLI command wall time in seconds",
    labelnames=("command", "outcome"),
)


def record_vectors_simulated(*, circuit: str, count: int) -> None:
    VECTORS_SIMULATED_TOTAL.labels(circuit=circuit).inc(max(count, 0))


def record_fault_patterns(*, scheme: str, model: str, count: int) -> None:
    FAULT_PATTERNS_EVALUATED_TOTAL.labels(scheme=scheme, model=model).inc(max(count, 0))


def record_monte_carlo_trials(*, scheme: str, count: int) -> None:
    MONTE_CARLO_TRIALS_TOTAL.labels(scheme=scheme).inc(max(count, 0))


def record_command_duration(*, command: str, success: bool, duration_seconds: float) -> None:
    COMMAND_DURATION_SECONDS.labels(command=command, outcome="success" if success else "failed").observe(
        max(duration_seconds, 0.0)
    )


def write_metrics_textfile(path: str) -> None:
    write_to_textfile(path, REGISTRY)
