"""Hand-written stimulus for small directed tests."""

from hdlmutant.testbench import StimulusConfig, StimulusStep, TestbenchAst, extract_ports


def fixed_testbench(module, rows, step=10):
    """Testbench applying ``rows`` (one dict per sample) every ``step`` time units."""
    ports = tuple(extract_ports(module))
    clock = next((p.name for p in ports if p.is_clock), None)
    schedule = tuple(StimulusStep(k * step, values) for k, values in enumerate(rows))
    cfg = StimulusConfig(vector_count=len(rows) - 1, step_delay=step)
    return TestbenchAst(ports, clock, 5, schedule, cfg.total_horizon, cfg)
