from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance; one line per criterion in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[i]
        terminalreporter.write_line(f"criterion {i:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
