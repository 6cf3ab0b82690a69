import numpy as np
import pytest

from catdecomp import algebra

# Every Wedderburn decomposition made anywhere in the session is recorded here.
AUDIT: list = []


def _audit(dec):
    AUDIT.append((dec.dims(), dec.unit_residual, dec.reconstruction_residual))


algebra.DECOMPOSITION_HOOKS.append(_audit)


# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)


def audit_summary():
    worst_u = max((a[1] for a in AUDIT), default=0.0)
    worst_r = max((a[2] for a in AUDIT), default=0.0)
    ok = bool(AUDIT) and worst_u <= 1e-7 and worst_r <= 1e-7
    return ok, (f"{len(AUDIT)} decompositions, max unit residual {worst_u:.2e}, "
                f"max reconstruction residual {worst_r:.2e}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    if AUDIT:
        ok, detail = audit_summary()
        terminalreporter.write_line(f"session audit (criterion 9, whole run): {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_sessionfinish(session, exitstatus):
    if AUDIT and not audit_summary()[0]:
        session.exitstatus = 1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
