import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from merogeo.metric import MetricSpec

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

_ACCEPTANCE = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str = ""):
    _ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")


def cfmt(c: complex) -> str:
    """Complex constant in the expression grammar."""
    sign = "-" if c.imag < 0 else "+"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"


def rcomplex(rng, scale=1.0) -> complex:
    return complex(*np.round(rng.normal(size=2) * scale, 4))


def random_rational(rng, var="u", scale=0.5) -> str:
    """Small random rational function with a nonzero constant term in the denominator."""
    num = " + ".join(f"{cfmt(rcomplex(rng, scale))}*{var}^{j}" for j in range(3))
    den = f"1 + {cfmt(rcomplex(rng, 0.2))}*{var}"
    return f"({cfmt(1 + rcomplex(rng, 0.2))} + {num})/({den})"


def random_rational_spec(rng, n) -> MetricSpec:
    b1 = random_rational(rng)
    a = [random_rational(rng) for _ in range(n - 1)]
    f = [random_rational(rng) for _ in range(n - 1)]
    return MetricSpec.from_strings(b1, a, f)


def random_smooth_spec(rng, n) -> MetricSpec:
    """Warped spec without zeros or poles near the origin (exponentials and mild rationals)."""
    b1 = f"exp({cfmt(rcomplex(rng, 0.3))}*u)"
    a = [f"1 + {cfmt(rcomplex(rng, 0.05))}*u^2" if rng.random() < 0.5
         else f"exp({cfmt(rcomplex(rng, 0.3))}*u)" for _ in range(n - 1)]
    f = [f"exp({cfmt(rcomplex(rng, 0.3))}*u)" if rng.random() < 0.5
         else f"1/(1 + {cfmt(rcomplex(rng, 0.05))}*u^2)" for _ in range(n - 1)]
    return MetricSpec.from_strings(b1, a, f)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
