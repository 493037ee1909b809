import json
import math

import pytest

from merogeo.coercivity import (
    COERCIVE, NOT_CERTIFIED, EsempioSpec, check_esempio_coercive, incompleteness_probe,
    polynomial_expr,
)
from merogeo.expr import evaluate
from merogeo.geodesic import GeodesicState
from merogeo.metric import NotOrdinary, flat_spec, metric_diagonal

ESEMPIO = EsempioSpec.from_strings("u", ["1"], [[1, 0, 1]])


def test_polynomial_expr():
    e = polynomial_expr([1, 0, 2 - 1j])
    assert evaluate(e, 1.5) == 1 + (2 - 1j) * 2.25
    assert evaluate(polynomial_expr([0]), 3) == 0


def test_example_metric_entries():
    m = ESEMPIO.to_metric()
    g = metric_diagonal(m, (2, 0.5))
    assert g[0] == 1 and g[1] == pytest.approx(1 / 5)


def test_reference_instance_is_certified():
    cert = check_esempio_coercive(ESEMPIO)
    assert cert.verdict == COERCIVE and cert.coercive
    assert len(cert.reasons) == 4
    assert json.loads(cert.to_json())["verdict"] == COERCIVE


@pytest.mark.parametrize("h, f, P, why", [
    ("2", ["1"], [[1, 0, 1]], "constant"),
    ("u", ["1"], [[1, 0, 0, 1]], "degree 3"),
    ("exp(u)", ["1"], [[1, 0, 1]], "not a rational"),
    ("u", ["exp(u)"], [[1, 0, 1]], "not a rational"),
    ("u", ["1"], [[0, 0, 0]], "zero polynomial"),
])
def test_failed_conditions_are_named(h, f, P, why):
    cert = check_esempio_coercive(EsempioSpec.from_strings(h, f, P))
    assert cert.verdict == NOT_CERTIFIED
    assert cert.reasons[-1].startswith("FAILED") and why in cert.reasons[-1]


def test_verdict_does_not_depend_on_the_seed():
    a = check_esempio_coercive(ESEMPIO, seed=(0.1, 0.2))
    b = check_esempio_coercive(ESEMPIO, seed=(3 - 1j, -2))
    assert a == b == check_esempio_coercive(ESEMPIO)


def test_seed_must_be_ordinary():
    with pytest.raises(NotOrdinary):
        check_esempio_coercive(ESEMPIO, seed=(1j, 0))   # h^2 + 1 = 0


def test_trimmed_degree():
    assert EsempioSpec.from_strings("u", ["1"], [[1, 2, 0, 0]]).degrees() == [1]


def test_flat_plane_has_no_witnesses():
    res = incompleteness_probe(flat_spec(2), [GeodesicState(0, [0, 0], [1, 0.5j])], n_rays=8)
    assert res.witnesses == [] and res.stops == [] and res.rays_done == 8


def test_disc_exit_distance():
    m = flat_spec(2, ["disc", "plane"])
    res = incompleteness_probe(m, [GeodesicState(0, [0, 0], [1, 0])], n_rays=8)
    assert len(res.witnesses) == 8
    for w in res.witnesses:
        assert w.kind == "DomainExit"
        assert abs(abs(w.z_star) - 1) < 1e-10


def test_budget_returns_partial_results():
    res = incompleteness_probe(flat_spec(2), [GeodesicState(0, [0, 0], [1, 0])], n_rays=8,
                               budget=0.0)
    assert res.budget_exceeded and not res.complete
    assert res.rays_done < res.rays_total


def test_probe_angles_are_respected():
    m = flat_spec(2, ["disc", "plane"])
    res = incompleteness_probe(m, [GeodesicState(0, [0.5, 0], [1, 0])], angles=[0, math.pi])
    assert [round(w.z_star.real, 10) for w in res.witnesses] == [0.5, -1.5]
