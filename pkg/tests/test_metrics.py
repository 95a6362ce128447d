"""Unit tests for monitoring metrics"""

from prometheus_client import REGISTRY

from src.elements.bubbles import modify_bubble
from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import refine
from src.monitoring import metrics
from src.solvers.local_div import random_pressure, solve_local_div
from src.spaces.catalog import build_pair
from src.stokes.manufactured import manufactured_case
from src.stokes.problem import solve_stokes


def _value(name, labels):
    return REGISTRY.get_sample_value(name, labels) or 0.0


class TestMetricsEmission:
    """Metrics are emitted by the constructions that own them"""

    def test_local_div_solves_counted(self, ls2, rng):
        before = _value("local_div_solves_total", {"d": "2", "k": "2"})
        solve_local_div(random_pressure(ls2, 1, rng), 2, ls2)

        assert _value("local_div_solves_total", {"d": "2", "k": "2"}) == before + 1

    def test_modified_bubbles_counted(self, ls3):
        before = _value("modified_bubbles_built_total", {"d": "3"})
        modify_bubble(ls3, 0)

        assert _value("modified_bubbles_built_total", {"d": "3"}) == before + 1

    def test_space_assembly_and_solve(self):
        """A Stokes solve builds spaces, assembles and counts the solve"""
        refined = refine(builtin_mesh("square2", 1))
        solves = _value("stokes_solves_total", {"pair": "thm4.4"})
        mf_spaces = _value("spaces_built_total", {"kind": "MF"})
        pair = build_pair("thm4.4", refined)
        solve_stokes(pair, manufactured_case("stream", 2))

        assert _value("stokes_solves_total", {"pair": "thm4.4"}) == solves + 1
        assert _value("spaces_built_total", {"kind": "MF"}) == mf_spaces + 1
        assert _value("assembly_latency_seconds_count", {"velocity_kind": "MF", "pressure_kind": "DG_MACRO"}) >= 1

    def test_assertion_counter(self):
        metrics.assertions_failed.labels(check="unit_test").inc()

        metric_output = metrics.get_metrics().decode("utf-8")
        assert 'assertions_failed_total{check="unit_test"}' in metric_output


class TestMetricsFormat:
    """Metrics output format"""

    def test_get_metrics_returns_bytes(self):
        assert isinstance(metrics.get_metrics(), bytes)

    def test_all_metrics_have_help_text(self):
        metrics.eigen_solve_latency.labels(problem="unit_test").observe(0.01)
        metric_output = metrics.get_metrics().decode("utf-8")

        for metric_name in [
            "local_div_solves_total",
            "modified_bubbles_built_total",
            "spaces_built_total",
            "assembly_latency_seconds",
            "eigen_solve_latency_seconds",
            "stokes_solves_total",
            "assertions_failed_total",
        ]:
            assert f"# HELP {metric_name}" in metric_output

    def test_dump_metrics_to_textfile(self, tmp_path):
        path = tmp_path / "alfeld.prom"
        metrics.dump_metrics(path)

        text = path.read_text()
        assert "# TYPE eigen_solve_latency_seconds histogram" in text
