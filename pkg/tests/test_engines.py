"""The compiled kernel and the pure-Python kernel must be indistinguishable:
same plans, same statistics, same extraction traces."""
import pytest

from hfmapf import GridSpec, generate_instance, solve_nrhfsp
from hfmapf.labeling import SolveLimits, available_engines, default_engine

from conftest import random_constraints, random_instance

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_engines(), reason="compiled kernel not built"
)


def test_python_engine_always_available():
    assert "python" in available_engines()


def test_default_engine_env_override(monkeypatch):
    monkeypatch.setenv("HFMAPF_ENGINE", "python")
    assert default_engine() == "python"
    monkeypatch.setenv("HFMAPF_ENGINE", "nonsense")
    with pytest.raises(ValueError):
        default_engine()


@needs_compiled
def test_default_prefers_compiled(monkeypatch):
    monkeypatch.delenv("HFMAPF_ENGINE", raising=False)
    assert default_engine() == "compiled"


@needs_compiled
def test_engines_agree_exactly(rng):
    for trial in range(150):
        inst = random_instance(
            rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)), 1
        )
        cs = random_constraints(rng, inst, max_entries=8, max_time=12)
        relax = bool(rng.random() < 0.25)
        results = {
            engine: solve_nrhfsp(
                inst,
                0,
                cs,
                SolveLimits(engine=engine),
                relax_resources=relax,
                want_trace=True,
            )
            for engine in ("python", "compiled")
        }
        py, cy = results["python"], results["compiled"]
        assert py.status == cy.status, f"trial {trial}"
        assert py.plan == cy.plan, f"trial {trial}"
        assert py.stats == cy.stats, f"trial {trial}"
        assert py.f_trace == cy.f_trace, f"trial {trial}"


@needs_compiled
def test_engines_agree_on_relaxed_mode(rng):
    inst = generate_instance(GridSpec(rows=6, cols=6, seed=77), 1)
    py = solve_nrhfsp(
        inst, 0, None, SolveLimits(engine="python"), relax_resources=True
    )
    cy = solve_nrhfsp(
        inst, 0, None, SolveLimits(engine="compiled"), relax_resources=True
    )
    assert py.plan == cy.plan
    assert py.stats == cy.stats
    assert not any(py.plan.gen_pattern)
