import csv

import pytest
import yaml

from flowlab.errors import ConfigurationError
from flowlab.experiments import evaluate_criteria, run_suite

G16 = {"dim": 2, "resolution": [16, 16], "periods": ["2pi", "2pi"]}
BUMP = {"family": "conformal", "amplitude": 0.17, "mode": "static"}


def _cfg(**kw):
    return {"grid": G16, "background": BUMP, "T": 0.05, **kw}


def _headline(out):
    with open(out / "headline.csv") as fh:
        return {r["name"]: r["value"] for r in csv.DictReader(fh)}


@pytest.mark.parametrize("doc", [
    _cfg(scenario="identity"),
    _cfg(scenario="kernel", params={"n_times": 3}),
    _cfg(scenario="norms", params={"pairs": 2}),
    _cfg(scenario="existence", delta=0.1),
    _cfg(scenario="contraction", delta=0.01, params={"pairs": 2}),
    _cfg(scenario="pullback", delta=0.1, params={"scales": [1, 2]}),
], ids=lambda d: d["scenario"])
def test_scenarios_write_reports(tmp_path, doc):
    rep = run_suite(doc, out=tmp_path)
    saved = yaml.safe_load((tmp_path / "report.yaml").read_text())
    assert saved["scenario"] == doc["scenario"]
    assert set(saved["provenance"]) >= {"config_hash", "seed", "numpy", "flowlab"}
    head = _headline(tmp_path)
    assert set(head) == set(rep.headline)
    for f in rep.files:
        assert (tmp_path / f).exists()


def test_reports_carry_curvature_bound(tmp_path):
    rep = run_suite(_cfg(scenario="existence", delta=0.1), out=tmp_path)
    assert 0.9 < rep.headline["background_sup_rm"] <= 1.0


def test_runs_are_deterministic(tmp_path):
    doc = _cfg(scenario="contraction", delta=0.01, params={"pairs": 2})
    run_suite(doc, out=tmp_path / "a")
    run_suite(doc, out=tmp_path / "b")
    for name in ("headline.csv", "contraction.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dependence_chain_of_one_is_the_single_run(tmp_path):
    base = _cfg(background={**BUMP, "mode": "ricci-flow"}, delta=0.05, epsilon_ladder=[0.0, 1e-3, 1e-2],
                dump={"fields": False})
    single = run_suite({**base, "scenario": "continuous-dependence"}, out=tmp_path / "one")
    chain = run_suite({**base, "scenario": "chained-dependence", "pieces": 1}, out=tmp_path / "chain")
    for name in ("headline.csv", "dependence.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "chain" / name).read_bytes()
    assert single.headline["M_at_zero"] == 0.0
    four = run_suite({**base, "scenario": "chained-dependence", "pieces": 4}, out=tmp_path / "four")
    assert four.headline["bound_holds"] == 1
    assert chain.headline["pieces"] == 1 and four.headline["pieces"] == 4


def test_criteria_evaluation(tmp_path):
    checks = evaluate_criteria({"a": 0.5, "b": 2}, {"a": {"max": 0.5}, "b": {"min": 3}})
    assert [c["passed"] for c in checks] == [True, False]
    with pytest.raises(ConfigurationError):
        evaluate_criteria({"a": 1}, {"missing": {"max": 1}})
    with pytest.raises(ConfigurationError):
        run_suite(_cfg(scenario="continuous-dependence", pieces=2), out=tmp_path)
