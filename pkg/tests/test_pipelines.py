"""
End-to-end pipeline runs on small classes.
"""

import pytest

from backend.cli.experiment import ExperimentConfig
from backend.core.errors import ConfigError
from backend.core.lab_pipeline import lab_pipeline, run_pipeline


def _config(**fields) -> ExperimentConfig:
    return ExperimentConfig.model_validate(fields)


def _contents(result):
    return {path.name: path.read_bytes() for path in result.files}


@pytest.mark.integration
class TestPipelines:

    def test_unknown_pipeline(self, temp_dir):
        with pytest.raises(ConfigError):
            lab_pipeline.run(None, _config(), temp_dir)

    def test_dims_sweep(self, temp_dir):
        config = _config(classes=["thresholds:3", "full:2"], m_grid=[1, 2])
        result = run_pipeline("dims-sweep", config, temp_dir)
        assert [p.name for p in result.files] == ["dims_sweep.csv", "dims_sweep.json"]
        assert len(result.summary["classes"]) == 2
        assert result.passed

    def test_dd_audit(self, temp_dir):
        config = _config(
            **{
                "class": "thresholds:2",
                "rule": "rr:ratio=2",
                "population": "target:00",
                "m_grid": [1],
                "definitions": ["dp", "rep", "gs", "mi", "tv", "pg", "maxinfo"],
                "cross_check": True,
            }
        )
        result = lab_pipeline.run("dd-audit", config, temp_dir)
        assert [p.name for p in result.files] == ["dd_audit.csv", "dd_audit.json"]
        assert result.summary["reports"] == 7
        assert result.failures == 0

    def test_di_equivalence(self, temp_dir):
        config = _config(
            **{"class": "thresholds:2", "truncation": 2, "m_grid": [1, 2, 3], "witness_samples": 3}
        )
        result = lab_pipeline.run("di-equivalence", config, temp_dir)
        assert sorted(p.name for p in result.files) == [
            "di_equivalence.json",
            "di_equivalence_certificates.csv",
            "di_equivalence_cliques.csv",
            "di_equivalence_witness.csv",
        ]
        # m = 3 lies beyond the truncation
        assert [row["m"] for row in result.summary["cliques"]] == [1, 2]
        assert all(row["witness_holds"] for row in result.summary["certificates"])
        assert result.passed

    @pytest.mark.parametrize("spec", ["thresholds:3", "thresholds:4"])
    def test_di_equivalence_over_all_functions(self, temp_dir, spec):
        config = _config(**{"class": spec, "m_grid": [1, 2], "witness_samples": 3})
        assert config.truncation == 4
        result = lab_pipeline.run("di-equivalence", config, temp_dir)
        assert [row["m"] for row in result.summary["cliques"]] == [1, 2]
        assert result.summary["cliques"][0]["clique_number"] == 2
        assert all(row["pure_pg_mass"] == 1 for row in result.summary["certificates"])
        assert result.passed

    def test_di_equivalence_thresholds3_clique_numbers(self, temp_dir):
        config = _config(**{"class": "thresholds:3", "m_grid": [1, 2], "witness_samples": 3})
        result = lab_pipeline.run("di-equivalence", config, temp_dir)
        assert [row["clique_number"] for row in result.summary["cliques"]] == [2, 3]

    @pytest.mark.slow
    def test_boost_sweep(self, temp_dir):
        config = _config(**{"class": "thresholds:2", "m_grid": [1], "trials": 500, "boost_trials": 3})
        result = lab_pipeline.run("boost-sweep", config, temp_dir)
        assert [p.name for p in result.files] == ["boost_sweep.csv", "boost_ledger.csv", "boost_sweep.json"]
        (row,) = result.summary["sweep"]
        assert row["T"] == 1
        assert row["interpolation_rate"] == 1.0
        assert row["resample_frequency"] == 0.0
        assert row["law_tier_rate"] == 1.0
        ledger = result.files[1].read_text(encoding="utf-8")
        assert "KL(maj law||P*_T) <= KL(joint||P^T)" in ledger
        assert row["pacbayes_violation_rate"] is None
        assert result.passed

    def test_reruns_are_byte_identical(self, temp_dir):
        config = _config(
            **{"class": "thresholds:2", "rule": "rr:ratio=2", "population": "members", "m_grid": [1], "definitions": ["dp", "gs"]}
        )
        first = lab_pipeline.run("dd-audit", config, temp_dir / "first")
        second = lab_pipeline.run("dd-audit", config, temp_dir / "second")
        assert _contents(first) == _contents(second)
