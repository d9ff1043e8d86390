"""Basic tests for dissiflow package."""


def test_import_dissiflow():
    """Test that dissiflow can be imported."""
    import dissiflow

    assert dissiflow.__version__ == "1.0.0"


def test_import_config():
    """Test that config module can be imported."""
    from dissiflow.config import AnalysisConfig

    assert AnalysisConfig is not None


def test_import_pipeline():
    """Test that the analyzer can be imported."""
    from dissiflow.pipeline import DissipativeFlowAnalyzer

    assert DissipativeFlowAnalyzer is not None


def test_import_cli():
    """Test that CLI module can be imported."""
    from dissiflow.cli import cli

    assert cli is not None


def test_builtin_flows_listed():
    """Test that every builtin flow has a description."""
    from dissiflow import available_flows

    flows = available_flows()
    assert set(flows) == {"rotation", "cylinder", "catmap-suspension", "morse-smale-torus"}
    assert all(flows.values())
