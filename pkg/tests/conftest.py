import pytest

from rholab import acceptance


@pytest.fixture(scope="session")
def acceptance_run(tmp_path_factory):
    """Full desk-scale suite, run once per session, plus a determinism re-run."""
    run_dir = tmp_path_factory.mktemp("acceptance")
    ctx = acceptance.RunContext(run_dir, acceptance.DEFAULT_SEED, workers=1)
    metrics = acceptance.run_all(ctx)
    identical = acceptance.check_determinism(ctx, workers_b=2)
    return run_dir, metrics, identical
