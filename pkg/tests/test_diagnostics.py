import pytest

from psrn.diagnostics import CHECKS, THRESHOLD, run_checks


@pytest.mark.parametrize("name", [c[0] for c in CHECKS])
def test_module_gradients(name):
    (result,) = run_checks([name])
    assert result.error < THRESHOLD, result.per_tensor


def test_lookback_and_cell_are_tight():
    results = {r.module: r.error for r in run_checks(["lookback", "lstm_cell", "part_encoders"])}
    assert max(results.values()) < 1e-6
