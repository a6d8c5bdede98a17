import numpy as np

from kleinwave.validate import Check, format_table, run_validation


def test_check_passed():
    assert Check("a", "q=0", 1e-13, 1e-12).passed
    assert not Check("a", "q=0", 1e-11, 1e-12).passed
    assert not Check("a", "q=0", np.nan, 1.0).passed


def test_format_table():
    text = format_table([Check("T[x^k] = phi_k", "q=9", 1.5e-11, 1e-4), Check("x", "q=0", 2.0, 1.0)])
    lines = text.splitlines()
    assert len(lines) == 3 and lines[1].endswith("PASS") and lines[2].endswith("FAIL")


def test_quick_validation_passes():
    checks = run_validation(quick=True)
    assert {c.case for c in checks} == {"q=0", "q=9", "q=x^2", "q=-25"}
    assert all(c.passed for c in checks), format_table(checks)
    zero = [c for c in checks if c.case == "q=0" and c.name.startswith("T")]
    assert all(c.tol == 1e-12 for c in zero)
