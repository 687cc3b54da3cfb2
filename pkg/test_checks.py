#!/usr/bin/env python3
"""
Test the named acceptance checks registry (the fast checks only)
"""

from limitforge.utils.checks import check_maxcut_pipeline, list_checks, run_check
from limitforge.utils.errors import UnknownNameError

EXPECTED_IDS = [
    "embedding",
    "inclusion-exclusion",
    "cycle-spectrum",
    "uniform-attachment",
    "prefix-attachment",
    "quasirandom",
    "weak-regularity",
    "maxcut-pipeline",
    "energy",
    "algebra",
    "inequalities",
    "rho-reconstruction",
    "sampling-lemmas",
]


def test_registry_lists_every_check():
    table = list_checks()
    assert table["id"].tolist() == EXPECTED_IDS
    assert table["description"].str.len().gt(0).all()


def test_unknown_check():
    try:
        run_check("no-such-check")
    except UnknownNameError as e:
        assert "embedding" in str(e)
        print("✅ Unknown check id rejected")
    else:
        raise AssertionError("unknown check ids must fail")


def test_fast_checks_pass():
    for check_id in ("inclusion-exclusion", "algebra", "rho-reconstruction"):
        print(f"🧪 Running {check_id}")
        result = run_check(check_id, seed=0)
        assert result["success"] and result["passed"], result["details"]
        assert result["seconds"] >= 0.0
        print(f"✅ {check_id} passed in {result['seconds']:.1f}s")


def test_maxcut_check_covers_random_graphs():
    """Brute-force comparisons run on planted and ER(20, 1/2) graphs"""
    outcome = check_maxcut_pipeline(seed=0, seeds=1)
    assert sorted(outcome.table["graph"].unique()) == ["er", "planted"]
    assert set(outcome.details["within_rates"]) == {"er", "planted"}
    assert (outcome.table["exact"] > 0).all()


if __name__ == "__main__":
    print("🚀 Acceptance check registry tests")
    print("=" * 60)
    test_registry_lists_every_check()
    test_unknown_check()
    test_fast_checks_pass()
    test_maxcut_check_covers_random_graphs()
    print("\n🎉 Check registry tests complete!")
