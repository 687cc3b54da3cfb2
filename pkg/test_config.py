#!/usr/bin/env python3
"""
Test settings: environment variables, per-run overrides and validation
"""

import os

from pydantic import ValidationError

from limitforge.utils.config import ENV_PREFIX, Settings, get_settings, override_settings, reset_settings


def test_defaults():
    reset_settings()
    settings = get_settings()
    assert settings.maxcut_exact_max == 24
    assert settings.delta_hat_exact_max == 8
    assert settings.threads == 1
    assert settings.log_level == "INFO"
    print("✅ Defaults loaded")


def test_environment_override():
    print("🔧 Testing LIMITFORGE_* variables")
    key = ENV_PREFIX + "CUT_NORM_EXACT_MAX"
    old = os.environ.get(key)
    os.environ[key] = "12"
    try:
        reset_settings()
        assert get_settings().cut_norm_exact_max == 12
    finally:
        if old is None:
            del os.environ[key]
        else:
            os.environ[key] = old
        reset_settings()
    assert get_settings().cut_norm_exact_max != 12 or old == "12"
    print("✅ Environment value picked up and released")


def test_override_and_reset():
    reset_settings()
    merged = override_settings(threads=4, log_level="debug", mc_samples=None)
    assert merged.threads == 4 and merged.log_level == "DEBUG"
    assert get_settings() is merged
    assert get_settings().mc_samples == 100000
    reset_settings()
    assert get_settings().threads == 1


def test_validation():
    for bad in ({"log_level": "chatty"}, {"threads": 0}, {"hom_work_bound": -1}):
        try:
            Settings(**bad)
        except ValidationError:
            pass
        else:
            raise AssertionError(f"{bad} should be rejected")
    print("✅ Invalid settings rejected")


if __name__ == "__main__":
    print("🚀 Settings tests")
    print("=" * 60)
    test_defaults()
    test_environment_override()
    test_override_and_reset()
    test_validation()
    print("\n🎉 Settings tests complete!")
