"""
Package smoke tests
"""


def test_package_imports():
    """Test that every module can be imported"""
    from fqamfbmc import (
        channel,
        config,
        exceptions,
        fbmc_engine,
        harness,
        metrics,
        models,
        modulation,
        prototype_filter,
        reports,
        schemas,
    )
    for module in (channel, config, exceptions, fbmc_engine, harness, metrics, models,
                   modulation, prototype_filter, reports, schemas):
        assert module is not None


def test_settings_defaults():
    """Settings carry the LTE evaluation point and the ZF floor"""
    from fqamfbmc.config import settings
    assert settings.CARRIER_FREQUENCY_HZ == 2.0e9
    assert settings.SUBCARRIER_SPACING_HZ == 15e3
    assert settings.ZF_FLOOR == 1e-6


def test_exit_codes():
    """Input errors map to exit code 2, runtime errors to 3"""
    from fqamfbmc.exceptions import BitUnderrunError, ConfigError, DimensionError, FilterFileError
    assert ConfigError("bad", "waveform.m_total").exit_code == 2
    assert FilterFileError("bad").exit_code == 2
    assert DimensionError("bad").exit_code == 3
    assert BitUnderrunError("bad").exit_code == 3
    assert str(ConfigError("bad", "waveform.m_total")) == "waveform.m_total: bad"
    assert isinstance(DimensionError("x"), ValueError)
