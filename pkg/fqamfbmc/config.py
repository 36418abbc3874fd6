from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Runner
    DEFAULT_WORKERS: int = 1
    OUTPUT_DIR: str = "results"
    FILTER_DIR: str = "filters"
    CODE_VERSION: str = "1.0.0"

    # Radio defaults (LTE evaluation point)
    CARRIER_FREQUENCY_HZ: float = 2.0e9
    SUBCARRIER_SPACING_HZ: float = 15e3
    SPEED_OF_LIGHT: float = 2.998e8

    # Receiver
    ZF_FLOOR: float = 1e-6

    model_config = SettingsConfigDict(
        env_prefix="FQAMFBMC_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
