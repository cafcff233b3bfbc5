import logging
from contextlib import contextmanager
from functools import lru_cache
from typing import Tuple, Union

import structlog
from pydantic import BaseSettings, validator

from wbk.types.main import LogFormat, SpotCheckMethod

logger = structlog.get_logger(__name__)

__all__ = [
    "get_settings",
    "set_log_level",
    "set_option",
    "settings_context",
]


class Settings(BaseSettings):
    LOG_LEVEL: Union[int, str] = logging.WARNING
    LOG_FORMAT: LogFormat = LogFormat.console

    # worker threads used to build the steps of a sequence run
    NUM_THREADS: int = 1

    DEFAULT_DEGREE: int = 16
    DEFAULT_RESOLUTION: int = 128
    DEFAULT_ORDER: int = 2

    # relative ridges tried in order, scaled by the largest Gram diagonal
    RIDGE_SCHEDULE: Tuple[float, ...] = (0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6)
    DIAGONAL_FLOOR: float = 1e-12
    HERMITIAN_TOLERANCE: float = 1e-10
    SCHWARZ_SLACK: float = 1e-10

    SERIES_TAIL_TOLERANCE: float = 1e-14
    SERIES_MAX_TERMS: int = 10_000

    CSV_SIGNIFICANT_DIGITS: int = 15

    # how many quadrature nodes the hypothesis spot-checks look at
    SPOT_CHECK_SAMPLES: int = 256
    SPOT_CHECK_METHOD: SpotCheckMethod = SpotCheckMethod.random
    RANDOM_STATE: int = 12_648_430

    # largest lattice tried when looking for compact sample points
    GRID_MAX_LATTICE: int = 512
    # lattice used to estimate boundary distances of indicator domains
    INDICATOR_DISTANCE_RESOLUTION: int = 256

    DATETIME_STRING_FORMAT: str = "%Y-%m-%dT%H:%M:%S.%f"

    @validator("NUM_THREADS", pre=True, always=True)
    def validate_num_threads(cls, val):
        val = int(val)
        if val < 1:
            raise ValueError("NUM_THREADS must be >= 1")
        return val

    @validator("DEFAULT_DEGREE", pre=True, always=True)
    def validate_default_degree(cls, val):
        if not 1 <= val <= 64:
            raise ValueError("DEFAULT_DEGREE must be in [1, 64]")
        return val

    @validator("DEFAULT_RESOLUTION", pre=True, always=True)
    def validate_default_resolution(cls, val):
        if not 8 <= val <= 1024:
            raise ValueError("DEFAULT_RESOLUTION must be in [8, 1024]")
        return val

    @validator("RIDGE_SCHEDULE", pre=True, always=True)
    def validate_ridge_schedule(cls, vals):
        vals = tuple(float(v) for v in vals)
        if not vals or any(v < 0 for v in vals):
            raise ValueError("RIDGE_SCHEDULE must be a non-empty sequence of ridges >= 0")
        if list(vals) != sorted(vals):
            raise ValueError("RIDGE_SCHEDULE must be increasing")
        return vals

    @validator("CSV_SIGNIFICANT_DIGITS", pre=True, always=True)
    def validate_significant_digits(cls, val):
        if not 1 <= val <= 17:
            raise ValueError("CSV_SIGNIFICANT_DIGITS must be in [1, 17]")
        return val

    @validator("SPOT_CHECK_SAMPLES", "GRID_MAX_LATTICE", "INDICATOR_DISTANCE_RESOLUTION")
    def validate_positive(cls, val, field):
        if val < 1:
            raise ValueError(f"{field.name} must be >= 1")
        return val

    class Config:
        validate_assignment = True
        use_enum_values = True
        env_prefix = "WBK_"

        @classmethod
        def customise_sources(cls, init_settings, env_settings, file_secret_settings):
            # the thread count is the only setting taken from the environment
            def thread_count_only(settings):
                return {k: v for k, v in env_settings(settings).items() if k == "NUM_THREADS"}

            return init_settings, thread_count_only


@lru_cache
def get_settings():
    return Settings()


def set_log_level(level: Union[int, str]):
    logging.getLogger("wbk").setLevel(level)


def set_option(key, value) -> None:
    key = str(key).upper()

    settings = get_settings()
    if key in vars(settings):
        setattr(settings, key, value)
        if key == "LOG_LEVEL":
            set_log_level(value)
        return
    raise ValueError(f"`{key}` is not a valid setting")


@contextmanager
def settings_context(**option_kwargs):
    settings = get_settings()
    orig_settings = settings.dict()
    option_kwargs = {str(k).upper(): v for k, v in option_kwargs.items()}

    try:
        for setting, value in option_kwargs.items():
            set_option(setting, value)
        yield settings
    finally:
        for setting, value in orig_settings.items():
            # only reset it if it was adjusted originally; don't reset everything
            if setting in option_kwargs:
                set_option(setting, value)
