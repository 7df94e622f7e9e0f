import logging

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="VOLTERRA_")

    LOG_LEVEL: str = "INFO"

    # Replica execution
    MAX_WORKERS: int = 4
    OUT_DIR: str = "runs"

    # Driver simulation
    DIFFUSION_GRID_STEP: float = 1e-4

    # Singular quadrature (panel doubling until successive results agree)
    QUAD_RTOL: float = 1e-9
    QUAD_ATOL: float = 1e-14
    QUAD_ORDER: int = 16
    QUAD_MAX_NODES: int = 2**20

    # Finite-difference partials for user-defined kernels
    FD_MIN_STEP: float = 1e-7
    FD_REL_STEP: float = 1e-4

    # sup over a compact K is taken on this many interior points plus endpoints
    SUP_GRID_POINTS: int = 64

    # Fractional Levy truncation
    LIL_EPSILON: float = 0.01
    FRACLEVY_MAX_T: float = 64.0
    FRACLEVY_TAIL_TARGET: float = 1e-3


settings = Settings()


def configure_logging(level: str | None = None) -> None:
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
