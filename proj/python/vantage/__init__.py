"""Visibility-based vantage planning on level-set occupancy maps."""

from ._vantage import (
    VantageError,
    cli,
    gain_field,
    generate_scene,
    observe,
    read_rfa,
    run_episode,
    signed_distance,
    visibility,
    write_rfa,
)

__all__ = [
    "VantageError",
    "cli",
    "gain_field",
    "generate_scene",
    "observe",
    "read_rfa",
    "run_episode",
    "signed_distance",
    "visibility",
    "write_rfa",
]
