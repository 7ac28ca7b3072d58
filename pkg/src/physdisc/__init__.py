"""Discover, track and physically check cuboid objects in video."""

from .core import Camera, ContractError, Cuboid, Frame, ObjectTrack, TrackState
from .dynamics import DynamicsParams, physics_log_likelihood
from .geometry import BackprojectionConfig, backproject_manual, project, render_all

__version__ = "0.1.0"

__all__ = [
    "BackprojectionConfig",
    "Camera",
    "ContractError",
    "Cuboid",
    "DynamicsParams",
    "Frame",
    "ObjectTrack",
    "TrackState",
    "backproject_manual",
    "physics_log_likelihood",
    "project",
    "render_all",
]
