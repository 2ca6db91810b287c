"""Dynamic CT reconstruction with neural fields and optical-flow regularization."""

from ._dynct import (
    FanBeamGeometry,
    ImageGrid,
    Sinogram,
    SimulationSettings,
    Volume,
    cli,
    mean_temporal_std,
    project,
    psnr,
    read_sinogram,
    read_volume,
    reconstruct_grid,
    reconstruct_nf,
    simulate,
    simulation_preset,
    write_sinogram,
    write_volume,
)

__all__ = [
    "FanBeamGeometry",
    "ImageGrid",
    "Sinogram",
    "SimulationSettings",
    "Volume",
    "cli",
    "mean_temporal_std",
    "project",
    "psnr",
    "read_sinogram",
    "read_volume",
    "reconstruct_grid",
    "reconstruct_nf",
    "simulate",
    "simulation_preset",
    "write_sinogram",
    "write_volume",
]
