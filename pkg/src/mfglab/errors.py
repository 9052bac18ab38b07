"""Exception types shared across the solvers."""


class DimensionError(ValueError):
    """Coordinate dimensions of the arguments do not match."""


class GridError(ValueError):
    """Grid densities live on incompatible, non-resamplable grids."""


class StabilityError(RuntimeError):
    """A time step violated the stability bound of the scheme."""


class CflError(StabilityError):
    """Advective CFL condition |b| dt / dx <= 1 violated."""


class DivergenceError(RuntimeError):
    """Particle trajectories left the admissible region (blow-up)."""


class BoundaryLeakError(RuntimeError):
    """Mass reached the boundary cells of the truncated domain."""


class TransportModeError(ValueError):
    """Exact transport mode requested above its size cap."""


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""
