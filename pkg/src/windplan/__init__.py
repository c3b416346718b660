"""Wind-aware planar UAV trajectory planning: a physics-informed network
planner plus grid A* and kinodynamic RRT* baselines."""

__version__ = "0.1.0"
