"""hintnav: physical search with learned waypoints and geographic hints.

A desk-scale navigation stack: procedurally generated 2D worlds, a latent
waypoint model for local control, an overhead-map heuristic trained
contrastively, and an A*-like planner in which expanding a node means
physically driving there.
"""

__version__ = "0.1.0"
