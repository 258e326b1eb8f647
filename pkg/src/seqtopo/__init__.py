"""Sequential SIMP-to-level-set topology optimization on structured
hexahedral meshes."""

__version__ = "0.1.0"
