# Radial indirect-chemotaxis simulator
__version__ = "0.1.0"
