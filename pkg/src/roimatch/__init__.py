"""Graph matching of femur RoI graphs for hip-fracture classification."""

__version__ = "0.1.0"
