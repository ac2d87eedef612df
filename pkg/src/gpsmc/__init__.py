"""Summary-guided software model checking (GPS and GPSLite)."""

__version__ = "0.1.0"
