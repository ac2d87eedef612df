"""Abstract reachability trees and the GPS / GPSLite checking loops."""

from .art import COVERED, FRONTIER, INTERNAL, PRUNED, UNRESOLVED, Art, Node
from .checker import EXHAUSTED, SAFE, UNSAFE, Budget, Checker, Stats, Verdict, Witness, gps, gpslite
from .validate import is_safe_certificate, validate_well_labeled

__all__ = [
    "COVERED", "EXHAUSTED", "FRONTIER", "INTERNAL", "PRUNED", "SAFE", "UNRESOLVED", "UNSAFE",
    "Art", "Budget", "Checker", "Node", "Stats", "Verdict", "Witness",
    "gps", "gpslite", "is_safe_certificate", "validate_well_labeled",
]
