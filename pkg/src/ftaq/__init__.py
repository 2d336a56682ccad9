"""Query fault trees and attack trees: Boolean, probabilistic, metric and joint analyses."""

__version__ = "0.1.0"
