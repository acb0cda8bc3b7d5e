"""Two-qubit detected-amplitude-damping code simulator."""

__version__ = "0.1.0"
