"""polylab: unified-(q,s) entanglement numerics and multi-qubit polygamy checks."""

__version__ = "0.1.0"
