"""Discord dynamics of two qubits coupled to bosonic reservoirs."""

__version__ = "0.1.0"
