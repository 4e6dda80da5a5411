"""Fair FOND planning for LTL/LTLf goals via Rabin games."""

__version__ = "0.1.0"
