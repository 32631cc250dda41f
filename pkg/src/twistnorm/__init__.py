"""Twisted Frobenius equations and norm maps on principal units over p-adic towers."""

__version__ = "0.1.0"
