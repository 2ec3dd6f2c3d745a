"""Undercompressive shock surfaces for three-phase Corey flow in porous
media: closed-form invariant-line theory, numerical saddle-connection
sweeps for the capillarity viscosity matrix, and a Crank-Nicolson
cross-check simulator."""

__version__ = "0.1.0"
