"""gridres: power-grid resilience simulation toolkit.

Engines for frequency dynamics with distributed reserves, operator
coordination of inertia and droop provision, fault protection on radial
feeders with distributed generation, and bottom-up restoration after a
blackout, plus resilience metrics over their outputs.
"""

__version__ = "0.1.0"
