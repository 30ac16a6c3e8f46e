"""Local hidden-variable EPR models, Bell/CHSH checks and the Peres-Mermin square."""

__version__ = "0.1.0"
