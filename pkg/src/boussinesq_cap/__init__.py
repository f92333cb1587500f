"""Computer-assisted existence proofs for periodic orbits of the ill-posed Boussinesq equation."""

__version__ = "0.1.0"
