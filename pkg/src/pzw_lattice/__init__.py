"""pzw-lattice: multipolar and Poincaré-gauge electrodynamics of one neutral atom on a periodic lattice."""

__version__ = "1.0.0"
