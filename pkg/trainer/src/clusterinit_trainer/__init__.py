"""Trainer for the cluster-region detection model.

Consumes the rasterized corpus (PGM images + box label files) written by
the main toolkit, trains a small grid-head detector, and exports it in
the portable npz artifact format the toolkit's model backend executes.
"""

__version__ = "0.1.0"
