"""Image-based estimation of clustering initialization parameters.

Pipeline: generate labeled 2D datasets, rasterize them to density
images, detect cluster regions (density-blob or trained-model backend),
convert boxes to k / centroids / size estimates, feed those into
partitional clustering, and benchmark against internal validity indices.
"""

__version__ = "0.1.0"

from .kernels import backend_name

__all__ = ["__version__", "backend_name"]
