"""RGB-D face recognition from recorded sequences: depth registration,
tracking-based enrollment, LBP histogram features and one-vs-rest linear SVMs.
"""
__version__ = "0.1.0"
