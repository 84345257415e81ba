"""wildreid — feature-based wildlife photo re-identification and split-bias evaluation."""
__version__ = "0.4.0"
