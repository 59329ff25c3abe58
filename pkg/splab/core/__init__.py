"""Core numerics for splab."""
