"""Parallel black-box optimizers for expensive, noisy design problems."""
