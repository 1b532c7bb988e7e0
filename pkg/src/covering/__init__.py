"""Multivariate covering lemma toolkit: entropies, typicality, one-shot bounds, exponents and simulation."""
