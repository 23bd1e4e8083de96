"""Device-independent tests of qubit channels from input/output correlations."""
