"""Job queue module for benchmark cells."""
