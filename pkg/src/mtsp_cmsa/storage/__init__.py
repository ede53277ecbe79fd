"""Storage module for instance files and run outputs."""
