"""Chen invariant bounds for Lagrangian submanifolds of complex space forms."""
