# Services module: discretization, stepping, diagnostics and oracles
