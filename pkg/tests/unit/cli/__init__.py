# CLI tests module
