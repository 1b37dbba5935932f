# Unit tests module