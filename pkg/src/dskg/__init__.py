"""Klein-Gordon estimate laboratory on model de Sitter spacetimes."""
