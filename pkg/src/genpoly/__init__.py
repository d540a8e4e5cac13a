"""Boolean generalized polymorphisms: checking, classification, generation and enumeration."""
