//! Butler groups and amalgamation. (under construction)
