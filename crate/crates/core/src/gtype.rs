//! Galois-type equality oracles. (under construction)
