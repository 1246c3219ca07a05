//! Limit-chain simulation. (under construction)
