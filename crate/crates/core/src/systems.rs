//! Linear systems over represented groups. (under construction)
