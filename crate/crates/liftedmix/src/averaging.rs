//! Linear averaging iteration on (pseudo-)lifted chains.
