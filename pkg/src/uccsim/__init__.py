"""Classical simulation of a UCC variational eigensolver for HeH+."""
