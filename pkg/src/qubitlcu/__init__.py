"""Universal single-qubit channel simulation with ancilla-controlled unitaries."""
