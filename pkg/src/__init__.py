"""
Toric test configurations, mirror Landau-Ginzburg potentials and
Donaldson-Futaki residues.
"""
