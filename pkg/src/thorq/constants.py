"""Physical constants (CODATA 2018), SI units."""

HBAR = 1.054571817e-34      # reduced Planck constant, J s
EPS0 = 8.8541878128e-12     # vacuum permittivity, F/m
E_CHARGE = 1.602176634e-19  # elementary charge, C
ATOMIC_MASS = 1.66053906660e-27  # unified atomic mass unit, kg
C_LIGHT = 299792458.0       # speed of light, m/s

# Atomic units used when ingesting electronic matrix elements.
BOHR_RADIUS = 5.29177210903e-11   # m
HARTREE = 4.3597447222071e-18     # J
