"""kinklab: desk-scale numerical laboratory for kink dynamics in 1D
relativistic wave equations with double-well potentials.

Subsystems:
  potential   double-well potentials and their admissibility checks
  kink        static kink profiles and boosted soliton states
  field       grids, phase-space states, energies, discrete norms
  evolve      nonlinear / linearized / free time integration
  symplectic  tangent frames, projection onto the soliton family,
              modulation equations
  spectral    Schrodinger-operator spectra, threshold resonances,
              admissibility certification of potentials
  analysis    decay-rate fits, majorants, virial and energy bounds,
              asymptotic-state extraction
  scenario    experiment configs, runners, CSV/JSON artifacts
  cli         `kinklab` command line entry point
"""

__version__ = "0.1.0"
