"""Design and analysis toolkit for airbridge-coupled superconducting circuits.

Subpackages:

* :mod:`abkit.capnet` - lumped capacitance networks and mode-matrix algebra
* :mod:`abkit.quantize` - transmon parameters, SQUID energies, design reports
* :mod:`abkit.scaffold` - resist scaffold profiles and plateau analysis
* :mod:`abkit.fitkit` - resistance, resonator and loss fits
* :mod:`abkit.layout` - path parsing and automatic bridge placement
* :mod:`abkit.cli` - command-line front end
"""

__version__ = "0.1.0"
