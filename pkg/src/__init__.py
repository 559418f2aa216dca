"Transverse Stability of Line Solitons in Massive Dirac Models"
__version__ = '1.0.0'
