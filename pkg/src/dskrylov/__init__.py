"""Deterministically sketched Krylov subspace methods.

Row-subset sketches (DEIM, Q-DEIM, MPE and GappyPOD+E oversampling) drive
sketched FOM for f(A)b, sketched GMRES for linear systems and sketched
Rayleigh-Ritz for eigenpairs, all on k-truncated Arnoldi bases.
"""
from .errors import (Breakdown, DimensionMismatch, DsKrylovError, EmptyGraph, Exhausted,
                     IndexOutOfRange, NoConvergence, Overflow, ParseError, RankDeficient,
                     SingularInterpolation, SingularTriangular)
from .krylov import ArnoldiResult, KrylovBasis, arnoldi, truncated_arnoldi
from .la_core import (EigenPairs, QrFactors, SvdFactors, back_substitute, dense_eig, expm,
                      pivoted_qr, secular_smallest_eig, thin_qr, thin_svd)
from .rowselect import RowSelector, deim, oversample, qdeim, random_rows, select_rows
from .sketch import (DistortionReport, Identity, RowSubset, SketchOperator, SparseSign,
                     distortion_report, sketch_apply)
from .solvers import (RitzPairs, SolveReport, dsfom, dsgmres, dsrr, fom_reference,
                      gmres_reference, rr_reference)
from .sparse import SparseMatrix, col_sums, from_coo, spmv

__version__ = "0.1.0"
