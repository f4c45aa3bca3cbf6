"""Accretivity and form-boundedness workbench for second-order operators on periodic boxes."""
from .certificates import (
    Certificate1D,
    CertificateND,
    IndefiniteForm,
    form_nonneg_1d,
    linear_sufficient_check,
    riccati_check_1d,
    riccati_check_nd,
    riccati_construct_1d,
    riccati_construct_nd,
)
from .fieldio import export_csv, read_field, write_field
from .grid import (
    Grid,
    MatrixField,
    ScalarField,
    VectorField,
    curl_matrix,
    div,
    div_matrix_rows,
    grad,
    inv_laplacian,
    laplacian,
    make_test_function,
)
from .hodge import HodgeParts, decompose_with_skew, hodge_decompose, two_d_obstruction
from .reduction import CoefficientSet, ReducedSymbols, reduce_symbols, sesquilinear, split_symmetric, to_divergence_form
from .regnorms import NormReport, bmo_norm, lip_seminorm, morrey_constant, trace_norm
from .varforms import (
    AccretivityReport,
    FormBoundReport,
    SubordinationReport,
    accretivity_min,
    commutator_constant,
    criterion_crosscheck,
    form_bound_constant,
    magnetic_comparability,
    magnetic_form,
    schrodinger_positivity,
    subordination_profile,
)

__version__ = "0.1.0"
