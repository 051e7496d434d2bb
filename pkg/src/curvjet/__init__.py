"""Exact-rational curvature models, metric jets and formal CK deformations."""
from .errors import (CurvjetError, DegenerateFormError, DimensionError, PreconditionError, QuasilinearityError,
                     SingularStepError, StructureError)
from .series_jet import SeriesMatrix, TruncatedSeries, derive, eval_at_origin, invert, jet_extract, matrix_sqrt
from .tensor_core import (KINDS, BilinearForm, CurvatureModel, CurvTensor, HermitianStructure, HyperStructure,
                          constant_curvature_tensor, kulkarni_nomizu, orthonormalize_model, random_model, ricci,
                          scalar_curvature, standard_form, standard_structure, star_scalar, star_scalar_hyper,
                          validate_curvature_tensor, weyl)
from .geometry_engine import (MetricJet, StructureField, point_model, riemann, scalar_series, star_scalar_series,
                              star_scalar_hyper_series, weyl_series)
from .realization import (RealizedGeometry, extend_structure, hermitian_variation, hyper_variation, realize,
                          realize_conformally_flat)
from .ck_solver import (QuasilinearSystem, ck_solve, constant_scalar_conformal, constant_tau_taustar,
                        constant_tau_taustar_hyper)

__version__ = "0.1.0"
