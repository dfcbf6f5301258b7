"""Projected Cauchy distributions on the circle and the sphere.

Densities, samplers, maximum likelihood fitting, regression,
likelihood-ratio tests and Kullback-Leibler divergences.
"""
from .circular import (
    CipcParams,
    CpcParams,
    GcpcParams,
    PnParams,
    WcParams,
    cipc_density,
    cpc_density,
    gcpc_cdf_closed,
    gcpc_cdf_numeric,
    gcpc_density,
    gcpc_modes,
    pn_density,
    wc_density,
)
from .estimation import FitResult, OptimizerConfig, fit, standard_errors
from .inference import bootstrap_lrt, kld, lrt_isotropy_sphere, lrt_rho_one
from .io import Dataset, parse_dataset
from .models import density, logpdf, sample
from .regression import cipc_reg_fit, gcpc_reg_fit, sphere_reg_fit, spml_fit
from .spherical import (
    EsagParams,
    IagParams,
    ScParams,
    SespcParams,
    SipcParams,
    SpcParams,
    esag_density,
    sc_density,
    sespc_density,
    sipc_density,
    spc_density,
)

__version__ = "0.1.0"
