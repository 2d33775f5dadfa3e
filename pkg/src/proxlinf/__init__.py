"""Exact and learned proximal operator of the l-infinity norm."""

from .prox import (
    ProxResult,
    PsiEval,
    project_l1_ball,
    project_simplex,
    prox_linf_dc,
    prox_linf_moreau,
    prox_linf_sort,
    psi_eval,
    sigma_t,
    simplex_threshold,
)

__version__ = "0.1.0"
