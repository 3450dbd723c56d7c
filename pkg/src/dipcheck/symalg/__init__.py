"""Exact symbolic algebra for the checker: exponential polynomials in eps,
certified interval evaluation, and sign decisions over (0, inf)."""

from .pseudo import (
    PseudoPoly,
    PseudoRational,
    combine,
    is_zero,
    format_poly,
    format_pseudo,
    parse_pseudo,
    laurent_sum_to_rational,
    PseudoParseError,
)
from .intervals import Iv, exp_point, eval_pseudo_point, PoleError
from .sign import (
    EpsInterval,
    SignConfig,
    SignVerdict,
    Witness,
    RootIsolation,
    sign_on_interval,
    eval_interval,
    isolate_roots,
    refine_root,
    strict_sign,
    analyze_poly,
    poly_sign_at,
    pseudo_sign_at,
    poly_value_is_exactly_zero,
)

__all__ = [
    "PseudoPoly",
    "PseudoRational",
    "combine",
    "is_zero",
    "format_poly",
    "format_pseudo",
    "parse_pseudo",
    "laurent_sum_to_rational",
    "PseudoParseError",
    "Iv",
    "exp_point",
    "eval_pseudo_point",
    "PoleError",
    "EpsInterval",
    "SignConfig",
    "SignVerdict",
    "Witness",
    "RootIsolation",
    "sign_on_interval",
    "eval_interval",
    "isolate_roots",
    "refine_root",
    "strict_sign",
    "analyze_poly",
    "poly_sign_at",
    "pseudo_sign_at",
    "poly_value_is_exactly_zero",
]
