"""Draw auction, second-price auctions and the closed-form optimal auction
for bimodal-uniform valuation priors, with Monte Carlo tooling to compare them.
"""
from .mechanisms import (Draw, DrawParams, Outcome, ParameterError, SecondPrice,
                         draw_auction, resolve, second_price)
from .model import (BimodalSpec, MixtureSampler, SpecificationError, cdf, inv_cdf, pdf,
                    sample_profile, sample_profiles)
from .myerson import (MyersonAuction, MyersonCurves, MyersonParams, myerson_allocate,
                      myerson_curves, myerson_params, virtual_value)

__all__ = [
    "BimodalSpec", "Draw", "DrawParams", "MixtureSampler", "MyersonAuction", "MyersonCurves",
    "MyersonParams", "Outcome", "ParameterError", "SecondPrice", "SpecificationError", "cdf",
    "draw_auction", "inv_cdf", "myerson_allocate", "myerson_curves", "myerson_params", "pdf",
    "resolve", "sample_profile", "sample_profiles", "second_price", "virtual_value",
]
