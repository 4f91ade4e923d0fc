"""Structure-preserving simulation of geometrically exact beams on SE(3).

The configuration of a beam cross-section is a rotation plus a position,
i.e. an element of SE(3).  Both the time evolution and the space evolution
of the discrete field are advanced by the same variational one-step map,
built from the Cayley retraction and its trivialized derivative.  The
``diagnostics`` module evaluates the conserved quantities (slice momenta,
discrete energies, covariant Noether sums) directly from a stored field.
"""

from covariant_beam.liegroup import (
    GroupElement,
    NearPiRotation,
    Ad,
    Ad_star,
    coAd,
    cay_inv_so3,
    cay_so3,
    compose,
    dtau_inv_se3,
    dtau_inv_star,
    hat,
    identity,
    inverse,
    tau_inv_se3,
    tau_se3,
    vee,
)
from covariant_beam.beam import BeamParams, NonPositiveParam, build_params, E6
from covariant_beam.grid import DiscreteField
from covariant_beam.solvers import NewtonDivergence, NewtonParams

__version__ = "0.1.0"
