"""Revenue of simple versus optimal mechanisms for additive buyers.

Exact discrete computations of selling separately (SRev), grand bundling
(BRev), partition mechanisms (PRev) and the LP optimum (Rev), plus numeric
checks of the inequalities that relate them.
"""

from .distcore import (
    DiscreteDist,
    JointDist,
    MarketInstance,
    RevenueEstimate,
    ddt_instance,
    er_truncated,
    load_instance,
    uniform_grid,
)
from .errors import BundleRevError, PreconditionError, SizeError, SolverError, ValidationError
from .optrev import MenuMechanism, rev_lp
from .simplerev import PartitionSpec, brev, prev_exact, prev_on, srev
from .singleitem import monopoly_price, optimal_item_rev

__version__ = "0.1.0"

__all__ = [
    "BundleRevError",
    "DiscreteDist",
    "JointDist",
    "MarketInstance",
    "MenuMechanism",
    "PartitionSpec",
    "PreconditionError",
    "RevenueEstimate",
    "SizeError",
    "SolverError",
    "ValidationError",
    "brev",
    "ddt_instance",
    "er_truncated",
    "load_instance",
    "monopoly_price",
    "optimal_item_rev",
    "prev_exact",
    "prev_on",
    "rev_lp",
    "srev",
    "uniform_grid",
]
