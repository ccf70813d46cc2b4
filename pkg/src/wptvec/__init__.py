"""Wireless power transfer under the vector (phasor superposition) model.

Submodules:

* :mod:`wptvec.model` - fields, received power, quadratic form of total power
* :mod:`wptvec.deployment` - placements, validation, random generation, files
* :mod:`wptvec.maxpower` - distributed coordinate-flip search for maximum total power
* :mod:`wptvec.kmin` - solvers for the k-minimum power guarantee
* :mod:`wptvec.experiments` - metrics and replicated campaigns
* :mod:`wptvec.cli` - the ``wptvec`` command
"""

from .deployment import (Deployment, FieldSpec, generate_random, load, save, toy_counterexample,
                         toy_superposition, validate_placement)
from .experiments import CampaignSpec, power_balance, power_efficiency, run_campaign
from .kmin import (KMinInstance, brute_force_opt, fractional_counterexample_check, fusion, greedy,
                   sampling, sampling_ext1, sampling_ext2)
from .maxpower import OPEN, UNTIL_CONVERGED, CommunicationRange, iterative_max_power
from .model import (PhysicalParams, Point2D, build_quadratic_form, efield, efield_total, eval_quadratic,
                    kmin_power, received_power, receiver_powers, scalar_model_power, total_power)

__version__ = "0.1.0"
