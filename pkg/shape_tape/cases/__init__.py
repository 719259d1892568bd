""" Package for the shipped case studies: the rotating hole advection-diffusion tube and the Stokes obstacle
    benchmark. Each case records one forward run and answers value, derivative and verification queries. """

from .base import RecordedCase, pair, smooth_field
from .pironneau import PIPELINES, PIRONNEAU_MODES, PironneauCase, PironneauConfig, run_pironneau_case
from .report import SCHEMA, CaseReport, MeshTanglingError, Timings
from .tube import TUBE_MODES, TUBE_VARIANTS, TubeCase, TubeConfig, run_tube_case
