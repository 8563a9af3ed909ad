"""Sensor validation with Markov blankets in discrete Bayesian networks."""

from .detection import DetectionPolicy, FaultReport, apparent_fault_set, detect_potential_fault, predict
from .graph_model import (BadRowSum, BlanketSets, Cpt, CycleDetected, MissingCpt, ModelError,
                          Network, UnknownId, Variable, build_network, emb_table,
                          extended_markov_blanket, markov_blanket, reduced_model)
from .inference import (Distribution, IncompleteEvidence, StateSpaceTooLarge, joint_enumerate,
                        posterior_given_blanket, sample)
from .isolation import (DistinguishabilityReport, Verdict, VerdictCase, distinguishability_report,
                        exact_cover_search, isolate)
from .models import ParseError, fig1_binary, gas_turbine, load_model
from .simulator import (CampaignConfig, CampaignMetrics, EpisodeResult, FaultScenario,
                        inject_fault, run_campaign, run_episode)

__version__ = "0.1.0"
