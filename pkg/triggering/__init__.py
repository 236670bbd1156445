from triggering.gamma import TriggerDecision, compute_gamma
from triggering.mechanisms import MechanismState, TriggerConfig
