"""coact: a deterministic human-robot joint action simulator.

Grid-world kernel, symbolic situation assessment, per-agent belief
models, MDP-based intention recognition, HTN shared-plan elaboration
with negotiation, a monitoring executive with belief repair, and
engagement-aware action coordination.
"""

from .world import Action, Event, World, legal_actions, step
from .situation import Fact, FactBase, assess, diff
from .mental import AgentMentalState, BeliefBase, Divergence, KnowledgeModel, MentalStateStore
from .comm import CommAct, ReferringExpression, disambiguate_with_signal, \
    generate_reference, resolve_reference
from .intention import IntentionModel, IntentionPosterior, Mdp, action_likelihood, \
    decide_help, observe_action, value_iteration
from .htn import HtnDomain, NegotiationConstraints, PlanNegotiation, SharedPlan, \
    SocialPolicy, plan, validate
from .coordination import EngagementBelief, JointActionSession, handover_step, \
    safety_gate, update_engagement
from .humans import HumanDriver, PolicyConfig
from .executive import ExecConfig, ExecutionState, Executive, MonitorVerdict
from .scenario import Scenario, load_scenario, load_scenario_file
from .session import Session, TraceRecord
from .runner import RunReport, replay, run, run_scenario

__version__ = "0.1.0"
