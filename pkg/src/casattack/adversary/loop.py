"""The plan-act-learn attack loop and its report."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .mdp import AttackMDP, TargetAdapter
from .qlearning import ExplorationSchedule, TabularQ, epsilon_greedy, greedy_policy
from .surrogate import ExactModel, SurrogateModel, estimate_dynamics, plan_on_surrogate

log = logging.getLogger(__name__)

OBJECTIVE = "objective"
CAP = "cap"
INCOMPLETE = "INCOMPLETE"


@dataclass
class IterationRecord:
    iteration: int
    episode: int
    state: list
    action: object
    reward: float
    cumulative_reward: float
    cumulative_cost: int
    impact: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AttackReport:
    """Log and outcome of one attack run.

    ``cumulative_cost`` counts every action taken on the real target and so
    never decreases; ``success_cost`` is the number of actions in the
    cheapest successful episode (the adversarial cost of that attack).
    """

    iterations: list[IterationRecord] = field(default_factory=list)
    success: bool = False
    reason: str = CAP
    error: str | None = None
    success_cost: int | None = None
    success_episode: int | None = None
    success_impact: float | None = None
    success_actions: list = field(default_factory=list)
    success_details: dict = field(default_factory=dict)
    episodes: int = 0
    policy: dict = field(default_factory=dict)
    cost_unit: str = "actions"
    seed: int | None = None
    scenario: str = ""

    @property
    def complete(self) -> bool:
        return self.reason != INCOMPLETE

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "success": self.success,
            "reason": self.reason,
            "error": self.error,
            "success_cost": self.success_cost,
            "success_episode": self.success_episode,
            "success_impact": self.success_impact,
            "success_actions": list(self.success_actions),
            "success_details": self.success_details,
            "episodes": self.episodes,
            "cost_unit": self.cost_unit,
            "iterations": [r.to_dict() for r in self.iterations],
            "policy": self.policy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AttackReport":
        d = dict(d)
        d["iterations"] = [IterationRecord(**r) for r in d.get("iterations", [])]
        return cls(**d)


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (tuple, list, frozenset, set)):
        items = sorted(x) if isinstance(x, (frozenset, set)) else x
        return [_plain(v) for v in items]
    return x


def _policy_snapshot(q: TabularQ, mdp: AttackMDP) -> dict:
    out = {}
    for s in sorted(q.table, key=repr):
        row = q.table[s]
        out[json.dumps(_plain(s))] = {"action": _plain(mdp.label(int(np.argmax(row)))),
                                      "value": float(row.max())}
    return out


def run_attack_loop(target: TargetAdapter, mdp: AttackMDP, objective: float | None = None,
                    cap: int = 500, planning_episodes: int = 20,
                    rng: np.random.Generator | None = None, *, whitebox: bool = False,
                    episode_budget: int | None = None, warm_start: bool = True,
                    continue_after_success: bool = False, alpha: float = 0.1,
                    exploration: ExplorationSchedule | None = None,
                    prior: SurrogateModel | None = None) -> AttackReport:
    """Alternate model estimation, planning and one real action until the objective holds.

    Each iteration folds the latest observation into the adversary's model,
    plans on that model from the current state, then takes one action on the
    real target. An episode ends when the target's impact reaches
    ``objective``, when ``episode_budget`` actions have been spent or when no
    action is left; the target is then reset. In blackbox mode the real
    action is epsilon-greedy (``exploration``, by default annealed from 1
    to 0.05 over ``cap`` iterations); in whitebox mode it is greedy on a
    plan made with the exact simulator.

    The loop stops at the first success unless ``continue_after_success``,
    in which case the cheapest success within ``cap`` is kept. A failing
    target aborts the run with reason ``INCOMPLETE`` and the partial log.
    """
    if cap < 1:
        raise ValueError("iteration cap must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    goal = mdp.objective if objective is None else float(objective)
    if goal != mdp.objective:
        mdp = AttackMDP(mdp.n_actions, mdp.encode, mdp.reward, mdp.impact, mdp.valid_actions,
                        goal, mdp.discount, mdp.labels)
    budget = episode_budget if episode_budget is not None else cap
    report = AttackReport(cost_unit=target.cost_unit)

    config = target.reset()
    if mdp.reached(config):
        report.success, report.reason = True, OBJECTIVE
        report.success_impact = float(mdp.impact(config))
        return report

    if whitebox:
        model = ExactModel(target, mdp)
        model.register(config)
    else:
        model = prior if prior is not None else SurrogateModel()
    q = TabularQ(mdp.n_actions, discount=mdp.discount, alpha=alpha,
                 exploration=exploration or ExplorationSchedule.over(cap))

    cumulative_reward = 0.0
    taken = 0
    episode, in_episode = 0, 0
    actions_this_episode: list = []
    report.episodes = 1

    for it in range(1, cap + 1):
        s = mdp.encode(config)
        try:
            available = list(target.valid_actions(config))
            plan = plan_on_surrogate(model, mdp, planning_episodes, rng,
                                     q=q if warm_start else None, start=s,
                                     horizon=max(1, budget - in_episode), alpha=alpha)
            if not warm_start:
                plan.exploration = q.exploration
                q = plan
            if whitebox:
                a = greedy_policy(q, s, available)
            else:
                a = epsilon_greedy(q, s, rng, available)
            before, config = target.act(a)
            r = float(mdp.reward(before, a, config))
        except Exception as exc:  # target or model failure: keep what we have
            log.warning("attack aborted at iteration %d: %s", it, exc)
            report.reason, report.error = INCOMPLETE, f"{type(exc).__name__}: {exc}"
            break

        s_next = mdp.encode(config)
        done = mdp.is_terminal(config)
        if whitebox:
            model.register(config)
        else:
            estimate_dynamics(model, (s, a, r, s_next, done))
        taken += 1
        in_episode += 1
        cumulative_reward += r
        actions_this_episode.append(mdp.label(a))
        impact = float(mdp.impact(config))
        report.iterations.append(IterationRecord(
            it, episode, _plain(s), _plain(mdp.label(a)), r, cumulative_reward, taken, impact))

        if mdp.reached(config):
            if report.success_cost is None or in_episode < report.success_cost:
                report.success = True
                report.success_cost = in_episode
                report.success_episode = episode
                report.success_impact = impact
                report.success_actions = _plain(actions_this_episode)
                report.success_details = {k: _plain(v) for k, v in target.details(config).items()}
            if not continue_after_success:
                report.reason = OBJECTIVE
                break
        if done or in_episode >= budget:
            if it == cap:
                break
            config = target.reset()
            if whitebox:
                model.register(config)
            episode += 1
            in_episode = 0
            actions_this_episode = []
            report.episodes += 1
    else:
        report.reason = OBJECTIVE if report.success else CAP

    if report.reason == CAP and report.success:
        report.reason = OBJECTIVE
    report.policy = _policy_snapshot(q, mdp)
    return report
