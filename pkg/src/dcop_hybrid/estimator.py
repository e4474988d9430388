"""scikit-learn style front end for hybrid solving.

``HybridSolver`` exposes the initializer/solver pair and its run settings as
estimator parameters, so it works with ``get_params``/``set_params``,
``sklearn.base.clone`` and ``ParameterGrid``. ``fit`` takes a problem
instance (or anything :func:`check_instance` accepts) and ``predict``
returns the final assignment.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_instance, check_probability, check_seed
from .engine import DEFAULT_HOLD_BOUND, StopPolicy
from .experiments import run_hybrid
from .initializers import INITIALIZERS
from .model import global_cost
from .solvers import SOLVERS, SolverParams


class HybridSolver(BaseEstimator):
    """Initializer followed by an iterative local-search solver.

    Parameters
    ----------
    init : {"random", "zsla", "ssla"}
    solver : {"dsa", "mgm", "mgm2", "acls", "aclsub", "mcsmgm"}
    p : float
        Activation/adoption probability of the solver.
    offer_prob : float
        Probability that an MGM-2 agent becomes an offerer.
    stall_rounds, max_rounds : int
        Stop once the best cost has not improved for ``stall_rounds`` rounds,
        or after ``max_rounds`` rounds.
    hold_bound : int
        Maximum SSLA deferrals per agent.
    random_state : int, numpy Generator or None
    trace_cpa : bool
        Keep the distinct assignments visited during the run.

    Attributes
    ----------
    record_ : RunRecord
    assignment_ : ndarray of int
    cost_ : final global cost
    initial_cost_ : cost of the initializer's assignment
    n_iter_ : convergence round
    """

    def __init__(self, init="ssla", solver="mgm2", p=0.5, offer_prob=0.5, stall_rounds=100,
                 max_rounds=2000, hold_bound=DEFAULT_HOLD_BOUND, random_state=None,
                 trace_cpa=False):
        self.init = init
        self.solver = solver
        self.p = p
        self.offer_prob = offer_prob
        self.stall_rounds = stall_rounds
        self.max_rounds = max_rounds
        self.hold_bound = hold_bound
        self.random_state = random_state
        self.trace_cpa = trace_cpa

    def _validate_params(self):
        if self.init not in INITIALIZERS:
            raise ValueError(f"init must be one of {sorted(INITIALIZERS)}, got {self.init!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {sorted(SOLVERS)}, got {self.solver!r}")
        params = SolverParams(check_probability(self.p, "p"),
                              check_probability(self.offer_prob, "offer_prob"))
        return params, StopPolicy(int(self.stall_rounds), int(self.max_rounds))

    def fit(self, X, y=None):
        inst = check_instance(X)
        params, stop = self._validate_params()
        seed = check_seed(self.random_state)
        self.record_ = run_hybrid(self.init, self.solver, inst, seed, stop, params,
                                  int(self.hold_bound), bool(self.trace_cpa))
        self.assignment_ = np.asarray(self.record_.final_assignment.values, dtype=int)
        self.cost_ = self.record_.final_cost
        self.initial_cost_ = self.record_.initial_cost
        self.n_iter_ = self.record_.convergence_round
        self.n_agents_ = inst.agent_count
        return self

    def predict(self, X=None):
        check_is_fitted(self, "assignment_")
        if X is not None and check_instance(X).agent_count != self.n_agents_:
            raise ValueError("X does not match the problem this solver was fitted on")
        return self.assignment_.copy()

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def score(self, X, y=None):
        """Negated global cost of the fitted assignment on ``X`` (higher is better)."""
        check_is_fitted(self, "assignment_")
        return -global_cost(self.assignment_.tolist(), check_instance(X))
