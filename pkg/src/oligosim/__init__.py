"""Evolutionary user dynamics and price competition in an oligopoly market."""
from .errors import (ConfigError, DomainError, InvalidParameterError, OligosimError,
                     PotentialDecreaseError, SolverError, StepSizeError, TargetRangeError)
from .market import (AlphaProfile, MarketConfig, PriceProfile, Region, alpha_of, classify,
                     discriminant, load_config, region_of, user_utility)
from .dynamics import (PopulationState, Trajectory, ess_perturb_check, integrate,
                       mean_dynamics_rhs, switch_rates)
from .stationary import StationaryPoint, stationary_point
from .pricing import (Branch, EquilibriumResult, best_response, best_response_dynamics,
                      first_mover, l0, mu_star, potential, revenue, round_robin, solve_mu,
                      symmetric_ne)
from .regulation import (EfficiencyReport, SweepSeries, aggregate_utility, efficiency_report,
                         find_parameter, neutral_cost, sweep, total_revenue_at_ne)

__version__ = "0.1.0"
