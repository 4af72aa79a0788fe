"""Game-theoretic power control on multi-carrier interference channels."""
from .analysis import (AnalysisReport, BoundSet, analyze, compute_bounds, is_p_matrix, matrix_a,
                       matrix_b, matrix_d, spectral_radius)
from .best_response import (Allocation, br_fixed_priced, br_opportunistic, br_power_min,
                            br_priced, br_waterfill)
from .engine import GameConfig, RunResult, freeze_fixed_prices, run, uniqueness_probe
from .network import (Scenario, UserParams, effective_interference, generate_scenario, interference,
                      rates, scale_user_channels, sinr, user_rate)
from .single_carrier import opc_step, tpc_feasible, tpc_step

__version__ = "0.1.0"
