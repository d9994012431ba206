"""Configuration-LP rounding for unrelated-machine scheduling with weighted completion time."""
from .analysis import eq6_rewrite, eq7_bound, monte_carlo
from .certificate import CertificateRow, case_tables, check_interval, check_table, search_params
from .config_lp import enumerate_configs, lp_cost_on_machine, solve_config_lp
from .graph import ShiftedClasses, build_graph, classify, sample_beta
from .harness import InstanceSpec, cmd_experiment, cmd_solve, cmd_verify_certificate, gen_instance
from .model import Assignment, Instance, smith_cost, swap_instance, total_cost
from .rounding import round_all, round_class

__all__ = [
    "Assignment", "CertificateRow", "Instance", "InstanceSpec", "ShiftedClasses", "build_graph",
    "case_tables", "check_interval", "check_table", "classify", "cmd_experiment", "cmd_solve",
    "cmd_verify_certificate", "enumerate_configs", "eq6_rewrite", "eq7_bound", "gen_instance",
    "lp_cost_on_machine", "monte_carlo", "round_all", "round_class", "sample_beta", "search_params",
    "smith_cost", "solve_config_lp", "swap_instance", "total_cost",
]
