"""Hebbian attractor networks on small-world graphs: simulation and mean-field theory."""
from .harness import ExperimentConfig, run_experiment, run_theory, sweep_topology
from .metrics import info_rate, mutual_information, overlap
from .network import SynapticWeights, learn_pattern, run, step_parallel
from .patterns import PatternSet, generate_random_patterns, load_patterns, save_patterns
from .theory import find_capacity, scan_info, solve_fixed_point
from .topology import TopologyConfig, build_topology, estimate_cycle_probabilities, fc_preset, red_preset

__all__ = [
    "ExperimentConfig", "run_experiment", "run_theory", "sweep_topology",
    "info_rate", "mutual_information", "overlap",
    "SynapticWeights", "learn_pattern", "run", "step_parallel",
    "PatternSet", "generate_random_patterns", "load_patterns", "save_patterns",
    "find_capacity", "scan_info", "solve_fixed_point",
    "TopologyConfig", "build_topology", "estimate_cycle_probabilities", "fc_preset", "red_preset",
]
__version__ = "0.1.0"
