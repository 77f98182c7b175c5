"""Diffusion adaptation with logarithmic-cost algorithms over sparse Volterra networks."""

from .adapt import (AlgorithmSpec, Family, Mode, NeighborDatum, NumericFailure, adapt_batch, adapt_step,
                    combine, error, error_nonlinearity, log_cost, zero_attraction_grad)
from .noise import NoiseSpec, sample_gaussian, sample_sas
from .sim import (Experiment, ExperimentSpec, NmsdTrace, NodeState, NoiseConfig, PlantConfig,
                  TopologyConfig, generate_measurement, monte_carlo, nmsd, run_once)
from .topology import (NetworkTopology, metropolis_weights, random_connected_graph,
                       uniform_weights)
from .volterra import expand, expanded_length, make_sparse_plant, volterra_output

__version__ = "0.1.0"
