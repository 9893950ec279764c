"""simplexvqc: edge-simplex output codec laboratory for multi-class VQCs.

A K-class classifier runs on W = C(K,2) wires under exact statevector
simulation.  Wire expectations pass through a calibrated decreasing
sigmoid (tempering) and are read either as positions on the edges of a
regular (K-1)-simplex (edge codec) or as one-hot logits on the first K
wires (vertex baseline).  Training, sampling-statistics evaluation, and a
reproducible experiment grid runner are included.
"""

from .ansatz import (BLOCK_KINDS, PARAMS_PER_BLOCK, CircuitSpec,
                     backward_light_cone, build_ring, encode_input, forward,
                     n_wires_for_classes, parameter_count, ring_pairs)
from .gradients import (adjoint_wire_gradient, expectation_jacobian,
                        loss_gradient, pipeline_activations, wire_cotangent)
from .simplex import (INVALID, SimplexGeometry, build_simplex, decode_edge,
                      decode_edge_batch, decode_vertex, decode_vertex_batch,
                      edge_logits, edge_logits_and_jacobian, edge_point,
                      edge_target_values, intersect_slices, mse_loss,
                      slice_normal, training_simplex, valid_fraction_uniform)
from .statevec import (Gate, StateVector, all_z_expectations, apply_gate,
                       expectation_z, gate_matrix, sample_bitstrings)
from .tempering import (FUNCTIONS, Tempering, make_tempering, solve_scale,
                        temper, temper_grad)
from .training import (OptimizerConfig, TrainResult, eval_constant,
                       eval_threshold, eval_valid_sampling, friedman_rank,
                       init_params, learning_rate, train, win_rate)

__version__ = "0.1.0"
