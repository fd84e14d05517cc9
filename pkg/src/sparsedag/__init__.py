"""DAG-based BFT atomic broadcast with verifiably sampled sparse edges,
plus the seeded discrete-event harness that measures it."""

from .alba import (AlbaParams, AlbaProof, ProofSearchExhausted, alba_prove,
                   alba_verify, params_for_chain_length, select_params)
from .consensus import (MenaceTracker, ProtocolConfig, Validator,
                        check_menacing, direct_commit_threshold,
                        validate_vertex)
from .dag import (DagStore, DuplicateSlot, MissingParents, Vertex,
                  anchor_source, genesis_vertices, is_anchor_vertex)
from .inclusion import fraction_within, inclusion_latency_sim, merge_hists
from .rb import ReliableBroadcast
from .rng import Stream
from .runner import (AuditFailed, ExperimentConfig, MetricsRecord, export_csv,
                     export_inclusion_csv, run_experiment, run_experiment_full,
                     sweep)
from .sampling import (InsufficientQuorum, SamplingProof, validate_sample,
                       verifiably_sample)
from .simnet import NetConfig, Network, Stalled, sample_latency_ms
from .traffic import (TrafficLedger, UnknownScheme, certificate_size,
                      table_egress_bytes, vertex_wire_size)
from .vc import Opening, vc_commit, vc_prove, vc_verify

__version__ = "0.1.0"
