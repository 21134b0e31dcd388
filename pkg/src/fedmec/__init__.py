"""fedmec: deterministic simulator of federated Double-DQN control for
mobile-edge caching and computation offloading."""

from .agent import (AdamState, AgentConfig, DqnAgent, MLPParams, ReplayBuffer,
                    adam_step, ddqn_target, mlp_backward, mlp_forward,
                    select_action)
from .caching import (CacheState, ContentCatalog, baseline_cache_step,
                      cache_env_step, optimal_static_hitrate, sample_request,
                      zipf_pmf)
from .federated import (ClientUpdate, CommsLedger, FedConfig, centralized_train,
                        fed_round, fedavg, load_checkpoint, sample_clients,
                        save_checkpoint, transition_record_bits)
from .harness import (ConfigError, ExperimentSpec, MetricsRecord, MetricsReport,
                      derive_stream, emit_metrics, load_config, run_experiment,
                      spec_from_dict)
from .offloading import (ControlAction, EdgeConfig, EpochOutcome, NetworkState,
                         OffloadConfig, TaskSpec, UEConfig, UtilityWeights,
                         baseline_offload_action, generate_arrival,
                         local_cpu_freq, local_exec_time, offload_env_step,
                         offload_exec_time, utility)
from .wireless import (ChannelModel, WirelessConfig, birth_death_matrix,
                       channel_step, shannon_rate, stationary_distribution)

__version__ = "0.1.0"
