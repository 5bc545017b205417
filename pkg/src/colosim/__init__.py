"""colosim: a seedable filter-score scheduler simulator for studying
co-location attacks, migration defenses and randomized-filter mitigation."""

from .attack import AttackConfig, is_colocated, repttack_specs
from .cluster import (CapacityError, ClusterGenConfig, ClusterState,
                      ConfigurationError, Node, NotFoundError, ResourceVector,
                      allocate, generate_cluster, release)
from .config import ExperimentConfig, config_from_dict, load_config
from .experiment import (ExperimentResult, derive_seed, run, run_with_audit,
                         sweep)
from .migration import (MigrationConfig, OverlapEntry, lifetime_success,
                        migrate_step, record_overlap)
from .scheduler import (ScheduleDecision, SchedulerConfig, filter_mitigated,
                        filter_nodes, schedule, score, skip)
from .workload import (AffinityPattern, AffinityRule, AppSpec, WorkloadConfig,
                       generate_app_spec, generate_app_spec_patterned,
                       victim_sample)

__version__ = "0.1.0"
