"""Push-button design space exploration for pragma-tuned accelerators."""

__version__ = "0.1.0"

from .space import (  # noqa: F401
    Config,
    DesignSpace,
    ParamKind,
    ParamSpec,
    enumerate_valid,
    eval_options,
    next_value,
    parse_design_space,
    serialize_design_space,
    validate,
)
from .kernel import (  # noqa: F401
    KernelModel,
    LoopNode,
    MemStream,
    generate_design_space,
    parse_kernel_model,
    serialize_kernel_model,
    space_size,
)
from .evaluate import (  # noqa: F401
    CachingEvaluator,
    EvalCache,
    EvalResult,
    MockHlsEvaluator,
    ResultsLog,
    Status,
)
from .quality import Target, compare, finite_difference, util_penalty  # noqa: F401
from .explore import (  # noqa: F401
    Budget,
    ExploreOutcome,
    explore_bottleneck,
    explore_coordinate_descent,
    explore_exhaustive,
    explore_random,
)
from .partition import (  # noqa: F401
    Partition,
    enumerate_partitions,
    kmeans,
    profile_partition,
    select_representatives,
)
