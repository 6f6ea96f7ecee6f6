"""Matrix network autoregression for incomplete matrix-valued time series."""
from ._kernels import backend
from .baselines import StaticFit, svt_avg, svt_sep, svt_sum
from .benchmark import BenchmarkCell, BenchmarkSpec, render_table, run_benchmark
from .debias import BiasState, debias_rounds, default_rounds, estimate_bias_round1
from .errors import (
    ConfigError,
    IllConditionedBlockError,
    IllPosedWeightingError,
    MNARError,
    NumericalError,
    ShapeError,
    SingularFitError,
    StationarityError,
)
from .estimator import EstimatorConfig, FitReport, fit_mnar
from .evaluate import MetricReport, rolling_recover, test_error
from .missingness import (
    MissingModel,
    WeightedPanel,
    build_weighted_panel,
    estimate_uniform_rate,
    fit_logistic_missing,
)
from .model import (
    Covariates,
    ModelParams,
    NetworkPair,
    PanelSeries,
    check_stationarity,
    conditional_mean,
    normalize_networks,
)
from .simulate import SimConfig, SimulatedData, simulate
from .step1 import Step1Config, Step1Fit, fit_step1, hessian_sigma2, profile_objective
from .step2 import Step2Config, Step2Fit, fit_beta, fit_intercept_b, soft_threshold_svd
from .tuning import CvGrid, CvPlan, cross_validate

__version__ = "0.1.0"
