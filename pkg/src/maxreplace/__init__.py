"""Monte Carlo laboratory for maxima of stationary sequences whose
observations are randomly replaced by an independent copy or randomly
missing, with closed-form joint limit surfaces to compare against."""

from . import engine, limits, models, norming, samplers
from .config import ExperimentConfig, load_config, load_config_file
from .engine import (CONTRAST, ComparisonReport, ExperimentPlan, ExperimentResult,
                     JointEcdf, MarginalReport, brute_force_joint_cdf, compare,
                     dprime_diagnostic, estimate_joint_cdf, estimate_marginal_tail,
                     marginal_check, run_experiment, run_replication)
from .limits import (LimitSurface, expected_survival_power, gumbel_cdf,
                     lambda_exp_moment, limit_surface, missing_limit,
                     missing_marginal, replacing_limit)
from .models import (AR1, CONDITIONALLY_IID, IID, MISSING, PERIODIC_PATTERN,
                     REPLACING, BetaLaw, ChiProcess, CovarianceSpec, DiscreteLaw,
                     EvalGrid, Explicit, GaussianProcess, GenericIIDProcess,
                     LambdaLaw, Marginal, MDependent, OrderStatProcess, PointMass,
                     PowerDecay, ProcessSpec, SelectionSpec, Uniform01,
                     validate_spec)
from .norming import (Norming, chi_norming, explicit_norming, gaussian_norming,
                      order_stat_norming, quantile_norming)
from .samplers import (Path, sample_chi_path, sample_gaussian_path,
                       sample_generic_iid_path, sample_order_stat_path,
                       spectral_check)

__version__ = "0.1.0"
