"""Two-step GJR-GARCH / DCC-X correlation models with exogenous regressors."""
from corrx.kernels import BACKEND
from corrx.data import (
    AlignedDataset,
    RawPanel,
    ReturnPanel,
    Series,
    align,
    descriptive_stats,
    interaction,
    load_raw_panel,
    log_returns,
    regime_dummy,
    yield_changes,
)
from corrx.garch import GarchFit, GarchOptions, GjrParams, degarch, fit_gjr, gjr_filter, gjr_loglik
from corrx.dcc import (
    DccFit,
    DccOptions,
    DccParams,
    DccSpec,
    ModelFit,
    dcc_filter,
    dcc_loglik,
    expand_break_spec,
    fit_dcc,
    lr_test,
    two_step_fit,
)
from corrx.forecast import CovarianceForecast, ForecastSet, forecast_step, oos_run
from corrx.evaluation import (
    LossMatrix,
    McsResult,
    frobenius_loss,
    gmv_loss,
    gmv_weights,
    mcs,
    qlike_loss,
    rpv_loss,
)
from corrx.diagnostics import ljung_box, rolling_correlation, rolling_dccx
from corrx.irf import IrfResult, impulse_response
from corrx.simulate import SimConfig, default_config, simulate_exog, simulate_panel

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
