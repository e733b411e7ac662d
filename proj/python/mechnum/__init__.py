"""Dual-pricing and subsidized-exchange resource allocation."""

from mechnum._core import (
    Allocation,
    CenterValuation,
    ComposedUtility,
    DeviationOutcome,
    EsemConfig,
    EsemExit,
    EsemResult,
    LedgerEntry,
    LinkDraw,
    LinkObjective,
    ObjectiveFn,
    Scenario,
    ScenarioConfig,
    SemOutcome,
    SemQuotes,
    SolverConfig,
    TransferLedger,
    ValuationFn,
    best_response,
    brute_force_social_opt,
    cumulative_utilities,
    deviate_misreported_eps,
    deviate_scaled,
    dual_price_transfer,
    esem_run,
    kkt_residual,
    link_utility,
    noise_floor_dbm,
    noise_floor_w,
    pathloss_db,
    preferred_allocation,
    sample_scenario,
    scenario_utilities,
    sem_run,
    sem_truthful_quotes,
    solve,
    sum_valuation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
