"""Fiber transmission simulation with classical and bi-LSTM equalization.

Pipeline: dual-polarization 16-QAM WDM transmitter, Manakov split-step
fiber propagation with lumped amplification, and a receiver that equalizes
either classically (frequency-domain CD compensation, digital
back-propagation) or with a from-scratch bidirectional LSTM classifier,
plus an analytic multiplications-per-bit complexity model.
"""

from .complexity import (
    ber,
    c_dbp,
    c_fde,
    c_pred,
    c_train,
    crossover_distance,
    delay_spread_ps,
    evm,
)
from .config import ExperimentConfig, LstmSettings, SymbolBudget, config_from_dict, load_config
from .dsp import DbpConfig, dbp, fde
from .errors import CheckpointFormatError, ConfigError, SimulationDivergedError
from .experiments import ExperimentResult, run_experiment, sweep, write_results_csv
from .fiber import AmpParams, FiberParams, LinkConfig, edfa, propagate_link, ssfm_span
from .lstm import BiLstmModel, LstmCellParams, bilstm_forward, load_model, save_model
from .training import AdamState, TrainConfig, WindowDataset, build_windows, evaluate_ber, train
from .txrx import (
    SymbolFrame,
    Waveform,
    build_polmux_frame,
    demap_hard,
    map_bits_to_qam16,
    modulate,
    rx_front_end,
    wdm_mux,
)
