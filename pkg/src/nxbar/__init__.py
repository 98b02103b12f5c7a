"""nxbar: multibit neural inference on simulated N-ary memristive crossbars.

Weights quantized onto N equidistant levels are programmed as resistances,
inputs flow in as currents, and the exact digital MVM result is recovered
from the accumulated voltages by a closed-form rescaling. Includes software
MLP training, crossbar-backed inference with tiling, and seeded Monte-Carlo
studies of quantization and device-noise error.
"""

from ._backend import HAVE_COMPILED, backend_name
from .crossbar import (
    CrossbarTile,
    EncodingParams,
    MvmResult,
    crossbar_matvec,
    encode_input,
    program_tile,
    retrieve,
    simulate_tile,
    tile_count,
    weight_to_resistance_map,
)
from .device import (
    DeviceProfile,
    NoiseSpec,
    ResistanceLadder,
    apply_systematic,
    cell_states,
    default_profile,
    ideal_ladder,
    load_profile,
    save_profile,
)
from .nn import (
    CrossbarInferenceConfig,
    CrossbarMlp,
    Mlp,
    TrainConfig,
    accuracy,
    forward,
    forward_crossbar,
    init_mlp,
    train,
)
from .quantizer import (
    LevelSet,
    QuantizedMatrix,
    brute_force_oracle,
    powell_minimize,
    quantize,
    sse,
)

__version__ = "0.1.0"
