"""Full-reference perceptual audio quality measures.

Thin Python face over the C++ core: WAV I/O, resampling, the fwSNRseg and
dLLR measures, source-separation decompositions with SDR/SIR/SAR ratios,
and the correlation statistics used to rank measures against listening
tests.
"""

from paqkit._core import (
    PaqkitError,
    __version__,
    corr_significant,
    decompose,
    dllr,
    fisher_z,
    fisher_z_inv,
    fwsnrseg,
    kendall,
    load_wav,
    pearson,
    resample,
    save_wav,
    tau_prime,
    two_f_combine,
)

__all__ = [
    "PaqkitError",
    "__version__",
    "corr_significant",
    "decompose",
    "dllr",
    "fisher_z",
    "fisher_z_inv",
    "fwsnrseg",
    "kendall",
    "load_wav",
    "pearson",
    "resample",
    "save_wav",
    "tau_prime",
    "two_f_combine",
]
