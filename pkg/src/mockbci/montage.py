"""Channel layout used by the synthetic sessions.

32 EEG channels on 10-20 positions (BioSemi 32 labelling), 4 EMG channels
(flexor/extensor per forearm) and 4 EOG channels. Positions are approximate
2-D azimuthal projections on a unit head radius (x: left- / right+,
y: back- / front+), sufficient for Gaussian scalp blobs and topographic
exports.
"""

from __future__ import annotations

import numpy as np

# label -> (x, y)
EEG_POSITIONS: dict[str, tuple[float, float]] = {
    "Fp1": (-0.31, 0.95),
    "AF3": (-0.22, 0.79),
    "F7": (-0.81, 0.59),
    "F3": (-0.40, 0.51),
    "FC1": (-0.22, 0.26),
    "FC5": (-0.59, 0.27),
    "T7": (-1.00, 0.00),
    "C3": (-0.50, 0.00),
    "CP1": (-0.22, -0.26),
    "CP5": (-0.59, -0.27),
    "P7": (-0.81, -0.59),
    "P3": (-0.40, -0.51),
    "Pz": (0.00, -0.50),
    "PO3": (-0.22, -0.79),
    "O1": (-0.31, -0.95),
    "Oz": (0.00, -1.00),
    "O2": (0.31, -0.95),
    "PO4": (0.22, -0.79),
    "P4": (0.40, -0.51),
    "P8": (0.81, -0.59),
    "CP6": (0.59, -0.27),
    "CP2": (0.22, -0.26),
    "C4": (0.50, 0.00),
    "T8": (1.00, 0.00),
    "FC6": (0.59, 0.27),
    "FC2": (0.22, 0.26),
    "F4": (0.40, 0.51),
    "F8": (0.81, 0.59),
    "AF4": (0.22, 0.79),
    "Fp2": (0.31, 0.95),
    "Fz": (0.00, 0.50),
    "Cz": (0.00, 0.00),
}

EEG_LABELS: tuple[str, ...] = tuple(EEG_POSITIONS)

# left/right forearm, flexor and extensor
EMG_LABELS: tuple[str, ...] = ("EMG_LF", "EMG_LE", "EMG_RF", "EMG_RE")

# horizontal left/right, vertical up/down
EOG_LABELS: tuple[str, ...] = ("EOG_LH", "EOG_RH", "EOG_UP", "EOG_LO")

# Hjorth small-Laplacian neighbours available in this 32-channel montage.
DEFAULT_LAPLACIAN_NEIGHBORS: dict[str, tuple[str, ...]] = {
    "C3": ("FC1", "FC5", "CP1", "CP5"),
    "C4": ("FC2", "FC6", "CP2", "CP6"),
}


def gaussian_blob(center: tuple[float, float], sigma: float = 0.25) -> np.ndarray:
    """Per-EEG-channel gains of a Gaussian scalp blob at ``center``."""
    pos = np.array([EEG_POSITIONS[lab] for lab in EEG_LABELS])
    d2 = np.sum((pos - np.asarray(center)) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * sigma**2))


# blob centers used by the generator (between C3/CP1 and C4/CP2, frontal pole)
LEFT_MOTOR_CENTER = (-0.36, -0.13)
RIGHT_MOTOR_CENTER = (0.36, -0.13)
FRONTAL_CENTER = (0.0, 1.00)
