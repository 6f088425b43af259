"""Fixed 130-slot node feature layout.

Slot numbers in :data:`FAMILIES` are 1-based and inclusive; array indices
used elsewhere are 0-based (slot ``s`` lives at index ``s - 1``).
"""
from __future__ import annotations

N_SLOTS = 130

BASIC = ["Mean", "Minimum", "Maximum", "PixelCount", "Area"]
SHAPE = [
    "Elongation", "MajorAxisLength", "MinorAxisLength", "MaximumDiameter",
    "MaximumDiameterRow", "MaximumDiameterColumn", "MeshSurface", "PixelSurface",
    "Perimeter", "PerimeterSurfaceRatio", "Sphericity",
]
FIRSTORDER = [
    "10Percentile", "90Percentile", "Energy", "TotalEnergy", "Entropy", "InterquartileRange",
    "Kurtosis", "Maximum", "MeanAbsoluteDeviation", "Mean", "Median", "Minimum", "Range",
    "RobustMeanAbsoluteDeviation", "RootMeanSquared", "Skewness", "Uniformity", "Variance",
]
GLCM = [
    "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade", "ClusterTendency",
    "Contrast", "Correlation", "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance",
    "JointEnergy", "JointEntropy", "Imc1", "Imc2", "Idm", "Idmn", "Id", "Idn",
    "InverseVariance", "MaximumProbability", "SumAverage", "SumEntropy", "SumSquares", "MCC",
]
GLDM = [
    "SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "DependenceNonUniformity",
    "DependenceNonUniformityNormalized", "GrayLevelVariance", "HighGrayLevelEmphasis",
    "LowGrayLevelEmphasis", "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis", "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis", "DependenceVariance", "DependenceEntropy",
]
GLRLM = [
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance", "RunVariance",
    "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis", "LongRunHighGrayLevelEmphasis",
]
GLSZM = [
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance", "ZoneVariance",
    "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis",
]
NGTDM = ["Busyness", "Coarseness", "Complexity", "Contrast", "Strength"]
CLINICAL = [
    "age", "sex", "height", "weight", "household_size", "smoking", "alcohol", "diet",
    "dietary_change", "falls_last_year", "fractures_last_5y",
]
BMD = [
    "L_femur_neck_tscore", "L_total_femur_tscore", "L_trochanter_tscore", "L_wards_tscore",
    "L_femur_neck_bmd", "L_total_femur_bmd", "L_trochanter_bmd", "L_wards_bmd", "pelvis_bmc",
]

# family -> (first slot, last slot, member names)
FAMILIES: dict[str, tuple[int, int, list[str]]] = {
    "basic": (1, 5, BASIC),
    "shape": (6, 16, SHAPE),
    "firstorder": (17, 34, FIRSTORDER),
    "glcm": (35, 58, GLCM),
    "gldm": (59, 73, GLDM),
    "glrlm": (74, 89, GLRLM),
    "glszm": (90, 105, GLSZM),
    "ngtdm": (106, 110, NGTDM),
    "clinical": (111, 121, CLINICAL),
    "bmd": (122, 130, BMD),
}
COMPUTED_FAMILIES = ("basic", "shape", "firstorder", "glcm")
INGESTED_FAMILIES = ("gldm", "glrlm", "glszm", "ngtdm")
SUBJECT_FAMILIES = ("clinical", "bmd")

SLOT_NAMES: list[str] = [f"{fam}_{name}" for fam, (_, _, names) in FAMILIES.items() for name in names]
SLOT_INDEX: dict[str, int] = {name: i for i, name in enumerate(SLOT_NAMES)}


def family_slice(family: str) -> slice:
    first, last, _ = FAMILIES[family]
    return slice(first - 1, last)


def _check() -> None:
    assert len(SLOT_NAMES) == N_SLOTS, len(SLOT_NAMES)
    assert len(set(SLOT_NAMES)) == N_SLOTS
    for fam, (first, last, names) in FAMILIES.items():
        assert last - first + 1 == len(names), fam


_check()
