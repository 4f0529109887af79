from .quality import dice, gaussian_window, hist_cc, mae, pearson_cc, psnr, ssim
from .fsim import fsim, phase_congruency, scharr_gradient
from .frechet import (
    FrechetInfo,
    downsampled_pixel_features,
    frechet_gaussian,
    frechet_gaussian_info,
    gaussian_fit,
)
from .mannwhitney import mann_whitney_u
from .report import (
    CT_DYNAMIC_RANGE,
    CT_WINDOW,
    MR_DYNAMIC_RANGE,
    MetricReport,
    aggregate_per_slice,
    dice_grid,
    dice_grid_to_csv,
    dice_grid_to_png,
    dynamic_range_for,
    evaluate_volume_pair,
    report_summary_json,
    report_to_csv,
    report_to_json_dict,
)

__all__ = [
    "ssim",
    "psnr",
    "mae",
    "hist_cc",
    "pearson_cc",
    "dice",
    "gaussian_window",
    "fsim",
    "phase_congruency",
    "scharr_gradient",
    "FrechetInfo",
    "frechet_gaussian",
    "frechet_gaussian_info",
    "gaussian_fit",
    "downsampled_pixel_features",
    "mann_whitney_u",
    "MetricReport",
    "aggregate_per_slice",
    "evaluate_volume_pair",
    "report_to_csv",
    "report_to_json_dict",
    "report_summary_json",
    "dice_grid",
    "dice_grid_to_csv",
    "dice_grid_to_png",
    "dynamic_range_for",
    "CT_WINDOW",
    "CT_DYNAMIC_RANGE",
    "MR_DYNAMIC_RANGE",
]
