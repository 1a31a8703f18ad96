"""Forensic image analysis toolkit.

Visual forensic tools (ELA, FFT, noise residual, zoom), answer/tool-call wire
format parsing, rollout reward computation with group-relative advantages,
gain-driven tool path planning, and detection/localization metrics.

Images are numpy arrays: uint8 (h, w, 3) for color, float32 (h, w) for
analysis maps, uint8 or bool (h, w) for masks. File-level pipelines (corpus
building, batch evaluation, dataset degradation) live in the `forgekit`
command-line tool.
"""

from ._forgekit import (
    Box,
    ForgekitError,
    ParsedAnswer,
    __version__,
    bbox_eval,
    binarize_map,
    box_fill_mask,
    box_iou,
    clamp_box,
    degrade,
    detect_tool_usage,
    detection_metrics,
    ela,
    fft_map,
    grpo_advantages,
    hungarian_iou,
    load_gray,
    load_image,
    map_to_detection,
    mask_to_boxes,
    mask_to_detection,
    noise_residual,
    parse_answer,
    parse_tool_call,
    pixel_metrics,
    render_answer,
    render_tool_call,
    save_png,
    score_group,
    score_sample,
    select_and_rank,
    synthesize_paths,
    weighted_average,
    zoom_box,
    zoom_in,
)

__all__ = [
    "Box",
    "ForgekitError",
    "ParsedAnswer",
    "__version__",
    "bbox_eval",
    "binarize_map",
    "box_fill_mask",
    "box_iou",
    "clamp_box",
    "degrade",
    "detect_tool_usage",
    "detection_metrics",
    "ela",
    "fft_map",
    "grpo_advantages",
    "hungarian_iou",
    "load_gray",
    "load_image",
    "map_to_detection",
    "mask_to_boxes",
    "mask_to_detection",
    "noise_residual",
    "parse_answer",
    "parse_tool_call",
    "pixel_metrics",
    "render_answer",
    "render_tool_call",
    "save_png",
    "score_group",
    "score_sample",
    "select_and_rank",
    "synthesize_paths",
    "weighted_average",
    "zoom_box",
    "zoom_in",
]
