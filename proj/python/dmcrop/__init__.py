"""Density-map guided cropping for aerial object detection."""

from ._core import (
    Annotation,
    BoundingBox,
    CategoryStats,
    CropRegion,
    Dataset,
    Detection,
    Error,
    ImageRecord,
    ScaleStats,
    area_class,
    backproject,
    connected_components,
    crops_from_mask,
    dataset_stats,
    density_mask,
    evaluate,
    fuse,
    iou,
    load_coco,
    nms,
    oracle_detect,
    parse_coco,
    parse_crop_manifest,
    read_density,
    render_density,
    run_oracle_pipeline,
    sigma_classwise,
    uniform_grid,
    upsample_bicubic,
    write_crop_manifest,
    write_density,
)

__all__ = [name for name in dir() if not name.startswith("_")]
