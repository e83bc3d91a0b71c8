"""Lossy time-series compression with a hard bound on ACF/PACF deviation."""
from .core import (
    AggKind,
    CompressedSeries,
    CompressionReport,
    QualityMeasure,
    StatKind,
    TimeSeries,
    measure,
)
from .acf import acf_scratch, extract_aggregates, get_acf, pacf_from_acf
from .cameo import CompressorConfig, Engine, compress, decompress
from .parallel import PartitionPlan, compress_coarse, compress_fine, plan_partitions

__version__ = "0.1.0"
