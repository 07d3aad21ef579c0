"""Dense packings of equal disks: compaction, billiards refinement and contact analysis."""

__version__ = "0.1.0"
