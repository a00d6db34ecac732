"""Graph-based image matching: adaptive keypoint graphs, a GNN/attention encoder,
Sinkhorn assignment and homography evaluation on numpy."""

__version__ = "0.1.0"
