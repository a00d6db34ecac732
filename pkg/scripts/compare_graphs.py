"""Graph statistics of AGC and the baseline builders on one image's keypoints."""

import argparse

from gims import compare, formats, pipeline, trainer
from gims.pipeline import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("image", nargs="?", help="defaults to a procedural scene")
    ap.add_argument("--max-kp", type=int, default=1000)
    ap.add_argument("--eps", type=float, default=15.0)
    ap.add_argument("--k", type=int, default=4)
    a = ap.parse_args()
    img = formats.load_image(a.image) if a.image else trainer.render_scene(640, 480, 0)
    f = pipeline.prepare_image(img, RunConfig(max_kp=a.max_kp, graph_method="none"))
    rep = compare.compare(f.positions, f.descriptors, params={"epsilon": a.eps, "knn": a.k})
    print(f"{len(f.keypoints)} keypoints")
    print(rep.to_markdown())


if __name__ == "__main__":
    main()
