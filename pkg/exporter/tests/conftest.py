import numpy as np
import pytest
from PIL import Image

torch = pytest.importorskip("torch")
torchvision = pytest.importorskip("torchvision")


@pytest.fixture(scope="session")
def seeded_alexnet():
    torch.manual_seed(20240101)
    return torchvision.models.alexnet(weights=None).eval()


@pytest.fixture(scope="session")
def seeded_vgg19():
    torch.manual_seed(20240202)
    return torchvision.models.vgg19(weights=None).eval()


@pytest.fixture(scope="session")
def tiny_manifest(tmp_path_factory):
    """Three small PNGs plus a manifest CSV in the toolkit's format."""
    root = tmp_path_factory.mktemp("imgs")
    rng = np.random.default_rng(5)
    rows = ["image_id,image_path,rating"]
    specs = [
        ("img_a", rng.integers(0, 256, (32, 48, 3))),
        ("img_b", rng.integers(0, 256, (64, 40, 3))),
        ("img_gray", np.full((50, 50, 3), 128)),
    ]
    for image_id, arr in specs:
        Image.fromarray(arr.astype(np.uint8), mode="RGB").save(
            root / f"{image_id}.png"
        )
        rows.append(f"{image_id},{image_id}.png,0.5")
    (root / "manifest.csv").write_text("\n".join(rows) + "\n")
    return root / "manifest.csv"
